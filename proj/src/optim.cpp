#include "dacl/optim.hpp"

#include <cmath>

namespace dacl {

double schedule_lr(long step, long total_steps, long warmup_steps, double base_lr) {
    require(step >= 0 && step < total_steps, "schedule_lr: step out of range");
    require(warmup_steps >= 0 && warmup_steps < total_steps, "schedule_lr: warmup out of range");
    if (step < warmup_steps)
        return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    double progress = static_cast<double>(step - warmup_steps) /
                      static_cast<double>(total_steps - warmup_steps);
    return base_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

namespace {

double norm_of(const double* v, std::size_t len) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

void check_grads_finite(const ParamRef& p) {
    for (std::size_t i = 0; i < p.len; ++i)
        if (!std::isfinite(p.grad[i]))
            throw ContractError("optimizer: non-finite gradient in tensor " + p.name);
}

std::vector<double>& buffer_for(std::vector<std::vector<double>>& buffers,
                                std::size_t idx, std::size_t len) {
    if (buffers.size() <= idx) buffers.resize(idx + 1);
    if (buffers[idx].size() != len) buffers[idx].assign(len, 0.0);
    return buffers[idx];
}

} // namespace

void LarsOptimizer::step(const std::vector<ParamRef>& params, double lr) {
    for (std::size_t t = 0; t < params.size(); ++t) {
        const ParamRef& p = params[t];
        check_grads_finite(p);
        std::vector<double>& buf = buffer_for(buffers_, t, p.len);
        double wd = p.exclude_from_trust ? 0.0 : cfg_.weight_decay;
        double local_lr = 1.0;
        if (!p.exclude_from_trust) {
            double wn = norm_of(p.value, p.len);
            double gn = norm_of(p.grad, p.len);
            if (wn > 0.0 && gn > 0.0)
                local_lr = cfg_.trust_coefficient * wn / (gn + wd * wn);
        }
        for (std::size_t i = 0; i < p.len; ++i) {
            buf[i] = cfg_.momentum * buf[i] + local_lr * lr * (p.grad[i] + wd * p.value[i]);
            p.value[i] -= buf[i];
        }
    }
    ++steps_;
}

void SgdMomentum::step(const std::vector<ParamRef>& params, double lr) {
    for (std::size_t t = 0; t < params.size(); ++t) {
        const ParamRef& p = params[t];
        check_grads_finite(p);
        std::vector<double>& buf = buffer_for(buffers_, t, p.len);
        for (std::size_t i = 0; i < p.len; ++i) {
            buf[i] = cfg_.momentum * buf[i] + p.grad[i] + cfg_.weight_decay * p.value[i];
            p.value[i] -= lr * buf[i];
        }
    }
}

std::vector<ParamRef> mlp_param_refs(MlpParams& params, const MlpGrads& grads,
                                     const std::string& prefix) {
    require(grads.layers.size() == params.layers.size(), "mlp_param_refs: grads/params mismatch");
    std::vector<ParamRef> refs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerParams& lp = params.layers[l];
        const LayerParams& gl = grads.layers[l];
        std::string base = prefix + ".layers." + std::to_string(l) + ".";
        refs.push_back({base + "weight", lp.weight.data(), gl.weight.data(),
                        lp.weight.size(), false});
        refs.push_back({base + "bias", lp.bias.data(), gl.bias.data(), lp.bias.size(), true});
        if (lp.bn) {
            refs.push_back({base + "bn.gamma", lp.bn->gamma.data(), gl.bn->gamma.data(),
                            lp.bn->gamma.size(), true});
            refs.push_back({base + "bn.beta", lp.bn->beta.data(), gl.bn->beta.data(),
                            lp.bn->beta.size(), true});
        }
    }
    return refs;
}

} // namespace dacl
