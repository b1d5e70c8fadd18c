#include "dacl/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace dacl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void MlpSpec::validate() const {
    require(widths.size() >= 2, "MlpSpec: need at least input and output widths");
    for (std::size_t w : widths) require(w >= 1, "MlpSpec: zero width");
    require(batchnorm.size() == num_layers(), "MlpSpec: batchnorm flags mismatch layer count");
}

MlpSpec MlpSpec::make(std::vector<std::size_t> widths, bool final_linear) {
    MlpSpec s;
    s.widths = std::move(widths);
    s.batchnorm.assign(s.widths.size() - 1, true);
    s.final_linear_only = final_linear;
    s.validate();
    return s;
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    p.layers.resize(spec.num_layers());
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        std::size_t in = spec.widths[l], out = spec.widths[l + 1];
        LayerParams& lp = p.layers[l];
        lp.weight = Matrix(in, out);
        double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        for (std::size_t i = 0; i < lp.weight.size(); ++i)
            lp.weight.data()[i] = std_dev * rng.standard_normal();
        lp.bias.assign(out, 0.0);
        if (spec.layer_has_bn(l)) {
            BatchNormParams bn;
            bn.gamma.assign(out, 1.0);
            bn.beta.assign(out, 0.0);
            bn.running_mean.assign(out, 0.0);
            bn.running_var.assign(out, 1.0);
            lp.bn = std::move(bn);
        }
    }
    return p;
}

namespace {

// Linear + optional batchnorm + optional ReLU for one layer.
Matrix layer_forward(const MlpParams& params, std::size_t l, const Matrix& x,
                     Mode mode, LayerCache* lc) {
    const LayerParams& lp = params.layers[l];
    Matrix u = matmul(x, lp.weight);
    const std::size_t b = u.rows(), f = u.cols();
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < f; ++j) u(i, j) += lp.bias[j];
    if (lc) lc->pre_act = u;

    Matrix y = std::move(u);
    if (params.spec.layer_has_bn(l)) {
        const BatchNormParams& bn = *lp.bn;
        if (mode == Mode::train) {
            require(b >= 2, "forward: train-mode batchnorm needs batch >= 2");
            std::vector<double> mean(f, 0.0), var(f, 0.0), istd(f);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < f; ++j) mean[j] += y(i, j);
            for (std::size_t j = 0; j < f; ++j) mean[j] /= static_cast<double>(b);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < f; ++j) {
                    double d = y(i, j) - mean[j];
                    var[j] += d * d;
                }
            for (std::size_t j = 0; j < f; ++j) {
                var[j] /= static_cast<double>(b);
                istd[j] = 1.0 / std::sqrt(var[j] + bn.epsilon);
            }
            Matrix xhat(b, f);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < f; ++j) {
                    double xh = (y(i, j) - mean[j]) * istd[j];
                    xhat(i, j) = xh;
                    y(i, j) = bn.gamma[j] * xh + bn.beta[j];
                }
            if (lc) {
                lc->bn_xhat = std::move(xhat);
                lc->batch_mean = std::move(mean);
                lc->batch_var = std::move(var);
            }
        } else {
            std::vector<double> scale_j(f), shift_j(f);
            for (std::size_t j = 0; j < f; ++j) {
                double istd = 1.0 / std::sqrt(bn.running_var[j] + bn.epsilon);
                scale_j[j] = bn.gamma[j] * istd;
                shift_j[j] = bn.beta[j] - bn.running_mean[j] * scale_j[j];
            }
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < f; ++j)
                    y(i, j) = scale_j[j] * y(i, j) + shift_j[j];
        }
    }
    if (params.spec.layer_has_act(l)) {
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y.data()[i] < 0.0) y.data()[i] = 0.0;
    }
    if (lc) lc->post_act = y;
    return y;
}

Matrix run_layers(const MlpParams& params, Matrix x, std::size_t first, std::size_t last,
                  Mode mode, ForwardCache* cache) {
    for (std::size_t l = first; l < last; ++l)
        x = layer_forward(params, l, x, mode, cache ? &cache->layers[l] : nullptr);
    return x;
}

void check_forward_args(const MlpParams& params, const Matrix& x, Mode mode,
                        ForwardCache* cache) {
    params.spec.validate();
    require(x.cols() == params.spec.input_dim(), "forward: input dim mismatch");
    // caches exist only for train-mode forwards
    require(mode == Mode::train ? cache != nullptr : cache == nullptr,
            "forward: cache is required in train mode and forbidden in eval mode");
    if (mode == Mode::train) {
        for (std::size_t l = 0; l < params.spec.num_layers(); ++l)
            if (params.spec.layer_has_bn(l))
                require(x.rows() >= 2, "forward: train-mode batchnorm needs batch >= 2");
    }
}

} // namespace

Matrix forward(const MlpParams& params, const Matrix& x, Mode mode, ForwardCache* cache) {
    check_forward_args(params, x, mode, cache);
    if (cache) {
        *cache = ForwardCache{};
        cache->input = x;
        cache->layers.resize(params.spec.num_layers());
    }
    return run_layers(params, x, 0, params.spec.num_layers(), mode, cache);
}

Matrix forward_mixed_hidden(const MlpParams& params, const Matrix& x,
                            std::span<const std::size_t> partner_rows,
                            std::span<const double> lambdas,
                            std::size_t mix_layer, Mode mode, ForwardCache* cache) {
    check_forward_args(params, x, mode, cache);
    require(mix_layer < params.spec.num_layers(), "forward_mixed_hidden: mix layer out of range");
    require(partner_rows.size() == x.rows() && lambdas.size() == x.rows(),
            "forward_mixed_hidden: partner/lambda length mismatch");
    for (std::size_t i = 0; i < x.rows(); ++i) {
        require(partner_rows[i] != i, "forward_mixed_hidden: row is its own partner");
        require(partner_rows[i] < x.rows(), "forward_mixed_hidden: partner out of range");
        require(lambdas[i] >= 0.0 && lambdas[i] <= 1.0, "forward_mixed_hidden: lambda outside [0,1]");
    }
    if (cache) {
        *cache = ForwardCache{};
        cache->input = x;
        cache->layers.resize(params.spec.num_layers());
        cache->mix_layer = static_cast<int>(mix_layer);
        cache->mix_partner.assign(partner_rows.begin(), partner_rows.end());
        cache->mix_lambda.assign(lambdas.begin(), lambdas.end());
    }
    Matrix v = run_layers(params, x, 0, mix_layer, mode, cache);
    if (cache) cache->pre_mix = v;
    Matrix mixed(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        double lam = lambdas[i];
        const std::size_t q = partner_rows[i];
        for (std::size_t j = 0; j < v.cols(); ++j)
            mixed(i, j) = lam * v(i, j) + (1.0 - lam) * v(q, j);
    }
    if (cache) cache->post_mix = mixed;
    return run_layers(params, std::move(mixed), mix_layer, params.spec.num_layers(), mode, cache);
}

void commit_running_stats(MlpParams& params, const ForwardCache& cache) {
    require(cache.layers.size() == params.spec.num_layers(),
            "commit_running_stats: cache/params mismatch");
    for (std::size_t l = 0; l < params.spec.num_layers(); ++l) {
        if (!params.spec.layer_has_bn(l)) continue;
        BatchNormParams& bn = *params.layers[l].bn;
        const LayerCache& lc = cache.layers[l];
        require(lc.batch_mean.size() == bn.running_mean.size(),
                "commit_running_stats: cache has no batch statistics for layer " + std::to_string(l));
        for (std::size_t j = 0; j < bn.running_mean.size(); ++j) {
            bn.running_mean[j] = bn.momentum * bn.running_mean[j] + (1.0 - bn.momentum) * lc.batch_mean[j];
            bn.running_var[j] = bn.momentum * bn.running_var[j] + (1.0 - bn.momentum) * lc.batch_var[j];
        }
    }
}

namespace {

// Backward through one layer; returns dX given dY (gradient at post_act).
Matrix layer_backward(const MlpParams& params, std::size_t l, const ForwardCache& cache,
                      Matrix dy, MlpGrads& grads) {
    const LayerParams& lp = params.layers[l];
    const LayerCache& lc = cache.layers[l];
    const std::size_t b = dy.rows(), f = dy.cols();

    if (params.spec.layer_has_act(l)) {
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < f; ++j)
                if (lc.post_act(i, j) <= 0.0) dy(i, j) = 0.0;
    }

    Matrix du;
    if (params.spec.layer_has_bn(l)) {
        const BatchNormParams& bn = *lp.bn;
        require(!lc.batch_mean.empty(), "backward: cache lacks train-mode batch statistics");
        LayerParams& gl = grads.layers[l];
        BatchNormParams& gbn = *gl.bn;
        const double inv_b = 1.0 / static_cast<double>(b);
        std::vector<double> istd(f), sum_dxhat(f, 0.0), sum_dxhat_xhat(f, 0.0), sum_centered(f, 0.0);
        for (std::size_t j = 0; j < f; ++j)
            istd[j] = 1.0 / std::sqrt(lc.batch_var[j] + bn.epsilon);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < f; ++j) {
                double g = dy(i, j);
                double xh = lc.bn_xhat(i, j);
                gbn.gamma[j] += g * xh;
                gbn.beta[j] += g;
                double dxh = g * bn.gamma[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xh;
                sum_centered[j] += xh / istd[j];
            }
        }
        // dvar and dmean of the batch-statistics path.
        std::vector<double> dvar(f), dmean(f);
        for (std::size_t j = 0; j < f; ++j) {
            dvar[j] = -0.5 * istd[j] * istd[j] * sum_dxhat_xhat[j];
            dmean[j] = -istd[j] * sum_dxhat[j] + dvar[j] * (-2.0 * inv_b) * sum_centered[j];
        }
        du = Matrix(b, f);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < f; ++j) {
                double dxh = dy(i, j) * bn.gamma[j];
                double centered = lc.bn_xhat(i, j) / istd[j];
                du(i, j) = dxh * istd[j] + dvar[j] * 2.0 * inv_b * centered + dmean[j] * inv_b;
            }
        }
    } else {
        du = std::move(dy);
    }

    LayerParams& gl = grads.layers[l];
    for (std::size_t j = 0; j < f; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < b; ++i) s += du(i, j);
        gl.bias[j] += s;
    }
    const Matrix& xin = (static_cast<int>(l) == cache.mix_layer)
                            ? cache.post_mix
                            : (l == 0 ? cache.input : cache.layers[l - 1].post_act);
    gl.weight = add(gl.weight, matmul_at(xin, du));
    return matmul_bt(du, lp.weight);
}

MlpGrads zero_grads(const MlpParams& params) {
    MlpGrads g;
    g.layers.resize(params.spec.num_layers());
    for (std::size_t l = 0; l < params.spec.num_layers(); ++l) {
        const LayerParams& lp = params.layers[l];
        g.layers[l].weight = Matrix(lp.weight.rows(), lp.weight.cols());
        g.layers[l].bias.assign(lp.bias.size(), 0.0);
        if (lp.bn) {
            BatchNormParams bn;
            bn.gamma.assign(lp.bn->gamma.size(), 0.0);
            bn.beta.assign(lp.bn->beta.size(), 0.0);
            g.layers[l].bn = std::move(bn);
        }
    }
    return g;
}

} // namespace

BackwardResult backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dh) {
    require(cache.layers.size() == params.spec.num_layers(), "backward: cache/params mismatch");
    require(dh.rows() == cache.input.rows() && dh.cols() == params.spec.output_dim(),
            "backward: upstream gradient shape mismatch");
    MlpGrads grads = zero_grads(params);
    Matrix d = dh;
    const std::size_t n_layers = params.spec.num_layers();
    const std::size_t mix_at = cache.mix_layer < 0 ? n_layers + 1
                                                   : static_cast<std::size_t>(cache.mix_layer);
    for (std::size_t l = n_layers; l-- > 0;) {
        d = layer_backward(params, l, cache, std::move(d), grads);
        if (l == mix_at) {
            // Scatter through the mix: both operands receive gradient.
            Matrix dv(d.rows(), d.cols());
            for (std::size_t i = 0; i < d.rows(); ++i) {
                double lam = cache.mix_lambda[i];
                std::size_t q = cache.mix_partner[i];
                for (std::size_t j = 0; j < d.cols(); ++j) {
                    dv(i, j) += lam * d(i, j);
                    dv(q, j) += (1.0 - lam) * d(i, j);
                }
            }
            d = std::move(dv);
        }
    }
    return {std::move(grads), std::move(d)};
}

// --- checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'A', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
};

void put_u16(std::string& out, std::uint16_t v) { out.append(reinterpret_cast<char*>(&v), 2); }
void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }

std::vector<NamedTensor> collect_tensors(const MlpParams& p) {
    std::vector<NamedTensor> out;
    auto vec1 = [](std::string name, const std::vector<double>& v) {
        return NamedTensor{std::move(name), {static_cast<std::uint32_t>(v.size())}, v};
    };
    std::vector<double> widths(p.spec.widths.begin(), p.spec.widths.end());
    out.push_back(vec1("meta.widths", widths));
    std::vector<double> bn_mask(p.spec.batchnorm.size());
    for (std::size_t i = 0; i < bn_mask.size(); ++i) bn_mask[i] = p.spec.batchnorm[i] ? 1.0 : 0.0;
    out.push_back(vec1("meta.batchnorm", bn_mask));
    out.push_back(vec1("meta.final_linear_only", {p.spec.final_linear_only ? 1.0 : 0.0}));
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const LayerParams& lp = p.layers[l];
        std::string prefix = "layers." + std::to_string(l) + ".";
        NamedTensor w;
        w.name = prefix + "weight";
        w.dims = {static_cast<std::uint32_t>(lp.weight.rows()),
                  static_cast<std::uint32_t>(lp.weight.cols())};
        w.values.assign(lp.weight.data(), lp.weight.data() + lp.weight.size());
        out.push_back(std::move(w));
        out.push_back(vec1(prefix + "bias", lp.bias));
        if (lp.bn) {
            out.push_back(vec1(prefix + "bn.gamma", lp.bn->gamma));
            out.push_back(vec1(prefix + "bn.beta", lp.bn->beta));
            out.push_back(vec1(prefix + "bn.running_mean", lp.bn->running_mean));
            out.push_back(vec1(prefix + "bn.running_var", lp.bn->running_var));
            out.push_back(vec1(prefix + "bn.momentum", {lp.bn->momentum}));
            out.push_back(vec1(prefix + "bn.epsilon", {lp.bn->epsilon}));
        }
    }
    return out;
}

} // namespace

void save_checkpoint(const MlpParams& params, const std::string& path) {
    std::vector<NamedTensor> tensors = collect_tensors(params);
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        put_u16(buf, static_cast<std::uint16_t>(t.name.size()));
        buf.append(t.name);
        buf.push_back(static_cast<char>(t.dims.size()));
        for (std::uint32_t d : t.dims) put_u32(buf, d);
        buf.append(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(double));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

namespace {

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}
    const char* take(std::size_t n) {
        if (pos_ + n > data_.size())
            throw IoError("load_checkpoint: truncated file " + path_);
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint16_t u16() { std::uint16_t v; std::memcpy(&v, take(2), 2); return v; }
    std::uint32_t u32() { std::uint32_t v; std::memcpy(&v, take(4), 4); return v; }
    std::uint8_t u8() { return static_cast<std::uint8_t>(*take(1)); }

private:
    std::string data_;
    std::string path_;
    std::size_t pos_ = 0;
};

const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const NamedTensor& t : ts)
        if (t.name == name) return t;
    throw IoError("load_checkpoint: missing tensor " + name);
}

std::size_t tensor_len(const NamedTensor& t) {
    std::size_t n = 1;
    for (std::uint32_t d : t.dims) n *= d;
    return n;
}

} // namespace

MlpParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);

    const char* magic = r.take(4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("load_checkpoint: bad magic bytes in " + path);
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError("load_checkpoint: unsupported version " + std::to_string(version) +
                      " in " + path);
    std::uint32_t count = r.u32();
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        NamedTensor nt;
        std::uint16_t name_len = r.u16();
        nt.name.assign(r.take(name_len), name_len);
        std::uint8_t rank = r.u8();
        for (std::uint8_t d = 0; d < rank; ++d) nt.dims.push_back(r.u32());
        std::size_t n = tensor_len(nt);
        nt.values.resize(n);
        std::memcpy(nt.values.data(), r.take(n * sizeof(double)), n * sizeof(double));
        tensors.push_back(std::move(nt));
    }

    MlpParams p;
    const NamedTensor& widths = find_tensor(tensors, "meta.widths");
    for (double w : widths.values) p.spec.widths.push_back(static_cast<std::size_t>(w));
    const NamedTensor& bn_mask = find_tensor(tensors, "meta.batchnorm");
    for (double b : bn_mask.values) p.spec.batchnorm.push_back(b != 0.0);
    p.spec.final_linear_only = find_tensor(tensors, "meta.final_linear_only").values.at(0) != 0.0;
    p.spec.validate();

    p.layers.resize(p.spec.num_layers());
    for (std::size_t l = 0; l < p.spec.num_layers(); ++l) {
        std::string prefix = "layers." + std::to_string(l) + ".";
        std::size_t in = p.spec.widths[l], out = p.spec.widths[l + 1];
        const NamedTensor& w = find_tensor(tensors, prefix + "weight");
        if (w.dims.size() != 2 || w.dims[0] != in || w.dims[1] != out)
            throw IoError("load_checkpoint: shape mismatch for tensor " + w.name);
        LayerParams& lp = p.layers[l];
        lp.weight = Matrix(in, out);
        std::memcpy(lp.weight.data(), w.values.data(), w.values.size() * sizeof(double));
        const NamedTensor& bias = find_tensor(tensors, prefix + "bias");
        if (bias.dims.size() != 1 || bias.dims[0] != out)
            throw IoError("load_checkpoint: shape mismatch for tensor " + bias.name);
        lp.bias = bias.values;
        if (p.spec.layer_has_bn(l)) {
            BatchNormParams bn;
            auto vec = [&](const char* leaf) {
                const NamedTensor& t = find_tensor(tensors, prefix + "bn." + leaf);
                if (t.dims.size() != 1 || t.dims[0] != out)
                    throw IoError("load_checkpoint: shape mismatch for tensor " + t.name);
                return t.values;
            };
            bn.gamma = vec("gamma");
            bn.beta = vec("beta");
            bn.running_mean = vec("running_mean");
            bn.running_var = vec("running_var");
            bn.momentum = find_tensor(tensors, prefix + "bn.momentum").values.at(0);
            bn.epsilon = find_tensor(tensors, prefix + "bn.epsilon").values.at(0);
            lp.bn = std::move(bn);
        }
    }
    return p;
}

} // namespace dacl
