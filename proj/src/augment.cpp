#include "dacl/augment.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace dacl {

const char* noise_kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::linear: return "linear";
        case NoiseKind::geometric: return "geometric";
        case NoiseKind::binary: return "binary";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::dacl_plus: return "dacl_plus";
    }
    return "?";
}

NoiseKind noise_kind_from_name(const std::string& name) {
    if (name == "linear") return NoiseKind::linear;
    if (name == "geometric") return NoiseKind::geometric;
    if (name == "binary") return NoiseKind::binary;
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "dacl_plus") return NoiseKind::dacl_plus;
    throw ContractError("unknown noise kind '" + name + "'");
}

void NoisePolicy::validate() const {
    require(alpha > 0.0 && alpha < 1.0, "NoisePolicy: alpha outside (0,1)");
    require(beta > 0.0 && beta < 1.0, "NoisePolicy: beta outside (0,1)");
    require(rho >= 0.0 && rho <= 1.0, "NoisePolicy: rho outside [0,1]");
    require(gaussian_scale > 0.0, "NoisePolicy: gaussian_scale must be positive");
}

std::vector<double> mix_linear(std::span<const double> x, std::span<const double> xt,
                               double lambda) {
    require(x.size() == xt.size(), "mix_linear: length mismatch");
    require(lambda >= 0.0 && lambda <= 1.0, "mix_linear: lambda outside [0,1]");
    std::vector<double> out(x.size());
    if (lambda == 1.0) {
        std::memcpy(out.data(), x.data(), x.size() * sizeof(double));
        return out;
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = lambda * x[i] + (1.0 - lambda) * xt[i];
    return out;
}

std::vector<double> mix_geometric(std::span<const double> x, std::span<const double> xt,
                                  double lambda) {
    require(x.size() == xt.size(), "mix_geometric: length mismatch");
    require(lambda >= 0.0 && lambda <= 1.0, "mix_geometric: lambda outside [0,1]");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0.0 || xt[i] < 0.0)
            throw ContractError("mix_geometric: negative entry at index " + std::to_string(i));
    std::vector<double> out(x.size());
    if (lambda == 1.0) {
        std::memcpy(out.data(), x.data(), x.size() * sizeof(double));
        return out;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        // std::pow(0, 0) == 1, so a zero operand with a zero exponent drops out.
        out[i] = std::pow(x[i], lambda) * std::pow(xt[i], 1.0 - lambda);
    }
    return out;
}

std::vector<double> mix_binary(std::span<const double> x, std::span<const double> xt,
                               std::span<const std::uint8_t> mask) {
    require(x.size() == xt.size() && x.size() == mask.size(), "mix_binary: length mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = mask[i] ? x[i] : xt[i];
    return out;
}

std::vector<double> gaussian_positive(std::span<const double> x, double scale, Rng& rng) {
    require(scale > 0.0, "gaussian_positive: scale must be positive");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] + scale * rng.standard_normal();
    return out;
}

double sample_lambda(Rng& rng, double lower) {
    require(lower > 0.0 && lower < 1.0, "sample_lambda: lower bound outside (0,1)");
    return rng.uniform(lower, 1.0);
}

std::size_t sample_partner(std::size_t n, std::size_t anchor, Rng& rng) {
    require(n >= 2 && anchor < n, "sample_partner: need n >= 2 and anchor < n");
    std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
    return j >= anchor ? j + 1 : j;
}

namespace {

std::vector<double> positive_with_kind(const Matrix& batch, std::size_t anchor,
                                       NoiseKind kind, const NoisePolicy& policy, Rng& rng) {
    std::span<const double> x = batch.row(anchor);
    switch (kind) {
        case NoiseKind::linear: {
            double lam = sample_lambda(rng, policy.alpha);
            std::size_t p = sample_partner(batch.rows(), anchor, rng);
            return mix_linear(x, batch.row(p), lam);
        }
        case NoiseKind::geometric: {
            double lam = sample_lambda(rng, policy.beta);
            std::size_t p = sample_partner(batch.rows(), anchor, rng);
            return mix_geometric(x, batch.row(p), lam);
        }
        case NoiseKind::binary: {
            std::vector<std::uint8_t> mask = rng.bernoulli_mask(x.size(), policy.rho);
            std::size_t p = sample_partner(batch.rows(), anchor, rng);
            return mix_binary(x, batch.row(p), mask);
        }
        case NoiseKind::gaussian:
            return gaussian_positive(x, policy.gaussian_scale, rng);
        case NoiseKind::dacl_plus:
            break;
    }
    throw ContractError("positive_with_kind: unexpected kind");
}

NoiseKind draw_plus_kind(Rng& rng) {
    switch (rng.below(3)) {
        case 0: return NoiseKind::linear;
        case 1: return NoiseKind::geometric;
        default: return NoiseKind::binary;
    }
}

void check_positive_args(const Matrix& batch, std::size_t anchor, const NoisePolicy& policy) {
    policy.validate();
    require(anchor < batch.rows(), "make_positive: anchor out of range");
    if (policy.kind != NoiseKind::gaussian)
        require(batch.rows() >= 2, "make_positive: mixup needs at least 2 rows");
}

} // namespace

std::vector<double> make_positive(const Matrix& batch, std::size_t anchor,
                                  const NoisePolicy& policy, Rng& rng) {
    check_positive_args(batch, anchor, policy);
    NoiseKind kind = policy.kind == NoiseKind::dacl_plus ? draw_plus_kind(rng) : policy.kind;
    return positive_with_kind(batch, anchor, kind, policy, rng);
}

PositivePair make_positive_pair(const Matrix& batch, std::size_t anchor,
                                const NoisePolicy& policy, Rng& rng) {
    check_positive_args(batch, anchor, policy);
    PositivePair pair;
    pair.kind_used = policy.kind == NoiseKind::dacl_plus ? draw_plus_kind(rng) : policy.kind;
    pair.first = positive_with_kind(batch, anchor, pair.kind_used, policy, rng);
    pair.second = positive_with_kind(batch, anchor, pair.kind_used, policy, rng);
    return pair;
}

} // namespace dacl
