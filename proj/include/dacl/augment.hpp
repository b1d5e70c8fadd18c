#pragma once

#include <span>
#include <vector>

#include "dacl/matrix.hpp"
#include "dacl/rng.hpp"

namespace dacl {

enum class NoiseKind { linear, geometric, binary, gaussian, dacl_plus };

const char* noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& name);

struct NoisePolicy {
    NoiseKind kind = NoiseKind::linear;
    double alpha = 0.9;          // lambda ~ U(alpha, 1) for linear mixup
    double beta = 0.9;           // lambda ~ U(beta, 1) for geometric mixup
    double rho = 0.5;            // Bernoulli keep probability for binary mixup
    double gaussian_scale = 0.1; // x + scale * eps, eps ~ N(0, I)
    void validate() const;
};

// lambda x + (1 - lambda) xt, elementwise. lambda in [0,1].
std::vector<double> mix_linear(std::span<const double> x, std::span<const double> xt,
                               double lambda);

// x^lambda * xt^(1-lambda) elementwise, 0^0 := 1. All entries must be >= 0.
std::vector<double> mix_geometric(std::span<const double> x, std::span<const double> xt,
                                  double lambda);

// x * m + xt * (1 - m) with a binary mask m.
std::vector<double> mix_binary(std::span<const double> x, std::span<const double> xt,
                               std::span<const std::uint8_t> mask);

// x + scale * eps with eps ~ N(0, I). scale > 0.
std::vector<double> gaussian_positive(std::span<const double> x, double scale, Rng& rng);

// Draw from U(lower, 1.0); 0 < lower < 1.
double sample_lambda(Rng& rng, double lower);

// Uniform draw from {0..n-1} \ {anchor}. Requires n >= 2.
std::size_t sample_partner(std::size_t n, std::size_t anchor, Rng& rng);

// One positive sample for batch row `anchor` under the policy. Mixup kinds draw
// a partner uniformly from the batch excluding the anchor; dacl_plus first
// draws the noise kind uniformly from {linear, geometric, binary}.
std::vector<double> make_positive(const Matrix& batch, std::size_t anchor,
                                  const NoisePolicy& policy, Rng& rng);

struct PositivePair {
    std::vector<double> first, second;
    NoiseKind kind_used = NoiseKind::linear;
};

// Both positives of one anchor. For dacl_plus the kind is drawn once and shared
// by the pair; lambdas, masks, partners and noise are drawn independently per
// positive.
PositivePair make_positive_pair(const Matrix& batch, std::size_t anchor,
                                const NoisePolicy& policy, Rng& rng);

} // namespace dacl
