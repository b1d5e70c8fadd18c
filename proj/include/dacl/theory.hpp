#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dacl/matrix.hpp"
#include "dacl/mlp.hpp"
#include "dacl/rng.hpp"

namespace dacl {

// Finite world on which every expectation enumerates exactly: labeled points,
// a finite mixing pool, a finite uniformly weighted alpha support, and an
// encoder applied in eval mode (identity when absent).
struct EmpiricalWorld {
    Matrix points;                      // m x d
    std::vector<int> labels;            // values in {0,1}, both classes present
    Matrix pool;                        // mixing pool, P x d
    std::vector<double> alpha_support;  // uniform weights
    std::optional<MlpParams> encoder;

    void validate() const;
};

enum class TheoremNoise { mixup, gaussian_discretized };

struct TheoremReport {
    std::string theorem;
    std::string inputs_digest;
    double lhs = 0.0;
    double rhs = 0.0;
    std::vector<double> alphas;     // residual table for the expansion checks
    std::vector<double> residuals;
    double fitted_slope = 0.0;
    double slope_low = 0.0;
    double slope_high = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string notes;
};

// Projection-head-free contrastive loss of a triple:
//   -log( exp(sim(h(x+), h(x++))) / (exp(sim(h(x+), h(x++))) + exp(sim(h(x+), h(x-)))) )
// with cosine similarity; encoder applied in eval mode, identity when absent.
double contrastive_loss_raw(std::span<const double> x_plus, std::span<const double> x_plus_plus,
                            std::span<const double> x_minus,
                            const std::optional<MlpParams>& encoder);

// Exact enumeration of both sides of the contrastive-to-classification
// identity on the empirical world. The anchor-side expectation enumerates the
// triple (pool element, alpha) draws for x+, x++ and x-; the right-hand side
// splits the negative by label, builds the classifier direction from the
// normalized embeddings of the triple, and adds the same-label error term.
TheoremReport verify_theorem1(const EmpiricalWorld& world, TheoremNoise noise);

// Second-order expansion check for mixup noise on a linear model f(x) = w.x:
// enumerated LHS over the zero-mean pool vs
//   loss(f,y) + c1 |w| + c2 |w|^2 + c3 w' Sigma w,  Sigma = E[xt xt'],
// with residual(alpha) expected to vanish at cubic rate. Requires the
// correct-classification condition y f + (y-1) f >= 0.
TheoremReport verify_theorem2_mixup(std::span<const double> w, std::span<const double> x, int y,
                                    const Matrix& pool, std::span<const double> alphas);

// Gaussian-noise counterpart: RHS = loss(f,y) + sigma^2 c3 |w|^2. The
// expectation is Monte-Carlo with antithetic pairs, the same draws reused for
// every alpha. Only the projection of the noise on w enters the loss, so the
// draws are scalar projections sigma |w| z, z ~ N(0,1).
TheoremReport verify_theorem2_gaussian(std::span<const double> w, std::span<const double> x,
                                       int y, double sigma, std::span<const double> alphas,
                                       std::size_t mc_pairs, Rng& rng);

// Measurement grid for the Monte-Carlo expansion check. With common random
// numbers the residual is a|alpha|^2 + b|alpha|^4: the stochastic term is the
// second-moment sampling error (median magnitude known in closed form from
// mc_pairs), the quartic term is deterministic. A factor-2 grid centered on
// the predicted crossover brackets both regimes, so the fitted slope resolves
// the super-quadratic rate regardless of the draw.
std::vector<double> gaussian_check_alphas(double f, double sigma_w_norm, std::size_t mc_pairs);

enum class FunctionClass { l2_ball, mixup_ball };

struct RademacherEstimate {
    double mean = 0.0;
    std::vector<double> per_trial;
};

// Monte-Carlo empirical Rademacher complexity with closed-form per-draw
// suprema: sqrt(b) |(1/n) sum xi_i x_i| for the L2 ball, and the same with the
// pseudo-inverse square root of the second moment applied first for the
// mixup-regularized ball. Eigenvalue cutoff 1e-10 * lambda_max.
RademacherEstimate empirical_rademacher(const Matrix& x, FunctionClass kind, double b,
                                        std::size_t trials, Rng& rng);

struct BoundPair {
    double l2_bound = 0.0;      // 4 sqrt(b c_x d / n)
    double mixup_bound = 0.0;   // 4 sqrt(b rank(Sigma_X) / n)
    int rank = 0;
};

// Closed-form generalization-bound values for the two function classes.
// Requires c_x >= max squared feature value.
BoundPair bound_compare(const Matrix& x, double b, double c_x);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
};

// Central finite differences on every parameter and every input entry of
// nt_xent(head(encoder(x))) in train mode. Relative error uses
// |a - fd| / max(1, |a|, |fd|).
GradCheckResult grad_check_harness(const MlpSpec& encoder_spec, const MlpSpec& head_spec,
                                   double tau, std::uint64_t seed, double h_step,
                                   std::size_t batch_rows);

// OLS slope of log(residual) against log(alpha), dropping residuals below the
// 1e-14 floating-point floor. Returns nullopt when fewer than two points remain.
std::optional<double> fit_log_slope(std::span<const double> alphas,
                                    std::span<const double> residuals);

struct WorldParams {
    std::size_t m = 4;          // points, split evenly across the two labels
    std::size_t pool_size = 2;
    std::size_t dim = 3;
    std::vector<double> alpha_support = {0.05, 0.1};
    bool use_encoder = true;    // random 2-layer encoder with a linear output
};

// Seeded random world for the identity check. The encoder output layer is
// linear so embeddings cannot collapse to zero under ReLU.
EmpiricalWorld make_random_world(std::uint64_t seed, const WorldParams& params,
                                 TheoremNoise noise);

struct Theorem2Instance {
    std::vector<double> w, x;
    int y = 1;
    Matrix pool;    // zero-mean, for the mixup case
    double sigma = 0.0;  // noise scale for the gaussian case
};

// Seeded instance satisfying the expansion preconditions: y matches the sign
// of f(x), |f(x)| is kept away from 0 so the cubic term does not vanish, and
// the pool is centered exactly. sigma is sized so the Monte-Carlo check
// resolves the cubic-rate window.
Theorem2Instance make_theorem2_instance(std::uint64_t seed, std::size_t dim,
                                        std::size_t pool_size);

} // namespace dacl
