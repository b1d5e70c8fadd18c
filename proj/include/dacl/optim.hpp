#pragma once

#include <string>
#include <vector>

#include "dacl/mlp.hpp"

namespace dacl {

// Linear warmup to base_lr over warmup_steps, then cosine decay (no restarts)
// down to 0 at total_steps. Requires step < total_steps and warmup_steps < total_steps.
double schedule_lr(long step, long total_steps, long warmup_steps, double base_lr);

// View into one parameter tensor and its gradient. Tensors flagged
// exclude_from_trust (biases, batchnorm gamma/beta) skip both the trust-ratio
// scaling and weight decay.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    const double* grad = nullptr;
    std::size_t len = 0;
    bool exclude_from_trust = false;
};

struct OptimConfig {
    double momentum = 0.9;
    double weight_decay = 0.0;
    double trust_coefficient = 0.001;
};

// Layerwise adaptive rate scaling with momentum:
//   local_lr = trust * |w| / (|g| + wd * |w|)   (1 when either norm is 0, or excluded)
//   buf      = m * buf + local_lr * lr * (g + wd * w)
//   w       <- w - buf
class LarsOptimizer {
public:
    explicit LarsOptimizer(OptimConfig cfg) : cfg_(cfg) {}
    void step(const std::vector<ParamRef>& params, double lr);
    long steps_taken() const { return steps_; }

private:
    OptimConfig cfg_;
    std::vector<std::vector<double>> buffers_;
    long steps_ = 0;
};

// Classical momentum: buf = m * buf + g + wd * w;  w <- w - lr * buf.
class SgdMomentum {
public:
    explicit SgdMomentum(OptimConfig cfg) : cfg_(cfg) {}
    void step(const std::vector<ParamRef>& params, double lr);

private:
    OptimConfig cfg_;
    std::vector<std::vector<double>> buffers_;
};

// Flattened parameter/gradient views over an MLP, in layer order:
// weight (trust-scaled), bias (excluded), bn gamma/beta (excluded).
std::vector<ParamRef> mlp_param_refs(MlpParams& params, const MlpGrads& grads,
                                     const std::string& prefix);

} // namespace dacl
