#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dacl/matrix.hpp"
#include "dacl/rng.hpp"

namespace dacl {

struct MlpSpec {
    std::vector<std::size_t> widths;  // input dim first, at least 2 entries
    std::vector<bool> batchnorm;      // one flag per layer (widths.size() - 1)
    bool final_linear_only = false;   // last layer skips activation and batchnorm

    std::size_t num_layers() const { return widths.empty() ? 0 : widths.size() - 1; }
    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
    void validate() const;

    // All layers batchnormed; final_linear strips activation+batchnorm from the last.
    static MlpSpec make(std::vector<std::size_t> widths, bool final_linear);

    bool layer_has_bn(std::size_t l) const {
        if (final_linear_only && l + 1 == num_layers()) return false;
        return batchnorm[l];
    }
    bool layer_has_act(std::size_t l) const {
        return !(final_linear_only && l + 1 == num_layers());
    }
};

struct BatchNormParams {
    std::vector<double> gamma, beta, running_mean, running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;
};

struct LayerParams {
    Matrix weight;             // in x out
    std::vector<double> bias;  // out
    std::optional<BatchNormParams> bn;
};

struct MlpParams {
    MlpSpec spec;
    std::vector<LayerParams> layers;
};

// He initialization: weights N(0, 2/fan_in), biases 0, gamma 1, beta 0,
// running stats (0, 1).
MlpParams init_params(const MlpSpec& spec, Rng& rng);

enum class Mode { train, eval };

struct LayerCache {
    Matrix pre_act;                      // after linear + bias
    Matrix bn_xhat;                      // normalized pre-activation (bn layers)
    std::vector<double> batch_mean, batch_var;
    Matrix post_act;
};

struct ForwardCache {
    Matrix input;
    std::vector<LayerCache> layers;
    // Hidden-state mixing bookkeeping (mix_layer < 0 means plain forward).
    int mix_layer = -1;
    std::vector<std::size_t> mix_partner;
    std::vector<double> mix_lambda;
    Matrix pre_mix;   // activations entering the mix
    Matrix post_mix;  // mixed activations fed to the remaining layers
};

// Train mode computes batch statistics and fills the cache; the running-stat
// update is staged in the cache and only applied by commit_running_stats,
// which keeps the forward itself pure. Eval mode uses running statistics and
// never touches params. Train mode with any batchnorm layer needs >= 2 rows.
Matrix forward(const MlpParams& params, const Matrix& x, Mode mode, ForwardCache* cache);

void commit_running_stats(MlpParams& params, const ForwardCache& cache);

struct MlpGrads {
    std::vector<LayerParams> layers;  // same shapes; bn gamma/beta carry grads
};

struct BackwardResult {
    MlpGrads grads;
    Matrix dx;
};

// Exact gradients of the train-mode forward captured in `cache`, including
// through the batch statistics (and through the mix when the cache came from
// forward_mixed_hidden).
BackwardResult backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dh);

// Forward with rows mixed at the input of layer mix_layer: the activation v_i
// entering that layer is replaced by lambda_i v_i + (1 - lambda_i) v_partner(i),
// with partner(i) a row of the same batch (partner(i) != i). mix_layer == 0
// mixes the raw input, which coincides with input-space linear mixup.
Matrix forward_mixed_hidden(const MlpParams& params, const Matrix& x,
                            std::span<const std::size_t> partner_rows,
                            std::span<const double> lambdas,
                            std::size_t mix_layer, Mode mode, ForwardCache* cache);

// Binary checkpoint: magic "DACL", version u32 LE, tensor count u32 LE, then
// per tensor: name length u16 + UTF-8 name, rank u8, dims u32, values f64 LE.
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

} // namespace dacl
