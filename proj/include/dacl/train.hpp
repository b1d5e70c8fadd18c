#pragma once

#include <functional>
#include <optional>
#include <string>

#include "dacl/augment.hpp"
#include "dacl/dataset.hpp"
#include "dacl/mlp.hpp"

namespace dacl {

struct EvalConfig {
    std::size_t epochs = 50;
    std::size_t batch = 256;
    double lr_ratio = 1.0;  // base_lr = lr_ratio * batch / 256
};

struct TrainConfig {
    MlpSpec encoder;
    MlpSpec head;
    NoisePolicy policy;
    double tau = 1.0;
    std::size_t batch = 256;
    std::size_t epochs = 100;
    double lr_ratio = 1.0;      // base_lr = lr_ratio * batch / 256
    std::size_t warmup_epochs = 10;
    double weight_decay = 1e-6;
    std::uint64_t seed = 1;
    int mix_hidden_layer = -1;  // -1: input-space mixing; >= 0: mix at that encoder layer
    EvalConfig eval;

    void validate() const;
    // Default desk-scale architecture for a given input dimension.
    static TrainConfig defaults(std::size_t input_dim);
};

struct MetricsRecord {
    std::string phase;
    long epoch = 0;
    long step = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::optional<double> accuracy;  // percent
    double seconds = 0.0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

// Fixed stream ids so every run with the same seed replays identically.
// Parallel augmentation would consume one substream per anchor, which is also
// why the sequential loop derives them the same way.
namespace streams {
std::uint64_t encoder_init();
std::uint64_t head_init();
std::uint64_t shuffle(std::uint64_t epoch);
std::uint64_t augment(std::uint64_t epoch, std::uint64_t step, std::uint64_t anchor);
std::uint64_t eval_shuffle(std::uint64_t epoch);
std::uint64_t dataset_split();
} // namespace streams

struct PretrainResult {
    MlpParams encoder;
    MlpParams head;
};

// Algorithm: per epoch a seeded shuffle; per batch of N anchors build 2N
// positives (two per anchor, independent draws), forward encoder + head,
// NT-Xent, LARS with linear warmup + cosine decay. The last incomplete batch
// is dropped. Labels are never read.
PretrainResult pretrain(const TrainConfig& config, const Dataset& data, const MetricsSink& sink);

// Linear classifier on frozen eval-mode encoder features; returns test accuracy
// in percent.
double linear_eval(const MlpParams& encoder, const Dataset& train, const Dataset& test,
                   const TrainConfig& config, const MetricsSink& sink);

// linear_eval on a freshly initialized encoder.
double no_pretrain_eval(const TrainConfig& config, const Dataset& train, const Dataset& test,
                        const MetricsSink& sink);

// Encoder + linear classifier trained end-to-end with softmax cross-entropy.
double supervised_train(const TrainConfig& config, const Dataset& train, const Dataset& test,
                        const MetricsSink& sink);

} // namespace dacl
