#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dacl/matrix.hpp"
#include "dacl/rng.hpp"

namespace dacl {

struct Dataset {
    Matrix features;                         // n x d
    std::vector<int> labels;                 // empty when unlabeled
    std::vector<std::string> feature_names;  // optional
    struct NormMeta {
        double lo = 0.0, hi = 1.0;           // per-feature min/max used
    };
    std::vector<NormMeta> norm_meta;         // empty when not normalized

    std::size_t n() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    bool has_labels() const { return !labels.empty(); }
    int num_classes() const;
};

// CSV with a header row, comma separated, '.' decimal point, no quoting.
// When label_column names a header, that column becomes integer labels mapped
// in first-appearance order and is removed from the features.
Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column);
void save_csv(const Dataset& ds, const std::string& path);

// Per-feature (v - min) / (max - min); constant features map to 0.
// norm_meta records the (min, max) actually used.
Dataset normalize_minmax(const Dataset& ds);
// Inverse of normalize_minmax via norm_meta.
Dataset denormalize(const Dataset& ds);

// Seed-deterministic disjoint, exhaustive permutation split.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, Rng& rng);

// Rows x = scale * (A u), A a fixed d x r standard-normal matrix, u ~ N(0, I_r),
// then mean-centered per feature. Empirical covariance has rank <= r.
Dataset gen_lowrank_gaussian(std::size_t n, std::size_t d, std::size_t r, double scale, Rng& rng);

// Two unit-variance Gaussian blobs whose means are `separation` apart along a
// random unit direction, labels 0/1, globally mean-centered per feature.
Dataset gen_two_class_blobs(std::size_t n, std::size_t d, double separation, Rng& rng);

// Appends `extra` i.i.d. N(0, noise_std^2) feature columns.
Dataset append_noise_dims(const Dataset& ds, std::size_t extra, double noise_std, Rng& rng);

} // namespace dacl
