#include "dacl/rng.hpp"

#include <cmath>

namespace dacl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed) {
    key_ = mix64(seed + kGolden) ^ mix64(stream_id * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull);
}

std::uint64_t Rng::next_u64() {
    counter_ += kGolden;
    return mix64(key_ + counter_);
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    require(lo <= hi, "Rng::uniform: lo > hi");
    return lo + uniform01() * (hi - lo);
}

double Rng::standard_normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0,1] keeps the log finite.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

std::vector<std::uint8_t> Rng::bernoulli_mask(std::size_t len, double rho) {
    require(rho >= 0.0 && rho <= 1.0, "Rng::bernoulli_mask: rho outside [0,1]");
    std::vector<std::uint8_t> mask(len);
    for (std::size_t i = 0; i < len; ++i)
        mask[i] = uniform01() < rho ? 1 : 0;
    return mask;
}

std::uint64_t Rng::below(std::uint64_t n) {
    require(n >= 1, "Rng::below: empty range");
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
}

Rng Rng::substream(std::uint64_t stream_id) const {
    return Rng(seed_, stream_id);
}

} // namespace dacl
