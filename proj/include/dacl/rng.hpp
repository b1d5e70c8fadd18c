#pragma once

#include <cstdint>
#include <vector>

#include "dacl/errors.hpp"

namespace dacl {

// Counter-based deterministic generator (SplitMix64 output function over an
// incrementing counter). The full state is (key, counter, normal cache), so a
// value copy is a replayable snapshot. Substreams are keyed by (seed, stream_id)
// through an avalanching mix; distinct ids give statistically disjoint streams
// at any counter range reachable in practice.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on [0,1), 53-bit resolution.
    double uniform01();

    // Uniform on [lo,hi); lo == hi returns lo. Requires lo <= hi.
    double uniform(double lo, double hi);

    // N(0,1) via Box-Muller; the second value of each pair is cached.
    double standard_normal();

    // len independent draws, P(1) = rho. Requires rho in [0,1].
    std::vector<std::uint8_t> bernoulli_mask(std::size_t len, double rho);

    // Uniform integer in [0, n). Requires n >= 1.
    std::uint64_t below(std::uint64_t n);

    // Independent stream derived from the original seed and the given id.
    Rng substream(std::uint64_t stream_id) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace dacl
