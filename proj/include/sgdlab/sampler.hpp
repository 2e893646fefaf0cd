#pragma once

#include <cstdint>
#include <vector>

#include "sgdlab/rng.hpp"

namespace sgdlab {

enum class SamplerMode {
    PerUpdateRandomSubset, ///< fresh uniform size-B subset (no replacement) per update
    EpochShuffle,          ///< per-epoch permutation cut into consecutive slices
};

/// Minibatch index source. Per-update mode redraws a uniform subset for every
/// step; epoch-shuffle mode visits every example exactly once per epoch when
/// B divides N (the final slice is shorter otherwise).
class BatchSampler {
public:
    BatchSampler(int n, int b, SamplerMode mode, std::uint64_t seed);

    const std::vector<int>& next();

    int n() const noexcept { return n_; }
    int batch_size() const noexcept { return b_; }
    SamplerMode mode() const noexcept { return mode_; }

private:
    int n_;
    int b_;
    SamplerMode mode_;
    Rng rng_;
    std::vector<int> perm_;
    std::vector<int> batch_;
    int cursor_ = 0; // next unread position in the epoch permutation
};

} // namespace sgdlab
