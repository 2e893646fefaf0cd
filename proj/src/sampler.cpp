#include "sgdlab/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "sgdlab/error.hpp"

namespace sgdlab {

BatchSampler::BatchSampler(int n, int b, SamplerMode mode, std::uint64_t seed)
    : n_(n), b_(b), mode_(mode), rng_(seed) {
    require(n >= 1, "BatchSampler: N must be >= 1");
    require(b >= 1, "BatchSampler: B must be >= 1");
    require(b <= n, "BatchSampler: B must not exceed N");
    perm_.resize(static_cast<std::size_t>(n));
    std::iota(perm_.begin(), perm_.end(), 0);
    cursor_ = n; // force a shuffle on the first epoch-mode batch
}

const std::vector<int>& BatchSampler::next() {
    if (mode_ == SamplerMode::PerUpdateRandomSubset) {
        // Partial Fisher-Yates: the first B slots become a uniform random
        // ordered sample without replacement.
        for (int i = 0; i < b_; ++i) {
            const int j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(n_ - i)));
            std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
        }
        batch_.assign(perm_.begin(), perm_.begin() + b_);
        return batch_;
    }

    if (cursor_ >= n_) {
        for (int i = n_ - 1; i > 0; --i) {
            const int j = static_cast<int>(rng_.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
        }
        cursor_ = 0;
    }
    const int take = std::min(b_, n_ - cursor_);
    batch_.assign(perm_.begin() + cursor_, perm_.begin() + cursor_ + take);
    cursor_ += take;
    return batch_;
}

} // namespace sgdlab
