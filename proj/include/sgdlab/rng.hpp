#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace sgdlab {

/// Deterministic random stream.
///
/// The generator is xoshiro256++ seeded through SplitMix64, fixed for the
/// whole repository: the same 64-bit seed produces the same draw sequence on
/// every platform. Gaussian variates come from the Box-Muller transform (the
/// second variate of each pair is cached), so the full output sequence is a
/// pure function of (seed, call sequence).
///
/// Streams are single-owner: never share one Rng between threads. Parallel
/// work derives an independent stream per task with `stream_seed`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = split_mix(x);
        have_cached_ = false;
        cached_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift bounded draw; bias is < 2^-64 * n, irrelevant here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal draw (Box-Muller, second variate cached).
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 =
            (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    static std::uint64_t split_mix(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4]{};
    bool have_cached_ = false;
    double cached_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a key path, e.g.
/// stream_seed(base, {KEY_RUN, grid_point, run_index}). Every training run in
/// a sweep owns the stream named by its coordinates, which makes results
/// independent of worker scheduling.
inline std::uint64_t stream_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = base;
    std::uint64_t acc = Rng::split_mix(s);
    for (std::uint64_t k : keys) {
        std::uint64_t t = k + 0x9E3779B97F4A7C15ull;
        acc ^= Rng::split_mix(t) + 0x9E3779B97F4A7C15ull + (acc << 6) + (acc >> 2);
        acc = Rng::split_mix(acc);
    }
    return acc;
}

} // namespace sgdlab
