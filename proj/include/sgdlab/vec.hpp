#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace sgdlab {

/// Flat vector of 64-bit reals. All parameter states, gradients and noise
/// draws in the library are plain `Vec`s; the helpers below are the only
/// linear-algebra primitives the lab needs.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double nrm2(const Vec& a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline bool all_finite(const Vec& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline Vec ones(std::size_t n) { return Vec(n, 1.0); }

} // namespace sgdlab
