#pragma once

#include <cmath>
#include <functional>

#include "sgdlab/error.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

/// Central-difference gradient oracle: (f(x + h e_i) - f(x - h e_i)) / (2h)
/// per coordinate. Throws NumericsError on a non-finite evaluation.
inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f,
                            const Vec& x, double h) {
    require(h > 0.0, "finite_diff_grad: h must be positive");
    Vec g(x.size(), 0.0);
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericsError("finite_diff_grad: non-finite function value");
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace sgdlab
