#pragma once

#include <cstdint>

#include "sgdlab/vec.hpp"

namespace sgdlab {

/// Optimizer state for SGD / heavy-ball Momentum. m == 0 reduces exactly to
/// vanilla SGD. The velocity buffer holds the plain gradient accumulator
///   v <- m v + g,   w <- w - eps v
/// (no learning rate inside the buffer, no dampening), which reproduces
///   w_{i+1} = w_i - eps sum_j m^{i-j} g_j
/// term by term, so the effective learning rate eps/(1-m) is exact in steady
/// state.
struct OptimizerState {
    Vec omega;
    Vec velocity; ///< zero-initialized, same dimension as omega
    double m = 0.0;
    std::int64_t step = 0;

    static OptimizerState make(Vec omega0, double m);
};

/// w <- w - eps * grad. Throws DivergenceSignal carrying the step index if
/// the update produces a non-finite parameter.
void sgd_step(OptimizerState& s, const Vec& grad, double eps);

/// v <- m v + grad; w <- w - eps * v. Divergence as in sgd_step.
void momentum_step(OptimizerState& s, const Vec& grad, double eps);

/// eps / (1 - m); requires 0 <= m < 1.
double effective_lr(double eps, double m);

/// T = eps_eff / B; requires B >= 1.
double temperature(double eps_eff, int batch_size);

} // namespace sgdlab
