#include "sgdlab/optimizer.hpp"

#include "sgdlab/error.hpp"

namespace sgdlab {

OptimizerState OptimizerState::make(Vec omega0, double m) {
    require(m >= 0.0 && m < 1.0, "OptimizerState: momentum must be in [0, 1)");
    OptimizerState s;
    s.velocity.assign(omega0.size(), 0.0);
    s.omega = std::move(omega0);
    s.m = m;
    return s;
}

void sgd_step(OptimizerState& s, const Vec& grad, double eps) {
    require(eps > 0.0, "sgd_step: eps must be positive");
    require(grad.size() == s.omega.size(), "sgd_step: gradient dim mismatch");
    axpy(-eps, grad, s.omega);
    ++s.step;
    if (!all_finite(s.omega)) {
        throw DivergenceSignal(s.step, "sgd_step: non-finite parameter");
    }
}

void momentum_step(OptimizerState& s, const Vec& grad, double eps) {
    require(eps > 0.0, "momentum_step: eps must be positive");
    require(grad.size() == s.omega.size(), "momentum_step: gradient dim mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) {
        s.velocity[i] = s.m * s.velocity[i] + grad[i];
        s.omega[i] -= eps * s.velocity[i];
    }
    ++s.step;
    if (!all_finite(s.omega)) {
        throw DivergenceSignal(s.step, "momentum_step: non-finite parameter");
    }
}

double effective_lr(double eps, double m) {
    require(m >= 0.0, "effective_lr: momentum must be >= 0");
    if (m >= 1.0) throw Error("effective_lr: momentum must be < 1");
    return eps / (1.0 - m);
}

double temperature(double eps_eff, int batch_size) {
    require(batch_size >= 1, "temperature: batch size must be >= 1");
    return eps_eff / static_cast<double>(batch_size);
}

} // namespace sgdlab
