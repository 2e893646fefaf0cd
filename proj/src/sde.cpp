#include "sgdlab/sde.hpp"

#include <cmath>

#include "sgdlab/error.hpp"

namespace sgdlab {

SdeSimulator::SdeSimulator(const QuadraticModel& loss, double eps, double temperature,
                           NoiseModel noise)
    : loss_(loss), eps_(eps), temp_(temperature) {
    require(eps > 0.0, "SdeSimulator: eps must be positive");
    require(temperature >= 0.0, "SdeSimulator: temperature must be >= 0");
    noise_scale_ = std::sqrt(eps * temperature);
    if (temperature > 0.0) {
        sampler_.emplace(noise.covariance);
        require(sampler_->dim() == loss.dim(), "SdeSimulator: noise dim mismatch");
    }
}

void SdeSimulator::step(Vec& omega, Rng& rng) {
    loss_.full_grad(omega, grad_);
    axpy(-eps_, grad_, omega);
    if (sampler_) {
        sampler_->draw(rng, draw_, scratch_);
        axpy(noise_scale_, draw_, omega);
    }
    if (!all_finite(omega)) {
        throw DivergenceSignal(0, "sde_step: non-finite parameter");
    }
}

double ou_stationary_variance(double lambda, double f, double eps, double temperature) {
    require(lambda > 0.0, "ou_stationary_variance: lambda must be positive");
    require(f >= 0.0, "ou_stationary_variance: f must be >= 0");
    require(eps > 0.0, "ou_stationary_variance: eps must be positive");
    require(temperature >= 0.0, "ou_stationary_variance: temperature must be >= 0");
    const double el = eps * lambda;
    if (el >= 2.0) {
        throw NumericsError(
            "ou_stationary_variance: eps * lambda >= 2, no stationary distribution");
    }
    return temperature * f / (lambda * (2.0 - el));
}

} // namespace sgdlab
