#pragma once

#include <optional>

#include "sgdlab/gaussian.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

/// Discretized SDE for SGD on a quadratic loss:
///   w <- w - eps * grad C(w) + sqrt(eps T) nu,   nu ~ Gaussian(0, F).
/// T = 0 recovers deterministic gradient descent bit for bit (no noise draw
/// is consumed).
class SdeSimulator {
public:
    SdeSimulator(const QuadraticModel& loss, double eps, double temperature,
                 NoiseModel noise);

    void step(Vec& omega, Rng& rng);

    double eps() const noexcept { return eps_; }
    double temperature() const noexcept { return temp_; }
    const QuadraticModel& loss() const noexcept { return loss_; }

private:
    QuadraticModel loss_;
    double eps_;
    double temp_;
    double noise_scale_; ///< sqrt(eps * T)
    std::optional<GaussianSampler> sampler_;
    Vec grad_, draw_, scratch_;
};

/// Stationary variance of the 1-D discretized SDE with curvature lambda,
/// noise covariance f, step size eps and temperature T:
///   v = eps T f / (1 - (1 - eps lambda)^2) = T f / (lambda (2 - eps lambda)).
/// Requires 0 < eps * lambda < 2 (no stationary distribution otherwise).
double ou_stationary_variance(double lambda, double f, double eps, double temperature);

} // namespace sgdlab
