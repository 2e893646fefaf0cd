#pragma once

#include <functional>

#include "sgdlab/quadratic.hpp"
#include "sgdlab/sym_matrix.hpp"

namespace sgdlab {

/// Gradient-noise covariance model for the SDE view of SGD.
struct NoiseModel {
    SymMatrix covariance;
    enum class Provenance { Analytic, Empirical } provenance = Provenance::Analytic;
};

/// Covariance of per-example gradients, estimated over all N examples.
/// Centered by default:  (1/N) sum_j g_j g_j' - gbar gbar'
/// (the noise of the minibatch gradient estimate). centered = false gives
/// the uncentered second moment instead. Requires N >= 2.
NoiseModel estimate_noise_cov(int n_examples,
                              const std::function<Vec(int)>& per_example_grad,
                              bool centered = true);

NoiseModel estimate_noise_cov(const QuadraticModel& model, const Vec& omega,
                              bool centered = true);

/// Exact noise model for the quadratic family: H Cov(c) H.
NoiseModel analytic_noise_model(const QuadraticModel& model);

} // namespace sgdlab
