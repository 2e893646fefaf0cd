#pragma once

#include "sgdlab/sym_matrix.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

struct PowerIterationResult {
    double lambda = 0.0;   ///< dominant eigenvalue estimate
    Vec eigvec;            ///< unit-norm eigenvector estimate
    int iterations = 0;
    bool converged = false;
    double residual = 0.0; ///< |H v - lambda v| at the final iterate
};

/// Estimates the dominant eigenpair of a symmetric matrix. Converged when
/// |H v - lambda v| <= tol * |lambda|. Starts from the normalized all-ones
/// vector; on breakdown (H v ~ 0) restarts from a fixed seeded random vector
/// so runs stay deterministic. Non-convergence is reported in the result
/// (with the last estimate attached), not thrown.
PowerIterationResult power_iteration(const SymMatrix& H, double tol, int max_iters);

} // namespace sgdlab
