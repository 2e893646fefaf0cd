#pragma once

#include "sgdlab/rng.hpp"
#include "sgdlab/sym_matrix.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

/// Draws a Gaussian vector with scalar covariance cov * I. cov == 0 yields
/// the zero vector without consuming draws.
Vec gaussian_vec(Rng& rng, int dim, double cov);

/// Draws a Gaussian vector with the given covariance matrix (one-shot;
/// factors the covariance on every call). Throws NumericsError if the
/// covariance is not positive semidefinite.
Vec gaussian_vec(Rng& rng, const SymMatrix& cov);

/// Repeated correlated draws with a cached Cholesky factor.
class GaussianSampler {
public:
    explicit GaussianSampler(const SymMatrix& cov);

    Vec draw(Rng& rng) const;
    void draw(Rng& rng, Vec& out, Vec& scratch) const;

    int dim() const noexcept { return chol_.dim(); }

private:
    SymMatrix chol_;
};

} // namespace sgdlab
