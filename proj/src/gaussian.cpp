#include "sgdlab/gaussian.hpp"

#include <cmath>

#include "sgdlab/error.hpp"

namespace sgdlab {

Vec gaussian_vec(Rng& rng, int dim, double cov) {
    require(dim >= 1, "gaussian_vec: dim must be >= 1");
    if (cov < 0.0) throw NumericsError("gaussian_vec: negative scalar covariance");
    Vec out(static_cast<std::size_t>(dim), 0.0);
    if (cov == 0.0) return out;
    const double sd = std::sqrt(cov);
    for (double& x : out) x = sd * rng.gaussian();
    return out;
}

Vec gaussian_vec(Rng& rng, const SymMatrix& cov) {
    GaussianSampler sampler(cov);
    return sampler.draw(rng);
}

GaussianSampler::GaussianSampler(const SymMatrix& cov) : chol_(cov.cholesky_psd()) {}

Vec GaussianSampler::draw(Rng& rng) const {
    Vec out(static_cast<std::size_t>(chol_.dim()));
    Vec scratch(static_cast<std::size_t>(chol_.dim()));
    draw(rng, out, scratch);
    return out;
}

void GaussianSampler::draw(Rng& rng, Vec& out, Vec& scratch) const {
    scratch.resize(static_cast<std::size_t>(chol_.dim()));
    for (double& z : scratch) z = rng.gaussian();
    out = chol_.lower_apply(scratch);
}

} // namespace sgdlab
