#include "sgdlab/power_iteration.hpp"

#include <cmath>

#include "sgdlab/error.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

PowerIterationResult power_iteration(const SymMatrix& H, double tol, int max_iters) {
    require(H.dim() >= 1, "power_iteration: dim must be >= 1");
    require(tol > 0.0, "power_iteration: tol must be positive");
    require(max_iters >= 1, "power_iteration: max_iters must be >= 1");
    if (!H.is_finite()) throw NumericsError("power_iteration: non-finite matrix");

    const int n = H.dim();
    PowerIterationResult res;

    Vec v(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
    Vec hv(static_cast<std::size_t>(n));
    Rng restart_rng(0x9d2c5681u);

    for (int it = 0; it < max_iters; ++it) {
        H.matvec(v, hv);
        const double norm_hv = nrm2(hv);
        if (norm_hv <= 1e-300) {
            // Start vector (numerically) in the null space; reseed.
            for (double& x : v) x = restart_rng.gaussian();
            const double nv = nrm2(v);
            for (double& x : v) x /= nv;
            continue;
        }
        const double lambda = dot(v, hv);
        double resid = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = hv[i] - lambda * v[i];
            resid += d * d;
        }
        resid = std::sqrt(resid);

        res.lambda = lambda;
        res.eigvec = v;
        res.iterations = it + 1;
        res.residual = resid;
        if (resid <= tol * std::fabs(lambda)) {
            res.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = hv[i] / norm_hv;
    }
    return res;
}

} // namespace sgdlab
