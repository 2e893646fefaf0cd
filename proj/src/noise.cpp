#include "sgdlab/noise.hpp"

#include "sgdlab/error.hpp"

namespace sgdlab {

NoiseModel estimate_noise_cov(int n_examples,
                              const std::function<Vec(int)>& per_example_grad,
                              bool centered) {
    require(n_examples >= 2, "estimate_noise_cov: need at least 2 examples");
    Vec first = per_example_grad(0);
    const int d = static_cast<int>(first.size());
    Vec mean(first);
    SymMatrix second(d);
    auto accumulate = [&](const Vec& g) {
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                second.set(i, j, second(i, j) + g[static_cast<std::size_t>(i)] *
                                                    g[static_cast<std::size_t>(j)]);
            }
        }
    };
    accumulate(first);
    for (int ex = 1; ex < n_examples; ++ex) {
        const Vec g = per_example_grad(ex);
        require(static_cast<int>(g.size()) == d, "estimate_noise_cov: dim mismatch");
        axpy(1.0, g, mean);
        accumulate(g);
    }
    const double inv_n = 1.0 / static_cast<double>(n_examples);
    scale(mean, inv_n);

    SymMatrix cov(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            double v = second(i, j) * inv_n;
            if (centered) {
                v -= mean[static_cast<std::size_t>(i)] * mean[static_cast<std::size_t>(j)];
            }
            cov.set(i, j, v);
        }
    }
    NoiseModel model;
    model.covariance = cov;
    model.provenance = NoiseModel::Provenance::Empirical;
    return model;
}

NoiseModel estimate_noise_cov(const QuadraticModel& model, const Vec& omega,
                              bool centered) {
    return estimate_noise_cov(
        model.n_examples(), [&](int j) { return model.per_example_grad(j, omega); },
        centered);
}

NoiseModel analytic_noise_model(const QuadraticModel& model) {
    NoiseModel out;
    out.covariance = model.noise_covariance_analytic();
    out.provenance = NoiseModel::Provenance::Analytic;
    return out;
}

} // namespace sgdlab
