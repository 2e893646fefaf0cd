#include "sgdlab/quadratic.hpp"

#include <cmath>

#include "sgdlab/error.hpp"
#include "sgdlab/power_iteration.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

QuadraticModel QuadraticModel::diagonal(const Vec& eigenvalues, int n_examples,
                                        double center_std, std::uint64_t seed) {
    require(!eigenvalues.empty(), "QuadraticModel: need at least one eigenvalue");
    require(n_examples >= 2 && n_examples % 2 == 0,
            "QuadraticModel: n_examples must be even and >= 2");
    for (double l : eigenvalues) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw NumericsError("QuadraticModel: eigenvalues must be finite and >= 0");
        }
    }
    QuadraticModel m;
    m.H_ = SymMatrix::diagonal(eigenvalues);
    m.eigen_ = Eigen{eigenvalues, SymMatrix::identity(static_cast<int>(eigenvalues.size()))};

    Rng rng(stream_seed(seed, {0x71u}));
    const std::size_t d = eigenvalues.size();
    m.centers_.reserve(static_cast<std::size_t>(n_examples));
    for (int p = 0; p < n_examples / 2; ++p) {
        Vec c(d);
        for (double& x : c) x = center_std * rng.gaussian();
        Vec neg(d);
        for (std::size_t i = 0; i < d; ++i) neg[i] = -c[i];
        m.centers_.push_back(std::move(c));
        m.centers_.push_back(std::move(neg));
    }
    m.finalize_centers();
    return m;
}

QuadraticModel QuadraticModel::from_matrix(const SymMatrix& H, std::vector<Vec> centers) {
    require(!centers.empty(), "QuadraticModel: need at least one center");
    for (const Vec& c : centers) {
        require(static_cast<int>(c.size()) == H.dim(),
                "QuadraticModel: center dim mismatch");
    }
    (void)H.cholesky_psd(); // enforce positive semidefiniteness up front
    QuadraticModel m;
    m.H_ = H;
    m.centers_ = std::move(centers);
    // Shift to mean zero so the full-batch loss is 1/2 w' H w + const.
    const std::size_t n = m.centers_.size();
    Vec mean(static_cast<std::size_t>(H.dim()), 0.0);
    for (const Vec& c : m.centers_) axpy(1.0, c, mean);
    scale(mean, 1.0 / static_cast<double>(n));
    for (Vec& c : m.centers_) axpy(-1.0, mean, c);
    m.finalize_centers();
    return m;
}

void QuadraticModel::finalize_centers() {
    double acc = 0.0;
    for (const Vec& c : centers_) acc += H_.quadratic_form(c);
    loss_constant_ = 0.5 * acc / static_cast<double>(centers_.size());
}

double QuadraticModel::full_loss(const Vec& omega) const {
    return 0.5 * H_.quadratic_form(omega) + loss_constant_;
}

double QuadraticModel::excess_loss(const Vec& omega) const {
    return 0.5 * H_.quadratic_form(omega);
}

Vec QuadraticModel::full_grad(const Vec& omega) const { return H_.matvec(omega); }

void QuadraticModel::full_grad(const Vec& omega, Vec& out) const {
    H_.matvec(omega, out);
}

Vec QuadraticModel::minibatch_grad(const Vec& omega, std::span<const int> batch) const {
    Vec out;
    minibatch_grad(omega, batch, out);
    return out;
}

void QuadraticModel::minibatch_grad(const Vec& omega, std::span<const int> batch,
                                    Vec& out) const {
    require(!batch.empty(), "minibatch_grad: empty batch");
    if (batch.size() == centers_.size()) {
        // Full batch: centers sum to zero, so the gradient is H w exactly.
        H_.matvec(omega, out);
        return;
    }
    Vec shifted(omega);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Vec mean_c(static_cast<std::size_t>(dim()), 0.0);
    for (int j : batch) {
        require(j >= 0 && j < n_examples(), "minibatch_grad: index out of range");
        axpy(1.0, centers_[static_cast<std::size_t>(j)], mean_c);
    }
    scale(mean_c, inv_b);
    axpy(-1.0, mean_c, shifted);
    H_.matvec(shifted, out);
}

Vec QuadraticModel::per_example_grad(int j, const Vec& omega) const {
    Vec shifted(omega);
    axpy(-1.0, centers_[static_cast<std::size_t>(j)], shifted);
    return H_.matvec(shifted);
}

double QuadraticModel::per_example_loss(int j, const Vec& omega) const {
    Vec shifted(omega);
    axpy(-1.0, centers_[static_cast<std::size_t>(j)], shifted);
    return 0.5 * H_.quadratic_form(shifted);
}

double QuadraticModel::lambda_max() const {
    if (eigen_) {
        double l = 0.0;
        for (double x : eigen_->lambda) l = std::max(l, x);
        return l;
    }
    const auto res = power_iteration(H_, 1e-12, 20000);
    if (!res.converged) {
        throw NumericsError("lambda_max: power iteration did not converge");
    }
    return res.lambda;
}

double QuadraticModel::critical_lr() const {
    const double l = lambda_max();
    if (!(l > 0.0)) {
        throw NumericsError("critical_lr: Hessian has no positive eigenvalue");
    }
    return 2.0 / l;
}

SymMatrix QuadraticModel::center_covariance() const {
    const int d = dim();
    SymMatrix cov(d);
    for (const Vec& c : centers_) {
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                cov.set(i, j, cov(i, j) + c[static_cast<std::size_t>(i)] *
                                              c[static_cast<std::size_t>(j)]);
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(centers_.size());
    SymMatrix out(d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) out.set(i, j, cov(i, j) * inv_n);
    }
    return out;
}

SymMatrix QuadraticModel::noise_covariance_analytic() const {
    const SymMatrix cov = center_covariance();
    const int d = dim();
    // H Cov H with symmetric H.
    SymMatrix out(d);
    Vec col(static_cast<std::size_t>(d));
    Vec hc(static_cast<std::size_t>(d));
    Vec hch(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) col[static_cast<std::size_t>(i)] = H_(i, j);
        cov.matvec(col, hc);
        H_.matvec(hc, hch);
        for (int i = 0; i <= j; ++i) out.set(i, j, hch[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace sgdlab
