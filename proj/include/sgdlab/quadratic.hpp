#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sgdlab/sym_matrix.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

/// Per-example quadratic loss family. Example j has loss
///   L_j(w) = 1/2 (w - c_j)' H (w - c_j)
/// with centers summing to zero, so the full-batch loss is
///   C(w) = 1/2 w' H w + const.
///
/// This family has an exact, parameter-independent gradient-noise covariance
/// H Cov(c) H, which is what makes it useful as an oracle-backed stand-in for
/// a real training loss.
class QuadraticModel {
public:
    struct Eigen {
        Vec lambda;   ///< eigenvalues, same order as columns of V
        SymMatrix v;  ///< orthonormal eigenvectors (columns)
    };

    /// Diagonal Hessian with the given eigenvalues and random centers drawn
    /// as +/- antithetic Gaussian pairs scaled by center_std, so the center
    /// sum is exactly zero. Requires an even number of examples.
    static QuadraticModel diagonal(const Vec& eigenvalues, int n_examples,
                                   double center_std, std::uint64_t seed);

    /// General symmetric PSD Hessian; centers are shifted to mean zero.
    /// No analytic spectrum is attached.
    static QuadraticModel from_matrix(const SymMatrix& H, std::vector<Vec> centers);

    int dim() const noexcept { return H_.dim(); }
    int n_examples() const noexcept { return static_cast<int>(centers_.size()); }
    const SymMatrix& hessian() const noexcept { return H_; }
    const std::optional<Eigen>& eigen() const noexcept { return eigen_; }
    const Vec& center(int j) const { return centers_[static_cast<std::size_t>(j)]; }

    /// C(w) = 1/2 w' H w + loss_constant()
    double full_loss(const Vec& omega) const;
    /// C(w) - min_w C(w) = 1/2 w' H w
    double excess_loss(const Vec& omega) const;
    double loss_constant() const noexcept { return loss_constant_; }

    /// Full-batch gradient H w.
    Vec full_grad(const Vec& omega) const;
    void full_grad(const Vec& omega, Vec& out) const;

    /// Mean gradient over a batch of example indices:
    ///   (1/B) sum_j H (w - c_j).
    /// A batch covering all N examples returns H w exactly.
    Vec minibatch_grad(const Vec& omega, std::span<const int> batch) const;
    void minibatch_grad(const Vec& omega, std::span<const int> batch, Vec& out) const;

    Vec per_example_grad(int j, const Vec& omega) const;
    double per_example_loss(int j, const Vec& omega) const;

    /// Largest Hessian eigenvalue: analytic when the spectrum is attached,
    /// otherwise by power iteration.
    double lambda_max() const;

    /// Critical learning rate 2 / lambda_max. Throws NumericsError when the
    /// Hessian has no positive eigenvalue.
    double critical_lr() const;

    /// Exact covariance of the centers, (1/N) sum_j c_j c_j'.
    SymMatrix center_covariance() const;

    /// Exact per-example gradient covariance H Cov(c) H.
    SymMatrix noise_covariance_analytic() const;

private:
    SymMatrix H_;
    std::vector<Vec> centers_;
    std::optional<Eigen> eigen_;
    double loss_constant_ = 0.0;

    void finalize_centers();
};

} // namespace sgdlab
