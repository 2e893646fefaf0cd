#pragma once

#include <cstddef>
#include <vector>

#include "sgdlab/vec.hpp"

namespace sgdlab {

/// Dense symmetric matrix of 64-bit reals, stored as a full row-major square.
/// Symmetry is enforced at construction and through `set`.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim, 0.0) {}

    static SymMatrix identity(int dim);
    static SymMatrix diagonal(const Vec& diag);
    /// Builds from a full row-major buffer; throws unless exactly symmetric
    /// with finite entries.
    static SymMatrix from_rows(int dim, const Vec& rows);

    int dim() const noexcept { return dim_; }

    double operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * dim_ + j];
    }

    /// Sets both (i, j) and (j, i).
    void set(int i, int j, double v) {
        data_[static_cast<std::size_t>(i) * dim_ + j] = v;
        data_[static_cast<std::size_t>(j) * dim_ + i] = v;
    }

    Vec matvec(const Vec& x) const;
    void matvec(const Vec& x, Vec& out) const;

    /// x' A x
    double quadratic_form(const Vec& x) const;

    bool is_finite() const;

    const Vec& raw() const noexcept { return data_; }

    /// Lower-triangular factor L with A = L L'. Tolerates positive
    /// semidefinite inputs (zero pivots produce zero columns); throws
    /// NumericsError if the matrix is not PSD.
    SymMatrix cholesky_psd() const;

    /// y = L x for a lower-triangular matrix produced by cholesky_psd().
    Vec lower_apply(const Vec& x) const;

private:
    int dim_ = 0;
    Vec data_;
};

} // namespace sgdlab
