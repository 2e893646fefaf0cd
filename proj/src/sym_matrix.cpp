#include "sgdlab/sym_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "sgdlab/error.hpp"

namespace sgdlab {

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(const Vec& diag) {
    SymMatrix m(static_cast<int>(diag.size()));
    for (int i = 0; i < m.dim(); ++i) m.set(i, i, diag[static_cast<std::size_t>(i)]);
    return m;
}

SymMatrix SymMatrix::from_rows(int dim, const Vec& rows) {
    require(dim >= 1, "SymMatrix: dim must be >= 1");
    require(rows.size() == static_cast<std::size_t>(dim) * dim,
            "SymMatrix: buffer size does not match dim*dim");
    SymMatrix m(dim);
    m.data_ = rows;
    if (!m.is_finite()) throw NumericsError("SymMatrix: non-finite entry");
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            if (m(i, j) != m(j, i)) {
                throw NumericsError("SymMatrix: input is not symmetric");
            }
        }
    }
    return m;
}

Vec SymMatrix::matvec(const Vec& x) const {
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    matvec(x, out);
    return out;
}

void SymMatrix::matvec(const Vec& x, Vec& out) const {
    out.assign(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
        const double* row = data_.data() + static_cast<std::size_t>(i) * dim_;
        double s = 0.0;
        for (int j = 0; j < dim_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s;
    }
}

double SymMatrix::quadratic_form(const Vec& x) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double* row = data_.data() + static_cast<std::size_t>(i) * dim_;
        double ri = 0.0;
        for (int j = 0; j < dim_; ++j) ri += row[j] * x[static_cast<std::size_t>(j)];
        s += x[static_cast<std::size_t>(i)] * ri;
    }
    return s;
}

bool SymMatrix::is_finite() const { return all_finite(data_); }

SymMatrix SymMatrix::cholesky_psd() const {
    SymMatrix L(dim_);
    double scale = 0.0;
    for (int i = 0; i < dim_; ++i) scale = std::max(scale, std::fabs((*this)(i, i)));
    const double tol = 1e-12 * std::max(scale, 1.0);

    for (int j = 0; j < dim_; ++j) {
        double d = (*this)(j, j);
        for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (d < -tol) {
            throw NumericsError("cholesky_psd: matrix is not positive semidefinite");
        }
        if (d <= tol) {
            // Semidefinite direction: zero pivot, column stays zero. Any
            // non-trivial coupling below would make the matrix indefinite.
            for (int i = j + 1; i < dim_; ++i) {
                double off = (*this)(i, j);
                for (int k = 0; k < j; ++k) off -= L(i, k) * L(j, k);
                if (std::fabs(off) > 1e-8 * std::max(scale, 1.0)) {
                    throw NumericsError(
                        "cholesky_psd: matrix is not positive semidefinite");
                }
            }
            continue;
        }
        const double ljj = std::sqrt(d);
        L.data_[static_cast<std::size_t>(j) * dim_ + j] = ljj;
        for (int i = j + 1; i < dim_; ++i) {
            double off = (*this)(i, j);
            for (int k = 0; k < j; ++k) off -= L(i, k) * L(j, k);
            L.data_[static_cast<std::size_t>(i) * dim_ + j] = off / ljj;
        }
    }
    return L;
}

Vec SymMatrix::lower_apply(const Vec& x) const {
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
        const double* row = data_.data() + static_cast<std::size_t>(i) * dim_;
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

} // namespace sgdlab
