#pragma once

#include <optional>
#include <span>
#include <vector>

namespace xsec {

using Vector = std::vector<double>;

/// Small dense symmetric matrix, full row-major storage.
/// Symmetry is maintained by construction: writes go through set() /
/// add_outer() / add_scaled(), which update both triangles.
class SymMatrix {
public:
    explicit SymMatrix(int order);
    static SymMatrix identity(int order);
    static SymMatrix diagonal(const Vector& d);
    /// Builds from full row data; throws if rows are not square/symmetric
    /// (within 1e-12 relative) or contain non-finite entries.
    static SymMatrix from_rows(const std::vector<Vector>& rows);

    int order() const { return order_; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * order_ + j]; }
    void set(int i, int j, double v);
    void fill_zero();

    /// m += w * v v^T
    void add_outer(double w, std::span<const double> v);
    /// m += c * other
    void add_scaled(const SymMatrix& other, double c);

    double trace() const;
    double max_diag() const;
    double max_abs() const;
    const std::vector<double>& data() const { return data_; }

private:
    int order_;
    std::vector<double> data_;
};

namespace detail {
/// Destructive Cholesky on a row-major k*k buffer. Returns log det, or
/// nullopt when a pivot falls at or below 1e-12 * (largest diagonal entry
/// of the input), which covers both singular and indefinite inputs.
std::optional<double> cholesky_logdet_inplace(double* a, int k);
}  // namespace detail

/// Log-determinant via Cholesky; nullopt flags singular/indefinite input.
std::optional<double> cholesky_logdet(const SymMatrix& m);

/// Determinant via LU with partial pivoting; valid for any symmetric input,
/// including indefinite ones (unlike cholesky_logdet).
double determinant(const SymMatrix& m);

/// Smallest eigenvalue by cyclic Jacobi sweeps. Intended for PSD inputs of
/// small order; accurate to ~1e-9 relative.
double min_eigenvalue(const SymMatrix& m);

/// Rows of a k x n matrix with linearly independent rows, 1 <= k <= n.
/// Independence is verified at construction with the same modified
/// Gram-Schmidt pass used by orthonormalize().
class BasisMatrix {
public:
    BasisMatrix(int ambient_dim, std::vector<Vector> rows);

    int n() const { return n_; }
    int k() const { return static_cast<int>(rows_.size()); }
    const Vector& row(int i) const { return rows_[static_cast<size_t>(i)]; }
    const std::vector<Vector>& rows() const { return rows_; }

private:
    int n_;
    std::vector<Vector> rows_;
};

/// Modified Gram-Schmidt with one re-orthogonalization pass. The result
/// spans the same subspace; its Gram matrix is the identity to ~1e-14.
/// Throws naming the offending row when the input is rank deficient.
BasisMatrix orthonormalize(const BasisMatrix& b);

/// Orthonormal basis of the orthogonal complement, built by completing the
/// orthonormalized input rows with coordinate vectors (candidates whose
/// residual falls below 1e-8 are skipped). Requires k < n.
BasisMatrix complement_basis(const BasisMatrix& b);

}  // namespace xsec
