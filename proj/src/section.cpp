#include "xsec/section.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace xsec {

namespace {

/// Flip each row so its first coordinate of magnitude > 1e-12 is positive.
std::vector<Vector> fix_signs(std::vector<Vector> rows) {
    for (auto& r : rows) {
        for (double v : r) {
            if (std::abs(v) > 1e-12) {
                if (v < 0.0)
                    for (double& x : r) x = -x;
                break;
            }
        }
    }
    return rows;
}

ColumnProfile columns_of(ProfileMode mode, int n, const std::vector<Vector>& rows) {
    const int k = static_cast<int>(rows.size());
    std::vector<Vector> cols(static_cast<size_t>(n), Vector(static_cast<size_t>(k)));
    for (int r = 0; r < k; ++r)
        for (int i = 0; i < n; ++i)
            cols[static_cast<size_t>(i)][static_cast<size_t>(r)] =
                rows[static_cast<size_t>(r)][static_cast<size_t>(i)];
    return ColumnProfile{mode, k, n, std::move(cols)};
}

}  // namespace

SubspaceSpec make_subspace(int n, GivenAs given_as, std::vector<Vector> rows) {
    BasisMatrix basis(n, std::move(rows));
    const int dim_H = given_as == GivenAs::basis_of_H ? basis.k() : n - basis.k();
    if (dim_H < 1)
        throw std::invalid_argument("make_subspace: subspace has dimension 0");
    return SubspaceSpec{n, given_as, std::move(basis), dim_H};
}

ColumnProfile codim_profile(const SubspaceSpec& s) {
    if (s.dim_H >= s.n)
        throw std::invalid_argument(
            "codim_profile: H fills the ambient space; use the closed-form volume");
    BasisMatrix perp = s.given_as == GivenAs::basis_of_H ? complement_basis(s.basis)
                                                         : orthonormalize(s.basis);
    return columns_of(ProfileMode::codim, s.n, fix_signs(perp.rows()));
}

ColumnProfile dim_profile(const SubspaceSpec& s, bool orthonormalize_first) {
    if (s.given_as == GivenAs::basis_of_complement) {
        BasisMatrix span = complement_basis(s.basis);
        return columns_of(ProfileMode::dim, s.n, fix_signs(span.rows()));
    }
    if (orthonormalize_first) {
        BasisMatrix q = orthonormalize(s.basis);
        return columns_of(ProfileMode::dim, s.n, fix_signs(q.rows()));
    }
    return columns_of(ProfileMode::dim, s.n, s.basis.rows());
}

DilationVector::DilationVector(Vector values) : a(std::move(values)) {
    if (a.empty()) throw std::invalid_argument("DilationVector: empty");
    for (double v : a)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("dilation entries must be positive");
}

LogDilation::LogDilation(Vector values) : t(std::move(values)) {
    if (t.empty()) throw std::invalid_argument("LogDilation: empty");
    for (double v : t)
        if (!std::isfinite(v)) throw std::invalid_argument("LogDilation: non-finite entry");
}

DilationVector to_dilation(const LogDilation& t) {
    Vector a(t.t.size());
    for (size_t i = 0; i < t.t.size(); ++i) {
        a[i] = std::exp(t.t[i]);
        if (!std::isfinite(a[i]))
            throw std::range_error("to_dilation: exp overflow at coordinate " + std::to_string(i));
        if (a[i] <= 0.0)
            throw std::range_error("to_dilation: exp underflow at coordinate " + std::to_string(i));
    }
    return DilationVector(std::move(a));
}

SymMatrix profile_gram(const ColumnProfile& p) {
    SymMatrix g(p.k);
    for (const auto& v : p.columns) g.add_outer(1.0, v);
    return g;
}

}  // namespace xsec
