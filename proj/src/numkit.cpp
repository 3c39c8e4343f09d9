#include "xsec/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace xsec {

namespace {

void require_finite(double v, const char* where) {
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(where) + ": non-finite entry");
}

}  // namespace

SymMatrix::SymMatrix(int order) : order_(order) {
    if (order < 1) throw std::invalid_argument("SymMatrix: order must be >= 1");
    data_.assign(static_cast<size_t>(order) * order, 0.0);
}

SymMatrix SymMatrix::identity(int order) {
    SymMatrix m(order);
    for (int i = 0; i < order; ++i) m.data_[static_cast<size_t>(i) * order + i] = 1.0;
    return m;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.order_; ++i) {
        require_finite(d[static_cast<size_t>(i)], "SymMatrix::diagonal");
        m.data_[static_cast<size_t>(i) * m.order_ + i] = d[static_cast<size_t>(i)];
    }
    return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<Vector>& rows) {
    const int k = static_cast<int>(rows.size());
    SymMatrix m(k);
    double scale = 0.0;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != k)
            throw std::invalid_argument("SymMatrix::from_rows: not square");
        for (double v : r) {
            require_finite(v, "SymMatrix::from_rows");
            scale = std::max(scale, std::abs(v));
        }
    }
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double d = std::abs(rows[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                                      rows[static_cast<size_t>(j)][static_cast<size_t>(i)]);
            if (d > 1e-12 * std::max(1.0, scale))
                throw std::invalid_argument("SymMatrix::from_rows: not symmetric");
            m.data_[static_cast<size_t>(i) * k + j] = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
    return m;
}

void SymMatrix::set(int i, int j, double v) {
    require_finite(v, "SymMatrix::set");
    data_[static_cast<size_t>(i) * order_ + j] = v;
    data_[static_cast<size_t>(j) * order_ + i] = v;
}

void SymMatrix::fill_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void SymMatrix::add_outer(double w, std::span<const double> v) {
    if (static_cast<int>(v.size()) != order_)
        throw std::invalid_argument("SymMatrix::add_outer: size mismatch");
    for (int i = 0; i < order_; ++i) {
        const double wi = w * v[static_cast<size_t>(i)];
        double* row = data_.data() + static_cast<size_t>(i) * order_;
        for (int j = 0; j < order_; ++j) row[j] += wi * v[static_cast<size_t>(j)];
    }
}

void SymMatrix::add_scaled(const SymMatrix& other, double c) {
    if (other.order_ != order_)
        throw std::invalid_argument("SymMatrix::add_scaled: order mismatch");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += c * other.data_[i];
}

double SymMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < order_; ++i) t += at(i, i);
    return t;
}

double SymMatrix::max_diag() const {
    double m = at(0, 0);
    for (int i = 1; i < order_; ++i) m = std::max(m, at(i, i));
    return m;
}

double SymMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

namespace detail {

std::optional<double> cholesky_logdet_inplace(double* a, int k) {
    double max_diag = 0.0;
    for (int i = 0; i < k; ++i) max_diag = std::max(max_diag, a[static_cast<size_t>(i) * k + i]);
    if (!(max_diag > 0.0)) return std::nullopt;
    const double tol = 1e-12 * max_diag;

    double logdet = 0.0;
    for (int j = 0; j < k; ++j) {
        double* rowj = a + static_cast<size_t>(j) * k;
        double d = rowj[j];
        for (int p = 0; p < j; ++p) d -= rowj[p] * rowj[p];
        if (!(d > tol)) return std::nullopt;
        const double l = std::sqrt(d);
        rowj[j] = l;
        logdet += std::log(l);
        for (int i = j + 1; i < k; ++i) {
            double* rowi = a + static_cast<size_t>(i) * k;
            double s = rowi[j];
            for (int p = 0; p < j; ++p) s -= rowi[p] * rowj[p];
            rowi[j] = s / l;
        }
    }
    return 2.0 * logdet;
}

}  // namespace detail

std::optional<double> cholesky_logdet(const SymMatrix& m) {
    std::vector<double> a = m.data();
    return detail::cholesky_logdet_inplace(a.data(), m.order());
}

double determinant(const SymMatrix& m) {
    const int k = m.order();
    std::vector<double> a = m.data();
    double det = 1.0;
    for (int j = 0; j < k; ++j) {
        int piv = j;
        double big = std::abs(a[static_cast<size_t>(j) * k + j]);
        for (int i = j + 1; i < k; ++i) {
            const double v = std::abs(a[static_cast<size_t>(i) * k + j]);
            if (v > big) { big = v; piv = i; }
        }
        if (big == 0.0) return 0.0;
        if (piv != j) {
            for (int c = 0; c < k; ++c)
                std::swap(a[static_cast<size_t>(piv) * k + c], a[static_cast<size_t>(j) * k + c]);
            det = -det;
        }
        const double pivot = a[static_cast<size_t>(j) * k + j];
        det *= pivot;
        for (int i = j + 1; i < k; ++i) {
            const double f = a[static_cast<size_t>(i) * k + j] / pivot;
            if (f == 0.0) continue;
            for (int c = j; c < k; ++c)
                a[static_cast<size_t>(i) * k + c] -= f * a[static_cast<size_t>(j) * k + c];
        }
    }
    return det;
}

double min_eigenvalue(const SymMatrix& m) {
    const int k = m.order();
    for (double v : m.data()) require_finite(v, "min_eigenvalue");
    if (k == 1) return m.at(0, 0);

    std::vector<double> a = m.data();
    auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * k + j]; };

    double frob = 0.0;
    for (double v : a) frob += v * v;
    frob = std::sqrt(frob);
    if (frob == 0.0) return 0.0;
    const double stop = 1e-15 * frob;

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < k; ++p)
            for (int q = p + 1; q < k; ++q) off += 2.0 * at(p, q) * at(p, q);
        if (std::sqrt(off) <= stop) break;

        for (int p = 0; p < k; ++p) {
            for (int q = p + 1; q < k; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < k; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < k; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
            }
        }
    }
    double lo = at(0, 0);
    for (int i = 1; i < k; ++i) lo = std::min(lo, at(i, i));
    return lo;
}

namespace {

double dot(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm(const Vector& x) { return std::sqrt(dot(x, x)); }

/// Modified Gram-Schmidt with one re-orthogonalization pass. Appends the
/// orthonormalized `rows` to `q`; a row whose residual drops below
/// `rel_tol` times its original norm is either skipped (skip_dependent)
/// or reported as an error with its index.
std::vector<Vector> mgs_extend(std::vector<Vector> q, const std::vector<Vector>& rows,
                               double rel_tol, bool skip_dependent, const char* who) {
    for (size_t r = 0; r < rows.size(); ++r) {
        Vector v = rows[r];
        const double orig = norm(v);
        if (!(orig > 0.0)) {
            if (skip_dependent) continue;
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(r) +
                                        " is zero");
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : q) {
                const double c = dot(v, u);
                for (size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
            }
        }
        const double res = norm(v);
        if (res <= rel_tol * orig) {
            if (skip_dependent) continue;
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(r) +
                                        " is linearly dependent on the preceding rows");
        }
        for (double& x : v) x /= res;
        q.push_back(std::move(v));
    }
    return q;
}

}  // namespace

BasisMatrix::BasisMatrix(int ambient_dim, std::vector<Vector> rows) : n_(ambient_dim) {
    if (n_ < 1) throw std::invalid_argument("BasisMatrix: ambient dimension must be >= 1");
    if (rows.empty()) throw std::invalid_argument("BasisMatrix: no rows");
    if (static_cast<int>(rows.size()) > n_)
        throw std::invalid_argument("BasisMatrix: more rows than the ambient dimension");
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != n_)
            throw std::invalid_argument("BasisMatrix: row length does not match ambient dimension");
        for (double v : r) require_finite(v, "BasisMatrix");
    }
    mgs_extend({}, rows, 1e-10, false, "BasisMatrix");  // rank check only
    rows_ = std::move(rows);
}

BasisMatrix orthonormalize(const BasisMatrix& b) {
    return BasisMatrix(b.n(), mgs_extend({}, b.rows(), 1e-10, false, "orthonormalize"));
}

BasisMatrix complement_basis(const BasisMatrix& b) {
    const int n = b.n(), k = b.k();
    if (k >= n)
        throw std::invalid_argument("complement_basis: subspace already fills the ambient space");
    std::vector<Vector> q = mgs_extend({}, b.rows(), 1e-10, false, "complement_basis");
    std::vector<Vector> coords;
    coords.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vector e(static_cast<size_t>(n), 0.0);
        e[static_cast<size_t>(i)] = 1.0;
        coords.push_back(std::move(e));
    }
    // Coordinate candidates nearly inside span(q) are skipped (threshold 1e-8).
    std::vector<Vector> full = mgs_extend(std::move(q), coords, 1e-8, true, "complement_basis");
    if (static_cast<int>(full.size()) < n)
        throw std::runtime_error("complement_basis: failed to complete the basis");
    std::vector<Vector> comp(full.begin() + k, full.begin() + n);
    return BasisMatrix(n, std::move(comp));
}

}  // namespace xsec
