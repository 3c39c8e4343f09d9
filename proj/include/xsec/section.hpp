#pragma once

#include <vector>

#include "xsec/numkit.hpp"

namespace xsec {

enum class GivenAs { basis_of_H, basis_of_complement };

/// A subspace H of R^n, given either by a basis of H itself or by a basis
/// of its orthogonal complement. Rows are stored as supplied.
struct SubspaceSpec {
    int n;
    GivenAs given_as;
    BasisMatrix basis;
    int dim_H;
};

SubspaceSpec make_subspace(int n, GivenAs given_as, std::vector<Vector> rows);

enum class ProfileMode { codim, dim };

/// The n column vectors v_1..v_n in R^k read off a k x n matrix whose rows
/// generate either the complement of H (codim mode, rows orthonormal) or H
/// itself (dim mode, any spanning rows).
struct ColumnProfile {
    ProfileMode mode;
    int k;
    int n;
    std::vector<Vector> columns;  // n entries, each of dimension k
};

/// Profile over an orthonormal basis of the complement of H; requires
/// dim_H < n. Row signs are fixed so the first nonzero coordinate of each
/// generating row is positive.
ColumnProfile codim_profile(const SubspaceSpec& s);

/// Profile over a spanning basis of H. Rows given directly are used as-is
/// (no orthonormalization) unless orthonormalize_first is set; a basis
/// obtained by complementing is orthonormal and sign-fixed.
ColumnProfile dim_profile(const SubspaceSpec& s, bool orthonormalize_first = false);

/// Positive coordinate scales a_1..a_n.
struct DilationVector {
    Vector a;
    explicit DilationVector(Vector values);
    int n() const { return static_cast<int>(a.size()); }
};

/// Log-scales t_1..t_n; converts to DilationVector by a_i = exp(t_i).
struct LogDilation {
    Vector t;
    explicit LogDilation(Vector values);
    int n() const { return static_cast<int>(t.size()); }
};

DilationVector to_dilation(const LogDilation& t);

/// Gram matrix sum_i v_i v_i^T of a profile's columns.
SymMatrix profile_gram(const ColumnProfile& p);

}  // namespace xsec
