#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "xsec/estimators.hpp"
#include "xsec/numkit.hpp"
#include "xsec/oracle.hpp"
#include "xsec/section.hpp"

namespace xsec {

struct MixedDiscriminantResult {
    double value = 0.0;
    std::vector<SymMatrix> matrices;
};

/// Mixed discriminant D(A_1,...,A_k) of k symmetric matrices of order k,
/// by polarization: D = (1/k!) sum_{S subset [k]} (-1)^{k-|S|} det(sum_{i in S} A_i).
/// Normalized so that D(A,...,A) = det A. Requires k <= 12.
MixedDiscriminantResult mixed_discriminant(const std::vector<SymMatrix>& ms);

/// Evaluates det(sum_i x_i A_i) directly and through the ordered-tuple
/// expansion sum D(A_{j_1},...,A_{j_k}) x_{j_1}...x_{j_k}; returns the
/// relative residual between the two routes. Requires n^k <= 1e6.
double det_expansion_check(const std::vector<SymMatrix>& ms, const Vector& x);

struct ConvexityCheckResult {
    double max_margin = 0.0;  // worst midpoint-convexity margin (should be <= ~0)
    int pairs_evaluated = 0;
    int pairs_skipped = 0;  // rank-deficient evaluation points
};

/// Midpoint-convexity probe of g(t) = log det(sum e^{t_i} v_i v_i^T):
/// for random (s,t) pairs in [-3,3]^n reports max of g((s+t)/2)-(g(s)+g(t))/2.
ConvexityCheckResult logdet_convexity_check(const std::vector<Vector>& vs, int pairs,
                                            std::uint64_t seed);

enum class Verdict { consistent, violation, inconclusive };
const char* verdict_name(Verdict v);

struct ScanTriple {
    Vector t0, tmid, t1;
    double f0 = 0.0, fmid = 0.0, f1 = 0.0;
    double margin = 0.0;   // fmid - (f0+f1)/2
    double stderr_ = 0.0;  // covariance-aware batch-means stderr of the margin
    Verdict verdict = Verdict::inconclusive;
};

struct ConcavityReport {
    std::vector<ScanTriple> triples;
    int violations() const;
    int consistent() const;
    int inconclusive() const;
};

/// Midpoint test of one (t0, (t0+t1)/2, t1) triple with common random
/// numbers; the margin stderr accounts for the correlation between the
/// three path points.
ScanTriple evaluate_triple(const SubspaceSpec& s, const Vector& t0, const Vector& t1,
                           const MCConfig& cfg, ProfileMode mode);

/// Samples random (t0, t1) in [-box, box]^n and tests the midpoint
/// log-concavity of the section volume with common random numbers.
/// A triple is a violation only when margin < -3 stderr.
ConcavityReport logconcavity_scan(const SubspaceSpec& s, int triples, double box,
                                  const MCConfig& cfg, ProfileMode mode);

/// f(t) = log( area(K_t cap K) / area(K) ) for the uniform measure on the
/// parallelogram K = conv{(-1,-2),(-1,-1),(1,1),(1,2)}, K_t = diag(1,e^t) K.
/// Exact polygon arithmetic; empty intersections give -inf.
std::vector<std::pair<double, double>> counterexample_curve(const Vector& ts);

/// The parallelogram K above, counterclockwise.
Polygon counterexample_parallelogram();

struct ViolationCertificate {
    double t0 = 0.0, tmid = 0.0, t1 = 0.0;
    double f0 = 0.0, fmid = 0.0, f1 = 0.0;
    double margin = 0.0;  // must come out <= -0.5
};

/// Evaluates the pinned triple (0, 10, 20), certifying that f is not concave.
ViolationCertificate counterexample_violation();

}  // namespace xsec
