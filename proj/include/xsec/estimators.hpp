#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "xsec/rng.hpp"
#include "xsec/section.hpp"

namespace xsec {

enum class Method { codim, dim, oracle_k1, oracle_k2, oracle_mc, closed_form };
const char* method_name(Method m);

/// Monte Carlo run configuration. Results depend only on (seed, samples,
/// batches): substreams are derived per (batch, sample) with Philox
/// counters, so the worker count never changes the output.
struct MCConfig {
    std::uint64_t samples = 1'000'000;
    int batches = 40;
    std::uint64_t seed = 42;
    /// Replace the overall mean with the median of batch means. More robust
    /// under heavy-tailed integrands; the reported stderr is still the
    /// batch-means formula.
    bool median_of_means = false;
};

void validate(const MCConfig& cfg);

struct VolumeEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t samples = 0;
    Method method = Method::codim;
    int batches = 0;
    std::uint64_t seed = 0;
    /// Samples whose determinant was flagged singular; they contribute 0.
    std::uint64_t singular_samples = 0;
    /// Set when the top 0.1% of samples carries more than 20% of the total
    /// mass; the batch-means stderr is then unreliable (possibly infinite
    /// variance -- the formulas guarantee a finite mean only).
    bool tail_warning = false;
};

/// n i.i.d. standard one-sided exponentials from the given substream.
Vector sample_exponentials(Substream& stream, int n);

struct Integrand {
    double value;
    bool singular;
};

/// Per-sample integrand of the codimension-k formula:
/// det(sum_j a_j^2 y_j v_j v_j^T)^(-1/2). Terms are accumulated in a
/// canonical order (sorted by weight), so simultaneously permuting
/// (a, v, y) reproduces the value bit-for-bit.
Integrand codim_integrand(const ColumnProfile& p, std::span<const double> a,
                          std::span<const double> y);

/// Per-sample integrand of the dimension-k formula:
/// (prod_i y_i)^(-1/2) * det(sum_i v_i v_i^T / (y_i a_i^2))^(-1/2),
/// with the same canonical-order guarantee.
Integrand dim_integrand(const ColumnProfile& p, std::span<const double> a,
                        std::span<const double> y);

/// Volume of diag(a) B_1^n intersected with H, estimated through the
/// complement profile: 2^(n-k)/((n-k)! pi^(k/2)) * prod(a) * E[integrand].
VolumeEstimate estimate_codim(const ColumnProfile& p, const DilationVector& a,
                              const MCConfig& cfg);

/// Same volume through a spanning profile of H:
/// 2^k/(k! pi^((n-k)/2)) * sqrt(det sum v v^T) * E[integrand].
VolumeEstimate estimate_dim(const ColumnProfile& p, const DilationVector& a,
                            const MCConfig& cfg);

struct PathEstimate {
    std::vector<double> logvol;        // one per requested t
    std::vector<double> stderr_log;    // delta-method batch-means stderr
    std::vector<std::uint64_t> singular;
    /// batch_means[t][b]: per-batch mean of the integrand at ts[t]. The same
    /// exponential draws back every t (common random numbers), so these are
    /// strongly correlated across t and usable for covariance estimates.
    std::vector<std::vector<double>> batch_means;
    std::vector<double> log_prefactor;
    std::uint64_t samples = 0;
    int batches = 0;
    std::uint64_t seed = 0;
};

/// log vol_H(diag(e^t) B_1^n cap H) at each t, sharing exponential draws
/// across the whole path (sample i at t is paired with sample i at t').
PathEstimate estimate_logvol_path(const SubspaceSpec& s, const std::vector<LogDilation>& ts,
                                  ProfileMode mode, const MCConfig& cfg);

/// |(1/2) e^{-|x|} - E[(2 pi)^{-1/2} (2Y)^{-1/2} e^{-x^2/(4Y)}]| with the
/// expectation evaluated by deterministic quadrature (y = -log u on (0,1),
/// composite Gauss-Legendre on dyadically graded panels).
double density_identity_check(double x, int quadrature_points);

namespace detail {
/// Runs fn(batch) for every batch index, possibly on several workers.
/// XSEC_THREADS caps the worker count; outputs must go to per-batch slots.
void for_each_batch(int batches, const std::function<void(int)>& fn);
}  // namespace detail

}  // namespace xsec
