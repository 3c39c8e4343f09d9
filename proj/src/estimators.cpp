#include "xsec/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace xsec {

const char* method_name(Method m) {
    switch (m) {
        case Method::codim: return "codim";
        case Method::dim: return "dim";
        case Method::oracle_k1: return "oracle_k1";
        case Method::oracle_k2: return "oracle_k2";
        case Method::oracle_mc: return "oracle_mc";
        case Method::closed_form: return "closed_form";
    }
    return "?";
}

void validate(const MCConfig& cfg) {
    if (cfg.batches < 2) throw std::invalid_argument("MCConfig: batches must be >= 2");
    if (cfg.samples < static_cast<std::uint64_t>(cfg.batches))
        throw std::invalid_argument("MCConfig: samples must be >= batches");
    if (cfg.samples % static_cast<std::uint64_t>(cfg.batches) != 0)
        throw std::invalid_argument("MCConfig: batches must divide samples");
    if (cfg.samples / static_cast<std::uint64_t>(cfg.batches) > 0xFFFFFFFFull)
        throw std::invalid_argument("MCConfig: batch size exceeds the 32-bit sample counter");
}

Vector sample_exponentials(Substream& stream, int n) {
    Vector y(static_cast<size_t>(n));
    for (auto& v : y) v = stream.exponential();
    return y;
}

namespace detail {

void for_each_batch(int batches, const std::function<void(int)>& fn) {
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap < 1) cap = 1;
    if (const char* env = std::getenv("XSEC_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) cap = v;
    }
    const int workers = std::min(cap, batches);
    if (workers <= 1) {
        for (int b = 0; b < batches; ++b) fn(b);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int b = next.fetch_add(1);
                if (b >= batches) return;
                fn(b);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

namespace {

struct Workspace {
    std::vector<double> w;
    std::vector<int> order;
    std::vector<double> m;  // k*k accumulator, consumed by the Cholesky
};

/// Canonical accumulation order: sort indices by (weight, y, column entries).
/// Under a simultaneous permutation of (a_i, v_i, y_i) the sorted term
/// sequence is unchanged, so floating-point sums reproduce exactly.
void canonical_order(const ColumnProfile& p, std::span<const double> y, Workspace& ws) {
    const int n = p.n;
    ws.order.resize(static_cast<size_t>(n));
    std::iota(ws.order.begin(), ws.order.end(), 0);
    std::sort(ws.order.begin(), ws.order.end(), [&](int i, int j) {
        const size_t si = static_cast<size_t>(i), sj = static_cast<size_t>(j);
        if (ws.w[si] != ws.w[sj]) return ws.w[si] < ws.w[sj];
        if (y[si] != y[sj]) return y[si] < y[sj];
        return p.columns[si] < p.columns[sj];
    });
}

Integrand codim_integrand_ws(const ColumnProfile& p, std::span<const double> a,
                             std::span<const double> y, Workspace& ws) {
    const int n = p.n, k = p.k;
    ws.w.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const size_t s = static_cast<size_t>(i);
        ws.w[s] = a[s] * a[s] * y[s];
        if (!std::isfinite(ws.w[s])) return {0.0, true};
    }
    canonical_order(p, y, ws);
    ws.m.assign(static_cast<size_t>(k) * k, 0.0);
    for (int idx : ws.order) {
        const size_t s = static_cast<size_t>(idx);
        const Vector& v = p.columns[s];
        for (int r = 0; r < k; ++r) {
            const double wr = ws.w[s] * v[static_cast<size_t>(r)];
            double* row = ws.m.data() + static_cast<size_t>(r) * k;
            for (int c = 0; c < k; ++c) row[c] += wr * v[static_cast<size_t>(c)];
        }
    }
    const auto logdet = xsec::detail::cholesky_logdet_inplace(ws.m.data(), k);
    if (!logdet) return {0.0, true};
    return {std::exp(-0.5 * *logdet), false};
}

Integrand dim_integrand_ws(const ColumnProfile& p, std::span<const double> a,
                           std::span<const double> y, Workspace& ws) {
    const int n = p.n, k = p.k;
    ws.w.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const size_t s = static_cast<size_t>(i);
        ws.w[s] = 1.0 / (y[s] * (a[s] * a[s]));
        if (!std::isfinite(ws.w[s])) return {0.0, true};
    }
    canonical_order(p, y, ws);
    ws.m.assign(static_cast<size_t>(k) * k, 0.0);
    double sum_log_y = 0.0;
    for (int idx : ws.order) {
        const size_t s = static_cast<size_t>(idx);
        sum_log_y += std::log(y[s]);
        const Vector& v = p.columns[s];
        for (int r = 0; r < k; ++r) {
            const double wr = ws.w[s] * v[static_cast<size_t>(r)];
            double* row = ws.m.data() + static_cast<size_t>(r) * k;
            for (int c = 0; c < k; ++c) row[c] += wr * v[static_cast<size_t>(c)];
        }
    }
    const auto logdet = xsec::detail::cholesky_logdet_inplace(ws.m.data(), k);
    if (!logdet) return {0.0, true};
    return {std::exp(-0.5 * sum_log_y - 0.5 * *logdet), false};
}

using Kernel = Integrand (*)(const ColumnProfile&, std::span<const double>,
                             std::span<const double>, Workspace&);

void check_profile(const ColumnProfile& p, const DilationVector& a, ProfileMode want) {
    if (p.mode != want) throw std::invalid_argument("estimator: wrong profile mode");
    if (p.n != a.n()) throw std::invalid_argument("estimator: profile/dilation length mismatch");
    if (p.k < 1) throw std::invalid_argument("estimator: empty profile");
}

double log_prefactor_codim(const ColumnProfile& p, const Vector& a) {
    const int n = p.n, k = p.k;
    double lc = (n - k) * std::numbers::ln2 - std::lgamma(static_cast<double>(n - k) + 1.0) -
                0.5 * k * std::log(std::numbers::pi);
    for (double ai : a) lc += std::log(ai);
    return lc;
}

double log_prefactor_dim(const ColumnProfile& p) {
    const int n = p.n, k = p.k;
    const auto logdet_gram = cholesky_logdet(profile_gram(p));
    if (!logdet_gram)
        throw std::invalid_argument("estimator: profile columns do not span R^k");
    return k * std::numbers::ln2 - std::lgamma(static_cast<double>(k) + 1.0) -
           0.5 * (n - k) * std::log(std::numbers::pi) + 0.5 * *logdet_gram;
}

struct BatchStats {
    double sum = 0.0;
    std::uint64_t singular = 0;
    std::vector<double> top;  // min-heap of the largest integrand values
};

/// Batched mean of a per-sample kernel with deterministic in-order merging.
/// Tracks the mass carried by the top 0.1% of samples for the tail warning.
VolumeEstimate run_mean_estimator(const ColumnProfile& p, const DilationVector& a,
                                  const MCConfig& cfg, Method method, Kernel kernel,
                                  double log_prefactor) {
    validate(cfg);
    const int B = cfg.batches;
    const std::uint64_t per_batch = cfg.samples / static_cast<std::uint64_t>(B);
    const size_t top_cap = static_cast<size_t>(std::max<std::uint64_t>(1, cfg.samples / 1000));

    std::vector<BatchStats> stats(static_cast<size_t>(B));
    detail::for_each_batch(B, [&](int b) {
        BatchStats st;
        Workspace ws;
        Vector y(static_cast<size_t>(p.n));
        for (std::uint64_t s = 0; s < per_batch; ++s) {
            Substream stream(cfg.seed, static_cast<std::uint32_t>(b),
                             static_cast<std::uint32_t>(s), Substream::kDomainExponential);
            for (auto& v : y) v = stream.exponential();
            const Integrand g = kernel(p, a.a, y, ws);
            if (g.singular) {
                ++st.singular;
                continue;
            }
            st.sum += g.value;
            if (st.top.size() < top_cap) {
                st.top.push_back(g.value);
                std::push_heap(st.top.begin(), st.top.end(), std::greater<>());
            } else if (g.value > st.top.front()) {
                std::pop_heap(st.top.begin(), st.top.end(), std::greater<>());
                st.top.back() = g.value;
                std::push_heap(st.top.begin(), st.top.end(), std::greater<>());
            }
        }
        stats[static_cast<size_t>(b)] = std::move(st);
    });

    std::vector<double> batch_means(static_cast<size_t>(B));
    double total = 0.0;
    std::uint64_t singular = 0;
    std::vector<double> top_pool;
    for (int b = 0; b < B; ++b) {
        const auto& st = stats[static_cast<size_t>(b)];
        batch_means[static_cast<size_t>(b)] = st.sum / static_cast<double>(per_batch);
        total += st.sum;
        singular += st.singular;
        top_pool.insert(top_pool.end(), st.top.begin(), st.top.end());
    }
    const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) /
                        static_cast<double>(B);
    double var = 0.0;
    for (double bm : batch_means) var += (bm - mean) * (bm - mean);
    const double se_mean = std::sqrt(var / (static_cast<double>(B) * (B - 1)));

    std::sort(top_pool.begin(), top_pool.end(), std::greater<>());
    if (top_pool.size() > top_cap) top_pool.resize(top_cap);
    const double top_mass = std::accumulate(top_pool.begin(), top_pool.end(), 0.0);

    double center = mean;
    if (cfg.median_of_means) {
        std::vector<double> sorted = batch_means;
        std::sort(sorted.begin(), sorted.end());
        const size_t h = sorted.size() / 2;
        center = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    }

    const double scale = std::exp(log_prefactor);
    VolumeEstimate est;
    est.value = scale * center;
    est.stderr_ = scale * se_mean;
    est.samples = cfg.samples;
    est.method = method;
    est.batches = B;
    est.seed = cfg.seed;
    est.singular_samples = singular;
    est.tail_warning = total > 0.0 && top_mass > 0.20 * total;
    return est;
}

}  // namespace

Integrand codim_integrand(const ColumnProfile& p, std::span<const double> a,
                          std::span<const double> y) {
    Workspace ws;
    return codim_integrand_ws(p, a, y, ws);
}

Integrand dim_integrand(const ColumnProfile& p, std::span<const double> a,
                        std::span<const double> y) {
    Workspace ws;
    return dim_integrand_ws(p, a, y, ws);
}

VolumeEstimate estimate_codim(const ColumnProfile& p, const DilationVector& a,
                              const MCConfig& cfg) {
    check_profile(p, a, ProfileMode::codim);
    return run_mean_estimator(p, a, cfg, Method::codim, codim_integrand_ws,
                              log_prefactor_codim(p, a.a));
}

VolumeEstimate estimate_dim(const ColumnProfile& p, const DilationVector& a,
                            const MCConfig& cfg) {
    check_profile(p, a, ProfileMode::dim);
    return run_mean_estimator(p, a, cfg, Method::dim, dim_integrand_ws, log_prefactor_dim(p));
}

PathEstimate estimate_logvol_path(const SubspaceSpec& s, const std::vector<LogDilation>& ts,
                                  ProfileMode mode, const MCConfig& cfg) {
    validate(cfg);
    if (ts.empty()) throw std::invalid_argument("estimate_logvol_path: empty t list");
    for (const auto& t : ts)
        if (t.n() != s.n)
            throw std::invalid_argument("estimate_logvol_path: t dimension mismatch");

    const ColumnProfile profile = mode == ProfileMode::codim ? codim_profile(s) : dim_profile(s);
    const Kernel kernel = mode == ProfileMode::codim ? codim_integrand_ws : dim_integrand_ws;
    const size_t T = ts.size();

    std::vector<DilationVector> dils;
    dils.reserve(T);
    for (const auto& t : ts) dils.push_back(to_dilation(t));

    std::vector<double> log_pref(T);
    for (size_t i = 0; i < T; ++i)
        log_pref[i] = mode == ProfileMode::codim ? log_prefactor_codim(profile, dils[i].a)
                                                 : log_prefactor_dim(profile);

    const int B = cfg.batches;
    const std::uint64_t per_batch = cfg.samples / static_cast<std::uint64_t>(B);

    std::vector<std::vector<double>> sums(T, std::vector<double>(static_cast<size_t>(B), 0.0));
    std::vector<std::vector<std::uint64_t>> sing(
        T, std::vector<std::uint64_t>(static_cast<size_t>(B), 0));

    detail::for_each_batch(B, [&](int b) {
        Workspace ws;
        Vector y(static_cast<size_t>(profile.n));
        std::vector<double> local(T, 0.0);
        std::vector<std::uint64_t> local_sing(T, 0);
        for (std::uint64_t smp = 0; smp < per_batch; ++smp) {
            Substream stream(cfg.seed, static_cast<std::uint32_t>(b),
                             static_cast<std::uint32_t>(smp), Substream::kDomainExponential);
            for (auto& v : y) v = stream.exponential();  // shared across every t
            for (size_t i = 0; i < T; ++i) {
                const Integrand g = kernel(profile, dils[i].a, y, ws);
                if (g.singular)
                    ++local_sing[i];
                else
                    local[i] += g.value;
            }
        }
        for (size_t i = 0; i < T; ++i) {
            sums[i][static_cast<size_t>(b)] = local[i];
            sing[i][static_cast<size_t>(b)] = local_sing[i];
        }
    });

    PathEstimate out;
    out.logvol.resize(T);
    out.stderr_log.resize(T);
    out.singular.assign(T, 0);
    out.batch_means.assign(T, std::vector<double>(static_cast<size_t>(B)));
    out.log_prefactor = log_pref;
    out.samples = cfg.samples;
    out.batches = B;
    out.seed = cfg.seed;
    for (size_t i = 0; i < T; ++i) {
        double mean = 0.0;
        for (int b = 0; b < B; ++b) {
            const double bm = sums[i][static_cast<size_t>(b)] / static_cast<double>(per_batch);
            out.batch_means[i][static_cast<size_t>(b)] = bm;
            mean += bm;
            out.singular[i] += sing[i][static_cast<size_t>(b)];
        }
        mean /= static_cast<double>(B);
        double var = 0.0;
        for (int b = 0; b < B; ++b) {
            const double d = out.batch_means[i][static_cast<size_t>(b)] - mean;
            var += d * d;
        }
        const double se = std::sqrt(var / (static_cast<double>(B) * (B - 1)));
        if (mean > 0.0) {
            out.logvol[i] = log_pref[i] + std::log(mean);
            out.stderr_log[i] = se / mean;  // delta method on the log scale
        } else {
            out.logvol[i] = -std::numeric_limits<double>::infinity();
            out.stderr_log[i] = std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

namespace {

/// Gauss-Legendre nodes/weights on (-1,1) by Newton iteration on the
/// Legendre recurrence.
void gauss_legendre(int p, std::vector<double>& x, std::vector<double>& w) {
    x.resize(static_cast<size_t>(p));
    w.resize(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (p + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int j = 2; j <= p; ++j) {
                const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = p * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = t;
        w[static_cast<size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

double density_identity_check(double x, int quadrature_points) {
    if (quadrature_points < 100)
        throw std::invalid_argument("density_identity_check: need at least 100 points");

    // Dyadic panels toward both endpoints of (0,1); the u -> 1 side is
    // parameterized by eta = 1-u so y = -log1p(-eta) stays accurate.
    constexpr int kPanelsPerSide = 70;
    const int per_panel = std::max(4, quadrature_points / (2 * kPanelsPerSide));
    std::vector<double> gx, gw;
    gauss_legendre(per_panel, gx, gw);

    const double x2_over_4 = 0.25 * x * x;
    const auto integrand_y = [&](double yv) {
        return std::exp(-x2_over_4 / yv) / std::sqrt(4.0 * std::numbers::pi * yv);
    };

    double rhs = 0.0;
    for (int j = kPanelsPerSide; j >= 1; --j) {  // (0, 1/2]: u in [2^-j-1, 2^-j]
        const double lo = std::ldexp(1.0, -j - 1), hi = std::ldexp(1.0, -j);
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        for (size_t q = 0; q < gx.size(); ++q) {
            const double u = c + h * gx[q];
            rhs += h * gw[q] * integrand_y(-std::log(u));
        }
    }
    for (int j = 1; j <= kPanelsPerSide; ++j) {  // [1/2, 1): eta in [2^-j-1, 2^-j]
        const double lo = std::ldexp(1.0, -j - 1), hi = std::ldexp(1.0, -j);
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        for (size_t q = 0; q < gx.size(); ++q) {
            const double eta = c + h * gx[q];
            rhs += h * gw[q] * integrand_y(-std::log1p(-eta));
        }
    }

    const double lhs = 0.5 * std::exp(-std::abs(x));
    return std::abs(lhs - rhs);
}

}  // namespace xsec
