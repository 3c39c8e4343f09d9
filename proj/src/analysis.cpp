#include "xsec/analysis.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace xsec {

MixedDiscriminantResult mixed_discriminant(const std::vector<SymMatrix>& ms) {
    const int k = static_cast<int>(ms.size());
    if (k < 1) throw std::invalid_argument("mixed_discriminant: empty list");
    if (k > 12) throw std::invalid_argument("mixed_discriminant: order > 12 not supported");
    for (const auto& m : ms)
        if (m.order() != k)
            throw std::invalid_argument("mixed_discriminant: need k matrices of order k");

    double acc = 0.0;
    SymMatrix sum(k);
    const std::uint32_t full = (1u << k) - 1u;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        sum.fill_zero();
        for (int i = 0; i < k; ++i)
            if ((mask >> i) & 1u) sum.add_scaled(ms[static_cast<size_t>(i)], 1.0);
        const int sign = ((k - std::popcount(mask)) % 2 == 0) ? 1 : -1;
        acc += sign * determinant(sum);
    }
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    return {acc / kfact, ms};
}

double det_expansion_check(const std::vector<SymMatrix>& ms, const Vector& x) {
    const int n = static_cast<int>(ms.size());
    if (n < 1) throw std::invalid_argument("det_expansion_check: empty list");
    const int k = ms[0].order();
    for (const auto& m : ms)
        if (m.order() != k) throw std::invalid_argument("det_expansion_check: mixed orders");
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("det_expansion_check: x length mismatch");
    if (std::pow(static_cast<double>(n), k) > 1e6)
        throw std::invalid_argument("det_expansion_check: n^k exceeds 1e6");

    SymMatrix direct_sum(k);
    for (int i = 0; i < n; ++i) direct_sum.add_scaled(ms[static_cast<size_t>(i)], x[static_cast<size_t>(i)]);
    const double direct = determinant(direct_sum);

    // Ordered-tuple expansion with the mixed discriminant memoized on the
    // sorted tuple (it is symmetric in its arguments).
    std::map<std::vector<int>, double> memo;
    const auto mixed_of = [&](std::vector<int> key) {
        std::sort(key.begin(), key.end());
        const auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<SymMatrix> tuple;
        tuple.reserve(static_cast<size_t>(k));
        for (int j : key) tuple.push_back(ms[static_cast<size_t>(j)]);
        const double d = mixed_discriminant(tuple).value;
        memo.emplace(std::move(key), d);
        return d;
    };

    double expanded = 0.0;
    std::vector<int> idx(static_cast<size_t>(k), 0);
    for (;;) {
        double coeff = 1.0;
        for (int j : idx) coeff *= x[static_cast<size_t>(j)];
        expanded += coeff * mixed_of(idx);
        int pos = k - 1;
        while (pos >= 0 && ++idx[static_cast<size_t>(pos)] == n) {
            idx[static_cast<size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }

    const double denom = std::max(std::abs(direct), std::abs(expanded));
    return denom > 0.0 ? std::abs(direct - expanded) / denom : 0.0;
}

namespace {

std::optional<double> logdet_at(const std::vector<Vector>& vs, const Vector& t) {
    const int kk = static_cast<int>(vs[0].size());
    SymMatrix m(kk);
    for (size_t i = 0; i < vs.size(); ++i) m.add_outer(std::exp(t[i]), vs[i]);
    return cholesky_logdet(m);
}

}  // namespace

ConvexityCheckResult logdet_convexity_check(const std::vector<Vector>& vs, int pairs,
                                            std::uint64_t seed) {
    if (vs.empty()) throw std::invalid_argument("logdet_convexity_check: no vectors");
    const int n = static_cast<int>(vs.size());
    const int k = static_cast<int>(vs[0].size());
    for (const auto& v : vs)
        if (static_cast<int>(v.size()) != k)
            throw std::invalid_argument("logdet_convexity_check: ragged vectors");
    {
        SymMatrix gram(k);
        for (const auto& v : vs) gram.add_outer(1.0, v);
        if (!cholesky_logdet(gram))
            throw std::invalid_argument("logdet_convexity_check: vectors do not span R^k");
    }

    ConvexityCheckResult res;
    res.max_margin = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < pairs; ++p) {
        Substream stream(seed, static_cast<std::uint32_t>(p), 0,
                         Substream::kDomainConvexityPairs);
        Vector s(static_cast<size_t>(n)), t(static_cast<size_t>(n)), mid(static_cast<size_t>(n));
        for (auto& v : s) v = stream.uniform(-3.0, 3.0);
        for (auto& v : t) v = stream.uniform(-3.0, 3.0);
        for (int i = 0; i < n; ++i)
            mid[static_cast<size_t>(i)] = 0.5 * (s[static_cast<size_t>(i)] + t[static_cast<size_t>(i)]);
        const auto gs = logdet_at(vs, s), gt = logdet_at(vs, t), gm = logdet_at(vs, mid);
        if (!gs || !gt || !gm) {
            ++res.pairs_skipped;
            continue;
        }
        res.max_margin = std::max(res.max_margin, *gm - 0.5 * (*gs + *gt));
        ++res.pairs_evaluated;
    }
    if (res.pairs_evaluated == 0) res.max_margin = 0.0;
    return res;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::consistent: return "consistent";
        case Verdict::violation: return "violation";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

int ConcavityReport::violations() const {
    return static_cast<int>(std::count_if(triples.begin(), triples.end(), [](const ScanTriple& t) {
        return t.verdict == Verdict::violation;
    }));
}

int ConcavityReport::consistent() const {
    return static_cast<int>(std::count_if(triples.begin(), triples.end(), [](const ScanTriple& t) {
        return t.verdict == Verdict::consistent;
    }));
}

int ConcavityReport::inconclusive() const {
    return static_cast<int>(std::count_if(triples.begin(), triples.end(), [](const ScanTriple& t) {
        return t.verdict == Verdict::inconclusive;
    }));
}

namespace {

/// Stderr of fmid - (f0+f1)/2 from the per-batch means of the three paired
/// estimates (common random numbers make them strongly correlated, which
/// this covariance form captures), by the delta method on the log scale.
double margin_stderr(const PathEstimate& path) {
    const int B = path.batches;
    std::array<double, 3> mu{};
    for (int i = 0; i < 3; ++i) {
        double m = 0.0;
        for (double bm : path.batch_means[static_cast<size_t>(i)]) m += bm;
        mu[static_cast<size_t>(i)] = m / B;
        if (!(mu[static_cast<size_t>(i)] > 0.0))
            return std::numeric_limits<double>::infinity();
    }
    const std::array<double, 3> w{-0.5, 1.0, -0.5};
    double var = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double cov = 0.0;
            for (int b = 0; b < B; ++b)
                cov += (path.batch_means[static_cast<size_t>(i)][static_cast<size_t>(b)] -
                        mu[static_cast<size_t>(i)]) *
                       (path.batch_means[static_cast<size_t>(j)][static_cast<size_t>(b)] -
                        mu[static_cast<size_t>(j)]);
            cov /= static_cast<double>(B - 1) * B;
            var += w[static_cast<size_t>(i)] * w[static_cast<size_t>(j)] * cov /
                   (mu[static_cast<size_t>(i)] * mu[static_cast<size_t>(j)]);
        }
    return std::sqrt(std::max(var, 0.0));
}

Verdict classify(double margin, double se) {
    if (margin < -3.0 * se) return Verdict::violation;
    if (margin > 3.0 * se) return Verdict::consistent;
    if (se == 0.0 && margin >= 0.0) return Verdict::consistent;  // exact-zero margin
    return Verdict::inconclusive;
}

}  // namespace

ScanTriple evaluate_triple(const SubspaceSpec& s, const Vector& t0, const Vector& t1,
                           const MCConfig& cfg, ProfileMode mode) {
    Vector tmid(t0.size());
    for (size_t c = 0; c < t0.size(); ++c) tmid[c] = 0.5 * (t0[c] + t1[c]);
    const PathEstimate path = estimate_logvol_path(
        s, {LogDilation(t0), LogDilation(tmid), LogDilation(t1)}, mode, cfg);

    ScanTriple st;
    st.t0 = t0;
    st.tmid = tmid;
    st.t1 = t1;
    st.f0 = path.logvol[0];
    st.fmid = path.logvol[1];
    st.f1 = path.logvol[2];
    st.margin = st.fmid - 0.5 * (st.f0 + st.f1);
    st.stderr_ = margin_stderr(path);
    st.verdict =
        std::isfinite(st.margin) ? classify(st.margin, st.stderr_) : Verdict::inconclusive;
    return st;
}

ConcavityReport logconcavity_scan(const SubspaceSpec& s, int triples, double box,
                                  const MCConfig& cfg, ProfileMode mode) {
    if (triples < 1) throw std::invalid_argument("logconcavity_scan: need at least one triple");
    if (!(box > 0.0)) throw std::invalid_argument("logconcavity_scan: box must be positive");

    ConcavityReport report;
    report.triples.reserve(static_cast<size_t>(triples));
    for (int i = 0; i < triples; ++i) {
        Substream draw(cfg.seed, static_cast<std::uint32_t>(i), 0, Substream::kDomainScanTriples);
        Vector t0(static_cast<size_t>(s.n)), t1(static_cast<size_t>(s.n));
        for (auto& v : t0) v = draw.uniform(-box, box);
        for (auto& v : t1) v = draw.uniform(-box, box);

        // Per-triple estimator seed so triples are independent while the
        // three path points still share draws.
        const auto sub = philox4x32_10({static_cast<std::uint32_t>(i), 0, 0, 0xC0FFEEu},
                                       {static_cast<std::uint32_t>(cfg.seed),
                                        static_cast<std::uint32_t>(cfg.seed >> 32)});
        MCConfig tcfg = cfg;
        tcfg.seed = (static_cast<std::uint64_t>(sub[0]) << 32) | sub[1];
        report.triples.push_back(evaluate_triple(s, t0, t1, tcfg, mode));
    }
    return report;
}

Polygon counterexample_parallelogram() {
    return Polygon({{-1.0, -2.0}, {1.0, 1.0}, {1.0, 2.0}, {-1.0, -1.0}});
}

namespace {

double curve_value(double t, const Polygon& K, const std::vector<Halfplane>& K_planes,
                   double areaK) {
    const double ey = std::exp(t);
    std::vector<Vec2> scaled;
    scaled.reserve(K.vertices().size());
    for (const Vec2& v : K.vertices()) scaled.push_back({v.x, ey * v.y});
    Polygon cut(std::move(scaled));
    for (const auto& h : K_planes) {
        cut = clip_polygon(cut, h);
        if (cut.empty()) break;
    }
    const double area = polygon_area(cut);
    return area > 0.0 ? std::log(area / areaK) : -std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<std::pair<double, double>> counterexample_curve(const Vector& ts) {
    const Polygon K = counterexample_parallelogram();
    const auto planes = polygon_halfplanes(K);
    const double areaK = polygon_area(K);
    std::vector<std::pair<double, double>> out;
    out.reserve(ts.size());
    for (double t : ts) out.emplace_back(t, curve_value(t, K, planes, areaK));
    return out;
}

ViolationCertificate counterexample_violation() {
    const auto curve = counterexample_curve({0.0, 10.0, 20.0});
    ViolationCertificate cert;
    cert.t0 = 0.0;
    cert.tmid = 10.0;
    cert.t1 = 20.0;
    cert.f0 = curve[0].second;
    cert.fmid = curve[1].second;
    cert.f1 = curve[2].second;
    cert.margin = cert.fmid - 0.5 * (cert.f0 + cert.f1);
    return cert;
}

}  // namespace xsec
