#include "xsec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace xsec {

namespace {

constexpr double kVertexMergeTol = 1e-12;

double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

double signed_area2(const std::vector<Vec2>& v) {
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % v.size()];
        s += cross(p, q);
    }
    return s;
}

std::vector<Vec2> merge_close_vertices(std::vector<Vec2> v) {
    std::vector<Vec2> out;
    out.reserve(v.size());
    for (const Vec2& p : v) {
        if (!out.empty() && std::abs(p.x - out.back().x) <= kVertexMergeTol &&
            std::abs(p.y - out.back().y) <= kVertexMergeTol)
            continue;
        out.push_back(p);
    }
    while (out.size() > 1 && std::abs(out.front().x - out.back().x) <= kVertexMergeTol &&
           std::abs(out.front().y - out.back().y) <= kVertexMergeTol)
        out.pop_back();
    return out;
}

}  // namespace

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(merge_close_vertices(std::move(vertices))) {
    for (const Vec2& p : vertices_)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("Polygon: non-finite vertex");
    if (vertices_.size() >= 3) {
        double scale = 0.0;
        for (const Vec2& p : vertices_) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
        if (signed_area2(vertices_) < -1e-12 * scale * scale)
            throw std::invalid_argument("Polygon: vertices are clockwise");
        const size_t m = vertices_.size();
        for (size_t i = 0; i < m; ++i) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[(i + 1) % m];
            const Vec2& c = vertices_[(i + 2) % m];
            const double turn = cross({b.x - a.x, b.y - a.y}, {c.x - b.x, c.y - b.y});
            if (turn < -1e-9 * scale * scale)
                throw std::invalid_argument("Polygon: vertices are not convex");
        }
    }
}

Polygon Polygon::box(double half_side) {
    if (!(half_side > 0.0)) throw std::invalid_argument("Polygon::box: side must be positive");
    return Polygon({{-half_side, -half_side},
                    {half_side, -half_side},
                    {half_side, half_side},
                    {-half_side, half_side}});
}

Polygon clip_polygon(const Polygon& p, const Halfplane& h) {
    const auto& v = p.vertices();
    if (v.empty()) return Polygon{};
    std::vector<Vec2> out;
    out.reserve(v.size() + 1);
    for (size_t i = 0; i < v.size(); ++i) {
        const Vec2& cur = v[i];
        const Vec2& nxt = v[(i + 1) % v.size()];
        const double dc = dot(cur, h.normal) - h.offset;
        const double dn = dot(nxt, h.normal) - h.offset;
        if (dc <= 0.0) {
            out.push_back(cur);
            if (dn > 0.0) {
                const double t = dc / (dc - dn);
                out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
            }
        } else if (dn <= 0.0) {
            const double t = dc / (dc - dn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return Polygon(std::move(out));
}

double polygon_area(const Polygon& p) {
    if (p.vertices().size() < 3) return 0.0;
    return std::abs(0.5 * signed_area2(p.vertices()));
}

std::vector<Halfplane> polygon_halfplanes(const Polygon& p) {
    const auto& v = p.vertices();
    if (v.size() < 3) throw std::invalid_argument("polygon_halfplanes: degenerate polygon");
    std::vector<Halfplane> hs;
    hs.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        const Vec2 outward{b.y - a.y, a.x - b.x};  // right of the CCW edge
        hs.push_back({outward, dot(a, outward)});
    }
    return hs;
}

SectionBody::SectionBody(ColumnProfile p, DilationVector dil)
    : profile(std::move(p)), a(std::move(dil)) {
    if (profile.mode != ProfileMode::dim)
        throw std::invalid_argument("SectionBody: profile must be in dim mode");
    if (profile.n != a.n())
        throw std::invalid_argument("SectionBody: profile/dilation length mismatch");
}

double full_volume(const DilationVector& a) {
    double v = 1.0;
    for (int i = 0; i < a.n(); ++i) v *= 2.0 * a.a[static_cast<size_t>(i)] / (i + 1);
    return v;
}

double volume_k1(const SectionBody& body) {
    if (body.profile.k != 1) throw std::invalid_argument("volume_k1: profile k must be 1");
    double c = 0.0, sq = 0.0;
    for (int i = 0; i < body.profile.n; ++i) {
        const double vi = body.profile.columns[static_cast<size_t>(i)][0];
        c += std::abs(vi) / body.a.a[static_cast<size_t>(i)];
        sq += vi * vi;
    }
    if (c == 0.0) throw std::invalid_argument("volume_k1: all column entries are zero");
    return 2.0 * std::sqrt(sq) / c;
}

namespace {

struct DirectedPlane {
    double angle;
    Vec2 w;       // halfplane is <y, w> <= 1, plus its reflection
    double norm;
};

/// Enclosing radius of K: |y| <= max(a) / sqrt(lambda_min(sum v v^T)).
double enclosing_radius(const SectionBody& body, double* scale_out) {
    const SymMatrix gram = profile_gram(body.profile);
    const auto logdet = cholesky_logdet(gram);
    if (!logdet)
        throw std::invalid_argument("section body: columns do not span R^k");
    if (scale_out) *scale_out = std::exp(0.5 * *logdet);
    const double lam = min_eigenvalue(gram);
    const double amax = *std::max_element(body.a.a.begin(), body.a.a.end());
    return amax / std::sqrt(lam);
}

}  // namespace

Polygon section_polygon_k2(const SectionBody& body) {
    if (body.profile.k != 2) throw std::invalid_argument("volume_k2: profile k must be 2");
    const int n = body.profile.n;
    if (n > 24) throw std::invalid_argument("volume_k2: n > 24 not supported");

    const double radius = enclosing_radius(body, nullptr);

    // One halfplane per sign pattern with eps_0 = +1; the mirrored pattern
    // is applied as the reflection of the same normal.
    std::vector<DirectedPlane> planes;
    planes.reserve(static_cast<size_t>(1) << (n - 1));
    const std::uint32_t patterns = 1u << (n - 1);
    for (std::uint32_t bits = 0; bits < patterns; ++bits) {
        Vec2 w{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const double sign = (i > 0 && (bits >> (i - 1)) & 1u) ? -1.0 : 1.0;
            const double f = sign / body.a.a[static_cast<size_t>(i)];
            w.x += f * body.profile.columns[static_cast<size_t>(i)][0];
            w.y += f * body.profile.columns[static_cast<size_t>(i)][1];
        }
        const double norm = std::hypot(w.x, w.y);
        if (norm <= 1e-14) continue;  // cancelled pattern, constraint is vacuous
        planes.push_back({std::atan2(w.y, w.x), w, norm});
    }

    // Near-parallel normals (within 1e-12 rad) collapse to the tightest one.
    std::sort(planes.begin(), planes.end(),
              [](const DirectedPlane& l, const DirectedPlane& r) { return l.angle < r.angle; });
    std::vector<DirectedPlane> kept;
    for (const auto& pl : planes) {
        if (!kept.empty() && pl.angle - kept.back().angle <= 1e-12) {
            if (pl.norm > kept.back().norm) kept.back() = pl;
        } else {
            kept.push_back(pl);
        }
    }
    if (kept.size() > 1 && (kept.front().angle + 2.0 * std::numbers::pi) - kept.back().angle <= 1e-12) {
        if (kept.back().norm > kept.front().norm) kept.front() = kept.back();
        kept.pop_back();
    }

    Polygon poly = Polygon::box(2.0 * radius);
    for (const auto& pl : kept) {
        poly = clip_polygon(poly, {pl.w, 1.0});
        poly = clip_polygon(poly, {{-pl.w.x, -pl.w.y}, 1.0});
        if (poly.empty()) break;
    }
    return poly;
}

double volume_k2(const SectionBody& body) {
    double scale = 0.0;
    enclosing_radius(body, &scale);
    return polygon_area(section_polygon_k2(body)) * scale;
}

VolumeEstimate volume_mc(const SectionBody& body, const MCConfig& cfg) {
    validate(cfg);
    const int k = body.profile.k, n = body.profile.n;
    double scale = 0.0;
    const double radius = enclosing_radius(body, &scale);

    const int B = cfg.batches;
    const std::uint64_t per_batch = cfg.samples / static_cast<std::uint64_t>(B);
    std::vector<std::uint64_t> hits(static_cast<size_t>(B), 0);

    detail::for_each_batch(B, [&](int b) {
        std::uint64_t h = 0;
        std::vector<double> y(static_cast<size_t>(k));
        for (std::uint64_t s = 0; s < per_batch; ++s) {
            Substream stream(cfg.seed, static_cast<std::uint32_t>(b),
                             static_cast<std::uint32_t>(s), Substream::kDomainCube);
            for (auto& c : y) c = stream.uniform(-radius, radius);
            double norm1 = 0.0;
            for (int i = 0; i < n; ++i) {
                const Vector& v = body.profile.columns[static_cast<size_t>(i)];
                double d = 0.0;
                for (int r = 0; r < k; ++r) d += y[static_cast<size_t>(r)] * v[static_cast<size_t>(r)];
                norm1 += std::abs(d) / body.a.a[static_cast<size_t>(i)];
                if (norm1 > 1.0) break;
            }
            if (norm1 <= 1.0) ++h;
        }
        hits[static_cast<size_t>(b)] = h;
    });

    const std::uint64_t total_hits = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
    const double N = static_cast<double>(cfg.samples);
    const double phat = static_cast<double>(total_hits) / N;
    double cube = 1.0;
    for (int r = 0; r < k; ++r) cube *= 2.0 * radius;

    VolumeEstimate est;
    est.value = cube * phat * scale;
    est.stderr_ = cube * scale * std::sqrt(phat * (1.0 - phat) / N);
    est.samples = cfg.samples;
    est.method = Method::oracle_mc;
    est.batches = B;
    est.seed = cfg.seed;
    return est;
}

}  // namespace xsec
