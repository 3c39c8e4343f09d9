#pragma once

#include <vector>

#include "xsec/estimators.hpp"
#include "xsec/section.hpp"

namespace xsec {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

/// Convex polygon with counterclockwise vertices. Construction merges
/// vertices closer than 1e-12 and rejects clockwise input; an empty vertex
/// list is a valid (empty) polygon.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Vec2> vertices);
    static Polygon box(double half_side);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    bool empty() const { return vertices_.empty(); }

private:
    std::vector<Vec2> vertices_;
};

/// Halfplane {p : <p, normal> <= offset}.
struct Halfplane {
    Vec2 normal;
    double offset = 0.0;
};

/// p intersected with the halfplane; convex, counterclockwise, possibly empty.
Polygon clip_polygon(const Polygon& p, const Halfplane& h);

/// Nonnegative shoelace area.
double polygon_area(const Polygon& p);

/// The edges of a convex CCW polygon as halfplanes whose intersection is p.
std::vector<Halfplane> polygon_halfplanes(const Polygon& p);

/// K = {y in R^k : sum_i |<y, v_i>| / a_i <= 1} together with the scaling
/// factor sqrt(det sum v v^T) that maps vol_k(K) to the section volume.
struct SectionBody {
    ColumnProfile profile;  // dim mode
    DilationVector a;
    SectionBody(ColumnProfile p, DilationVector dil);
};

/// 2^n prod(a) / n!  -- the whole dilated cross-polytope (dim_H = n).
double full_volume(const DilationVector& a);

/// Exact segment length for k = 1 bodies.
double volume_k1(const SectionBody& body);

/// The body K of a k = 2 section as a polygon in the profile's plane
/// coordinates, built by clipping a bounding box with one halfplane per
/// sign pattern; requires n <= 24.
Polygon section_polygon_k2(const SectionBody& body);

/// Exact section volume for k = 2 bodies:
/// area(section_polygon_k2) * sqrt(det sum v v^T).
double volume_k2(const SectionBody& body);

/// Hit-or-miss volume for any k: uniform sampling in the enclosing cube
/// [-R, R]^k, R = max(a) / sqrt(lambda_min(sum v v^T)), with binomial stderr.
VolumeEstimate volume_mc(const SectionBody& body, const MCConfig& cfg);

}  // namespace xsec
