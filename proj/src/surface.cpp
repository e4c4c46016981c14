#include "flatspec/surface.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "flatspec/errors.hpp"

namespace flatspec {

double polygon_area(const std::vector<Vec2>& v) {
  double s = 0;
  size_t n = v.size();
  for (size_t i = 0; i < n; ++i) s += cross(v[i], v[(i + 1) % n]);
  return 0.5 * s;
}

double interior_angle(const PlanarPolygon& p, int vertex) {
  int n = p.size();
  Vec2 out = p.vertices[(vertex + 1) % n] - p.vertices[vertex];
  Vec2 in = p.vertices[(vertex + n - 1) % n] - p.vertices[vertex];
  // CCW sweep through the interior, from the outgoing edge to the incoming.
  return ccw_angle(out, in);
}

namespace {

bool segments_properly_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double tol) {
  auto side = [&](Vec2 p, Vec2 q, Vec2 r) {
    double cr = cross(q - p, r - p);
    if (cr > tol) return 1;
    if (cr < -tol) return -1;
    return 0;
  };
  int s1 = side(a, b, c), s2 = side(a, b, d);
  int s3 = side(c, d, a), s4 = side(c, d, b);
  return s1 * s2 < 0 && s3 * s4 < 0;
}

void validate_polygon(const PlanarPolygon& p, double scale) {
  int n = p.size();
  if (n < 3) throw Error(ErrorCode::BadSpec, "polygon '" + p.id + "' has fewer than 3 vertices");
  double tol = 1e-12 * scale;
  for (int i = 0; i < n; ++i) {
    if (dist(p.vertices[i], p.vertices[(i + 1) % n]) <= tol)
      throw Error(ErrorCode::BadSpec, "polygon '" + p.id + "' has coincident consecutive vertices");
  }
  if (polygon_area(p.vertices) <= 0)
    throw Error(ErrorCode::BadSpec, "polygon '" + p.id + "' is not counterclockwise with positive area");
  double itol = 1e-12 * scale * scale;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(p.vertices[i], p.vertices[(i + 1) % n],
                                       p.vertices[j], p.vertices[(j + 1) % n], itol))
        throw Error(ErrorCode::BadSpec, "polygon '" + p.id + "' self-intersects");
    }
  }
}

}  // namespace

int HalfTranslationSurface::cone_class_of(CornerRef c) const {
  return corner_class_[c.poly][c.vertex];
}

const EdgeGluing& HalfTranslationSurface::gluing_of(EdgeSlot s) const {
  return gluings_[edge_gluing_[s.poly][s.edge]];
}

EdgeSlot HalfTranslationSurface::partner(EdgeSlot s) const {
  const EdgeGluing& g = gluing_of(s);
  return g.a == s ? g.b : g.a;
}

IsoMap HalfTranslationSurface::transition_from_partner(EdgeSlot s) const {
  // The gluing map phi identifies the start of one edge with the end of the
  // other. We need the map carrying the partner polygon's frame into the
  // frame of s's polygon.
  EdgeSlot t = partner(s);
  const EdgeGluing& g = gluing_of(s);
  Vec2 s0 = polygons_[s.poly].vertices[s.edge];
  Vec2 t1 = polygons_[t.poly].vertices[(t.edge + 1) % polygons_[t.poly].size()];
  if (g.sign == 1) {
    // partner frame -> s frame: z + (s0 - t1)
    return IsoMap{1.0, s0 - t1};
  }
  // flip: z -> -z + (s0 + t1)
  return IsoMap{-1.0, s0 + t1};
}

HalfTranslationSurface HalfTranslationSurface::build(const SurfaceSpec& spec) {
  HalfTranslationSurface s;
  s.polygons_ = spec.polygons;
  s.gluings_ = spec.gluings;
  s.marked_ = spec.marked;

  if (s.polygons_.empty()) throw Error(ErrorCode::BadSpec, "no polygons");

  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& p : s.polygons_)
    for (const Vec2& v : p.vertices) {
      lo_x = std::min(lo_x, v.x);
      hi_x = std::max(hi_x, v.x);
      lo_y = std::min(lo_y, v.y);
      hi_y = std::max(hi_y, v.y);
    }
  s.diameter_ = std::hypot(hi_x - lo_x, hi_y - lo_y);
  if (!(s.diameter_ > 0) || !std::isfinite(s.diameter_))
    throw Error(ErrorCode::BadSpec, "degenerate coordinate range");

  for (const auto& p : s.polygons_) validate_polygon(p, s.diameter_);

  // Each edge slot appears in exactly one gluing.
  s.edge_gluing_.resize(s.polygons_.size());
  for (size_t i = 0; i < s.polygons_.size(); ++i)
    s.edge_gluing_[i].assign(s.polygons_[i].size(), -1);

  auto check_slot = [&](EdgeSlot e) {
    if (e.poly < 0 || e.poly >= static_cast<int>(s.polygons_.size()) || e.edge < 0 ||
        e.edge >= s.polygons_[e.poly].size())
      throw Error(ErrorCode::BadSpec, "gluing references a nonexistent edge");
  };

  for (size_t gi = 0; gi < s.gluings_.size(); ++gi) {
    const EdgeGluing& g = s.gluings_[gi];
    check_slot(g.a);
    check_slot(g.b);
    if (g.a == g.b) throw Error(ErrorCode::BadSpec, "gluing identifies an edge with itself");
    if (g.sign != 1 && g.sign != -1) throw Error(ErrorCode::BadSpec, "gluing sign must be +1 or -1");
    for (EdgeSlot e : {g.a, g.b}) {
      if (s.edge_gluing_[e.poly][e.edge] != -1)
        throw Error(ErrorCode::BadSpec, "edge appears in more than one gluing");
      s.edge_gluing_[e.poly][e.edge] = static_cast<int>(gi);
    }
    Vec2 va = s.polygons_[g.a.poly].edge_vector(g.a.edge);
    Vec2 vb = s.polygons_[g.b.poly].edge_vector(g.b.edge);
    Vec2 want = g.sign == 1 ? -va : va;
    if (dist(vb, want) > 1e-9 * s.diameter_)
      throw Error(ErrorCode::HolonomyMismatch,
                  "edge vectors violate the +/- rule for gluing " + std::to_string(gi));
  }
  for (size_t pi = 0; pi < s.polygons_.size(); ++pi)
    for (int e = 0; e < s.polygons_[pi].size(); ++e)
      if (s.edge_gluing_[pi][e] == -1)
        throw Error(ErrorCode::UnmatchedEdge,
                    "edge " + std::to_string(e) + " of polygon '" + s.polygons_[pi].id +
                        "' has no gluing");

  // Corner chasing: rotating counterclockwise around a vertex crosses the
  // corner's incoming edge; the next corner is the start of the partner.
  auto next_corner = [&](CornerRef c) {
    int n = s.polygons_[c.poly].size();
    EdgeSlot in_edge{c.poly, (c.vertex + n - 1) % n};
    EdgeSlot p = s.partner(in_edge);
    return CornerRef{p.poly, p.edge};
  };

  s.corner_class_.resize(s.polygons_.size());
  for (size_t pi = 0; pi < s.polygons_.size(); ++pi)
    s.corner_class_[pi].assign(s.polygons_[pi].size(), -1);

  for (size_t pi = 0; pi < s.polygons_.size(); ++pi) {
    for (int v = 0; v < s.polygons_[pi].size(); ++v) {
      if (s.corner_class_[pi][v] != -1) continue;
      int cls = static_cast<int>(s.cone_points_.size());
      ConePoint cp;
      CornerRef start{static_cast<int>(pi), v};
      CornerRef cur = start;
      double angle = 0;
      do {
        s.corner_class_[cur.poly][cur.vertex] = cls;
        cp.corners.push_back(cur);
        angle += interior_angle(s.polygons_[cur.poly], cur.vertex);
        cur = next_corner(cur);
      } while (!(cur == start));
      cp.angle = angle;
      s.cone_points_.push_back(std::move(cp));
    }
  }

  // Snap cone angles to multiples of pi.
  for (size_t ci = 0; ci < s.cone_points_.size(); ++ci) {
    ConePoint& cp = s.cone_points_[ci];
    double m = cp.angle / kPi;
    double snapped = std::round(m);
    if (std::abs(cp.angle - snapped * kPi) > 1e-6 || snapped < 1)
      throw Error(ErrorCode::BadConeAngle,
                  "cone class " + std::to_string(ci) + " has angle " +
                      std::to_string(cp.angle) + ", not a multiple of pi");
    cp.angle = snapped * kPi;
  }

  for (const CornerRef& m : s.marked_) {
    if (m.poly < 0 || m.poly >= static_cast<int>(s.polygons_.size()) || m.vertex < 0 ||
        m.vertex >= s.polygons_[m.poly].size())
      throw Error(ErrorCode::BadSpec, "marked corner out of range");
    s.cone_points_[s.corner_class_[m.poly][m.vertex]].marked = true;
  }

  for (size_t ci = 0; ci < s.cone_points_.size(); ++ci) {
    const ConePoint& cp = s.cone_points_[ci];
    if (!cp.marked && cp.multiple() < 3)
      throw Error(ErrorCode::BadConeAngle,
                  "unmarked cone class " + std::to_string(ci) + " has angle " +
                      std::to_string(cp.multiple()) + "*pi < 3*pi");
    if (cp.marked) s.num_marked_++;
  }

  // Euler characteristic and Gauss-Bonnet.
  int V = static_cast<int>(s.cone_points_.size());
  int E = static_cast<int>(s.gluings_.size());
  int F = static_cast<int>(s.polygons_.size());
  int chi = V - E + F;
  if (chi > 2 || chi % 2 != 0)
    throw Error(ErrorCode::EulerMismatch, "Euler characteristic " + std::to_string(chi));
  s.genus_ = (2 - chi) / 2;

  int gb = 0;
  for (const ConePoint& cp : s.cone_points_) gb += cp.order();
  if (gb != 4 * s.genus_ - 4)
    throw Error(ErrorCode::EulerMismatch,
                "cone orders sum to " + std::to_string(gb) + ", expected " +
                    std::to_string(4 * s.genus_ - 4));
  if (3 * s.genus_ - 3 + s.num_marked_ < 1)
    throw Error(ErrorCode::BadSpec, "3g - 3 + p < 1");

  for (const auto& p : s.polygons_) s.area_ += polygon_area(p.vertices);
  if (!(s.area_ > 0) || !std::isfinite(s.area_))
    throw Error(ErrorCode::BadSpec, "surface area must be positive and finite");

  return s;
}

HalfTranslationSurface HalfTranslationSurface::applied(const Mat2& m) const {
  if (std::abs(m.det() - 1.0) > 1e-12)
    throw Error(ErrorCode::NotUnimodular, "surface deformation requires determinant 1");
  SurfaceSpec sp = spec();
  for (auto& p : sp.polygons)
    for (Vec2& v : p.vertices) v = m.apply(v);
  return build(sp);
}

HalfTranslationSurface HalfTranslationSurface::rotated(double theta) const {
  return applied(Mat2::rotation(theta));
}

HalfTranslationSurface HalfTranslationSurface::area_normalized() const {
  double sc = 1.0 / std::sqrt(area_);
  SurfaceSpec sp = spec();
  for (auto& p : sp.polygons)
    for (Vec2& v : p.vertices) v = v * sc;
  return build(sp);
}

SurfaceSpec HalfTranslationSurface::spec() const {
  SurfaceSpec sp;
  sp.polygons = polygons_;
  sp.gluings = gluings_;
  sp.marked = marked_;
  return sp;
}

}  // namespace flatspec
