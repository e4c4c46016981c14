#include "flatspec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "flatspec/errors.hpp"

namespace flatspec {

namespace {

// Ear clipping on a simple CCW polygon, returning index triples. Flat
// vertices (angle pi) are never chosen as ear tips.
std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& pts, double scale) {
  std::vector<int> idx(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> tris;
  double tol = 1e-12 * scale * scale;

  auto is_convex = [&](int a, int b, int c) {
    return cross(pts[b] - pts[a], pts[c] - pts[b]) > tol;
  };
  auto inside_tri = [&](Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    double d1 = cross(b - a, p - a);
    double d2 = cross(c - b, p - b);
    double d3 = cross(a - c, p - c);
    return d1 >= -tol && d2 >= -tol && d3 >= -tol;
  };

  int guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    size_t n = idx.size();
    for (size_t i = 0; i < n; ++i) {
      int a = idx[(i + n - 1) % n], b = idx[i], c = idx[(i + 1) % n];
      if (!is_convex(a, b, c)) continue;
      bool ok = true;
      for (int j : idx) {
        if (j == a || j == b || j == c) continue;
        if (inside_tri(pts[j], pts[a], pts[b], pts[c])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<long>(i));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 10000)
      throw Error(ErrorCode::BadSpec, "polygon triangulation failed");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

TriMesh::TriMesh(const HalfTranslationSurface& surface) : surface_(&surface) {
  triangulate(surface);
  build_fans();
}

void TriMesh::triangulate(const HalfTranslationSurface& s) {
  // polygon edge slot -> (tri, edge) carrying it
  std::map<std::pair<int, int>, std::pair<int, int>> boundary;
  // diagonal (poly, lo vertex, hi vertex) -> first (tri, edge) seen
  std::map<std::array<int, 3>, std::pair<int, int>> diagonals;

  for (size_t pi = 0; pi < s.polygons().size(); ++pi) {
    const PlanarPolygon& poly = s.polygons()[pi];
    auto tri_idx = ear_clip(poly.vertices, s.diameter());
    int n = poly.size();
    for (const auto& t : tri_idx) {
      Tri tri;
      tri.source_poly = static_cast<int>(pi);
      for (int k = 0; k < 3; ++k) {
        tri.p[k] = poly.vertices[t[k]];
        tri.source_vertex[k] = t[k];
        tri.vclass[k] = s.cone_class_of({static_cast<int>(pi), t[k]});
        tri.nbr_tri[k] = -1;
        tri.source_edge[k] = -1;
      }
      int ti = static_cast<int>(tris_.size());
      tris_.push_back(tri);
      for (int k = 0; k < 3; ++k) {
        int u = t[k], v = t[(k + 1) % 3];
        if ((u + 1) % n == v) {
          boundary[{static_cast<int>(pi), u}] = {ti, k};
        } else {
          std::array<int, 3> key{static_cast<int>(pi), std::min(u, v), std::max(u, v)};
          auto it = diagonals.find(key);
          if (it == diagonals.end()) {
            diagonals[key] = {ti, k};
          } else {
            auto [tj, ej] = it->second;
            tris_[ti].nbr_tri[k] = tj;
            tris_[ti].nbr_edge[k] = ej;
            tris_[ti].from_nbr[k] = IsoMap::identity();
            tris_[tj].nbr_tri[ej] = ti;
            tris_[tj].nbr_edge[ej] = k;
            tris_[tj].from_nbr[ej] = IsoMap::identity();
          }
        }
      }
    }
  }

  for (size_t gi = 0; gi < s.gluings().size(); ++gi) {
    const EdgeGluing& g = s.gluings()[gi];
    auto [ta, ea] = boundary.at({g.a.poly, g.a.edge});
    auto [tb, eb] = boundary.at({g.b.poly, g.b.edge});
    tris_[ta].nbr_tri[ea] = tb;
    tris_[ta].nbr_edge[ea] = eb;
    tris_[ta].from_nbr[ea] = s.transition_from_partner(g.a);
    tris_[ta].source_edge[ea] = static_cast<int>(gi);
    tris_[tb].nbr_tri[eb] = ta;
    tris_[tb].nbr_edge[eb] = ea;
    tris_[tb].from_nbr[eb] = s.transition_from_partner(g.b);
    tris_[tb].source_edge[eb] = static_cast<int>(gi);
  }
}

void TriMesh::build_fans() {
  int num_classes = static_cast<int>(surface_->cone_points().size());
  fans_.assign(num_classes, {});
  corner_fan_.assign(3 * tris_.size(), -1);
  corner_wedge_.assign(3 * tris_.size(), -1);

  std::vector<bool> seen(3 * tris_.size(), false);
  for (size_t t0 = 0; t0 < tris_.size(); ++t0) {
    for (int k0 = 0; k0 < 3; ++k0) {
      if (seen[3 * t0 + k0]) continue;
      int cls = tris_[t0].vclass[k0];
      VertexFan& fan = fans_[cls];
      if (!fan.wedges.empty())
        throw Error(ErrorCode::BadSpec, "vertex fan visited twice");

      int t = static_cast<int>(t0), k = k0;
      IsoMap dev = IsoMap::translation(-tris_[t0].p[k0]);
      double acc = 0;
      do {
        seen[3 * t + k] = true;
        const Tri& tri = tris_[t];
        Wedge w;
        w.tri = t;
        w.corner = k;
        w.start_angle = acc;
        Vec2 out = tri.p[(k + 1) % 3] - tri.p[k];
        Vec2 in = tri.p[(k + 2) % 3] - tri.p[k];
        w.angle = ccw_angle(out, in);
        w.out_dir_dev = normalized(dev.apply_dir(out));
        w.dev_sign = dev.s;
        corner_fan_[3 * t + k] = cls;
        corner_wedge_[3 * t + k] = static_cast<int>(fan.wedges.size());
        fan.wedges.push_back(w);
        acc += w.angle;

        // Rotate counterclockwise: cross the incoming edge (k+2 -> k).
        int e = (k + 2) % 3;
        int nt = tri.nbr_tri[e];
        int ne = tri.nbr_edge[e];
        dev = dev.compose(tris_[nt].from_nbr[ne].inverse());
        // The next wedge sits at the start corner of the partner edge.
        t = nt;
        k = ne;
      } while (!(t == static_cast<int>(t0) && k == k0));
      fan.cone_angle = acc;

      double expect = surface_->cone_points()[cls].angle;
      if (std::abs(acc - expect) > 1e-6)
        throw Error(ErrorCode::BadConeAngle, "fan angle disagrees with cone angle");
    }
  }
}

double TriMesh::ray_coordinate(int tri, int corner, Vec2 dir) const {
  auto [cls, wi] = wedge_of_corner(tri, corner);
  const Wedge& w = fans_[cls].wedges[wi];
  Vec2 dev_dir = dir * w.dev_sign;
  double delta = ccw_angle(w.out_dir_dev, dev_dir);
  if (delta > w.angle) {
    // Rays on the closing boundary of the wedge wrap to angle ~2pi;
    // clamp back into the wedge.
    if (delta > kPi) delta = (2 * kPi - delta < delta - w.angle) ? 0.0 : w.angle;
    else delta = w.angle;
  }
  double coord = w.start_angle + delta;
  double total = fans_[cls].cone_angle;
  if (coord >= total) coord -= total;
  return coord;
}

TriMesh::RaySeed TriMesh::seed_ray(int cone_class, double coord) const {
  const VertexFan& fan = fans_[cone_class];
  double total = fan.cone_angle;
  coord = std::fmod(coord, total);
  if (coord < 0) coord += total;

  for (size_t i = 0; i < fan.wedges.size(); ++i) {
    const Wedge& w = fan.wedges[i];
    double delta = coord - w.start_angle;
    if (delta < -1e-12 || delta > w.angle + 1e-12) continue;
    RaySeed seed;
    seed.tri = w.tri;
    seed.corner = w.corner;
    Vec2 dev_dir = rotated(w.out_dir_dev, std::clamp(delta, 0.0, w.angle));
    seed.dir = dev_dir * w.dev_sign;  // back into the triangle frame
    if (delta <= 1e-12) {
      seed.along_edge = true;
      seed.edge = w.corner;
    } else if (delta >= w.angle - 1e-12) {
      seed.along_edge = true;
      seed.edge = (w.corner + 2) % 3;
    }
    return seed;
  }
  throw Error(ErrorCode::BadSpec, "ray coordinate outside all wedges");
}

TraceResult trace_ray(const TriMesh& mesh, int tri, Vec2 pos, Vec2 dir,
                      double budget) {
  TraceResult res;
  const auto& tris = mesh.tris();
  double tol = mesh.point_tol();
  double step_eps = 1e-13 * mesh.surface().diameter();
  dir = normalized(dir);

  IsoMap to_start = IsoMap::identity();  // current frame -> starting frame
  Vec2 start_in_start = pos;
  int cur = tri;
  Vec2 p = pos;
  Vec2 d = dir;
  int entry_edge = -1;

  auto finish_at = [&](Vec2 end, int cls) {
    res.hit_cone = cls >= 0;
    res.cone_class = cls;
    res.length += dist(p, end);
    res.displacement = to_start.apply(end) - start_in_start;
    res.end_tri = cur;
    res.end_pos = end;
    res.end_dir = d;
  };

  const long guard_max = 100000000;
  for (long guard = 0; guard < guard_max; ++guard) {
    const TriMesh::Tri& t = tris[cur];

    double best_exit = 0;
    int exit_edge = -1;
    double exit_param = 0;
    for (int k = 0; k < 3; ++k) {
      if (k == entry_edge) continue;
      Vec2 a = t.p[k];
      Vec2 e = t.p[(k + 1) % 3] - a;
      double denom = cross(d, e);
      if (std::abs(denom) < 1e-300) continue;
      double s = cross(a - p, e) / denom;        // along the ray
      double u = cross(p - a, d) / cross(e, d);  // along the edge
      if (s <= step_eps || u < -1e-12 || u > 1 + 1e-12) continue;
      if (exit_edge == -1 || s < best_exit) {
        best_exit = s;
        exit_edge = k;
        exit_param = std::clamp(u, 0.0, 1.0);
      }
    }
    if (exit_edge == -1) {
      // The ray leaves exactly through a vertex.
      for (int k = 0; k < 3; ++k) {
        double along = dot(t.p[k] - p, d);
        if (along > step_eps && norm(t.p[k] - (p + d * along)) <= 4 * tol) {
          finish_at(t.p[k], t.vclass[k]);
          return res;
        }
      }
      throw Error(ErrorCode::BadPath, "ray trace lost inside a triangle");
    }

    Vec2 hit = p + d * best_exit;
    // Hitting a vertex ends the trace at a cone point.
    for (int k = 0; k < 3; ++k) {
      if (norm(hit - t.p[k]) <= tol) {
        finish_at(t.p[k], t.vclass[k]);
        return res;
      }
    }

    if (res.length + best_exit > budget) {
      res.budget_exceeded = true;
      finish_at(p, -1);
      res.hit_cone = false;
      return res;
    }
    res.length += best_exit;

    int nt = t.nbr_tri[exit_edge];
    int ne = t.nbr_edge[exit_edge];
    const IsoMap& fn = t.from_nbr[exit_edge];  // nt frame -> cur frame
    IsoMap inv = fn.inverse();
    p = inv.apply(hit);
    d = inv.apply_dir(d);
    to_start = to_start.compose(fn);
    cur = nt;
    entry_edge = ne;
    // The identification reverses edge orientation: param u becomes 1 - u.
    res.crossings.push_back({cur, ne, 1.0 - exit_param});
  }
  throw Error(ErrorCode::BudgetExceeded, "trace step guard exceeded");
}

}  // namespace flatspec
