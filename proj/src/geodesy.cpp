#include "flatspec/geodesy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "flatspec/errors.hpp"

namespace flatspec {

namespace {

constexpr double kAngEps = 1e-12;  // relative tolerance for sector predicates

bool ccw_strict(Vec2 a, Vec2 b) {
  return cross(a, b) > kAngEps * norm(a) * norm(b);
}

// Intersection of two counterclockwise cones, each spanning less than pi.
bool cone_intersect(Vec2 lo1, Vec2 hi1, Vec2 lo2, Vec2 hi2, Vec2& lo, Vec2& hi) {
  lo = ccw_strict(lo1, lo2) ? lo2 : lo1;
  hi = ccw_strict(hi2, hi1) ? hi2 : hi1;
  return ccw_strict(lo, hi);
}

struct SearchState {
  int tri = -1;
  int entry_edge = -1;
  IsoMap dev;  // triangle frame -> base plane
  Vec2 lo, hi;
  int parent = -1;
};

// Minimum distance from the origin to the part of segment [a, b] visible
// within the cone (lo, hi). Conservative: falls back to the whole segment
// when the clipping is ambiguous, which only weakens the pruning.
double visible_distance(Vec2 a, Vec2 b, Vec2 lo, Vec2 hi) {
  Vec2 e = b - a;
  auto inside = [&](Vec2 p) { return cross(lo, p) >= 0 && cross(p, hi) >= 0; };
  std::vector<double> us;
  for (Vec2 ray : {lo, hi}) {
    double den = cross(ray, e);
    if (std::abs(den) < 1e-14 * norm(ray) * norm(e)) continue;
    double u = cross(ray, -a) / den;
    if (u > -1e-9 && u < 1 + 1e-9) us.push_back(std::clamp(u, 0.0, 1.0));
  }
  if (inside(a)) us.push_back(0.0);
  if (inside(b)) us.push_back(1.0);
  double ulo = 0.0, uhi = 1.0;
  if (!us.empty()) {
    ulo = *std::min_element(us.begin(), us.end());
    uhi = *std::max_element(us.begin(), us.end());
  }
  Vec2 p = a + e * ulo, q = a + e * uhi;
  Vec2 d = q - p;
  double len2 = norm2(d);
  double t = len2 > 0 ? std::clamp(-dot(p, d) / len2, 0.0, 1.0) : 0.0;
  return norm(p + d * t);
}

}  // namespace

std::vector<SaddleConnection> enumerate_saddle_connections(
    const TriMesh& mesh, double max_length, const EnumerationOptions& opts) {
  if (!(max_length > 0)) throw Error(ErrorCode::BadSpec, "length bound must be positive");
  const auto& tris = mesh.tris();
  const double L = max_length * (1 + 1e-12);

  struct BaseWedge {
    int tri, corner;
  };
  std::vector<BaseWedge> bases;
  for (const auto& fan : mesh.fans())
    for (const auto& w : fan.wedges) bases.push_back({w.tri, w.corner});

  std::atomic<long> nodes{0};
  std::atomic<bool> over_budget{false};
  const long budget = opts.node_budget;

  auto run_wedge = [&](const BaseWedge& bw, std::vector<SaddleConnection>& out) {
    const TriMesh::Tri& bt = tris[bw.tri];
    int k = bw.corner;
    Vec2 origin = bt.p[k];

    // The wedge's own outgoing edge is the first connection of the fan
    // sector; recording only this one covers every edge ray exactly once
    // around the cone point.
    {
      Vec2 hol = bt.p[(k + 1) % 3] - origin;
      if (norm(hol) <= L && canonical_orientation(hol)) {
        SaddleConnection sc;
        sc.start_class = bt.vclass[k];
        sc.end_class = bt.vclass[(k + 1) % 3];
        sc.holonomy = hol;
        sc.length = norm(hol);
        sc.start_tri = bw.tri;
        sc.start_corner = k;
        sc.end_tri = bw.tri;
        sc.end_corner = (k + 1) % 3;
        sc.start_coord = mesh.ray_coordinate(bw.tri, k, hol);
        sc.end_coord = mesh.ray_coordinate(bw.tri, (k + 1) % 3, -hol);
        out.push_back(std::move(sc));
      }
    }

    std::vector<SearchState> arena;
    std::vector<int> stack;

    {
      SearchState s0;
      s0.tri = bw.tri;
      s0.entry_edge = -1;
      s0.dev = IsoMap::translation(-origin);
      s0.lo = bt.p[(k + 1) % 3] - origin;
      s0.hi = bt.p[(k + 2) % 3] - origin;
      s0.parent = -1;
      arena.push_back(s0);  // root stays off the work stack: it has no entry edge
    }

    auto push_child = [&](int parent, int through_edge, Vec2 lo, Vec2 hi,
                          Vec2 pa, Vec2 pb) {
      if (!ccw_strict(lo, hi)) return;
      if (visible_distance(pa, pb, lo, hi) > L) return;
      SearchState st = arena[parent];
      const TriMesh::Tri& t = tris[st.tri];
      SearchState ch;
      ch.tri = t.nbr_tri[through_edge];
      ch.entry_edge = t.nbr_edge[through_edge];
      ch.dev = st.dev.compose(t.from_nbr[through_edge]);
      ch.lo = lo;
      ch.hi = hi;
      ch.parent = parent;
      arena.push_back(ch);
      stack.push_back(static_cast<int>(arena.size()) - 1);
    };

    // Initial push across the edge opposite the base corner.
    {
      SearchState s0 = arena[0];
      int opp = (k + 1) % 3;
      push_child(0, opp, s0.lo, s0.hi, s0.lo, s0.hi);
    }

    while (!stack.empty()) {
      if (over_budget.load(std::memory_order_relaxed)) return;
      if (nodes.fetch_add(1, std::memory_order_relaxed) >= budget) {
        over_budget.store(true);
        return;
      }
      int si = stack.back();
      stack.pop_back();
      SearchState st = arena[si];
      const TriMesh::Tri& t = tris[st.tri];
      int e = st.entry_edge;
      int apex = (e + 2) % 3;
      Vec2 A = st.dev.apply(t.p[e]);
      Vec2 B = st.dev.apply(t.p[(e + 1) % 3]);
      Vec2 C = st.dev.apply(t.p[apex]);

      if (norm(C) <= L && ccw_strict(st.lo, C) && ccw_strict(C, st.hi)) {
        Vec2 hol = C;
        if (canonical_orientation(hol)) {
          SaddleConnection sc;
          sc.start_class = bt.vclass[k];
          sc.end_class = t.vclass[apex];
          sc.holonomy = hol;
          sc.length = norm(hol);
          sc.start_tri = bw.tri;
          sc.start_corner = k;
          sc.end_tri = st.tri;
          sc.end_corner = apex;
          sc.start_coord = mesh.ray_coordinate(bw.tri, k, hol);
          Vec2 back_in_final = st.dev.inverse().apply_dir(-hol);
          sc.end_coord = mesh.ray_coordinate(st.tri, apex, back_in_final);
          // Entry-edge crossing parameters of the chord, root first.
          std::vector<Crossing> cr;
          for (int cur = si; cur != -1; cur = arena[cur].parent) {
            const SearchState& s = arena[cur];
            if (s.entry_edge < 0) break;
            const TriMesh::Tri& tt = tris[s.tri];
            Vec2 a = s.dev.apply(tt.p[s.entry_edge]);
            Vec2 b = s.dev.apply(tt.p[(s.entry_edge + 1) % 3]);
            double u = cross(a, hol) / (cross(a, hol) - cross(b, hol));
            cr.push_back({s.tri, s.entry_edge, u});
          }
          std::reverse(cr.begin(), cr.end());
          sc.crossings = std::move(cr);
          out.push_back(std::move(sc));
        }
      }

      // Recurse into the two far edges with sectors clipped at the apex.
      int e1 = (e + 1) % 3;  // B -> C
      int e2 = (e + 2) % 3;  // C -> A
      Vec2 lo, hi;
      if (cone_intersect(st.lo, st.hi, B, C, lo, hi)) push_child(si, e1, lo, hi, B, C);
      if (cone_intersect(st.lo, st.hi, C, A, lo, hi)) push_child(si, e2, lo, hi, C, A);
    }
  };

  int nthreads = opts.threads > 0
                     ? opts.threads
                     : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, static_cast<int>(bases.size()));

  std::vector<std::vector<SaddleConnection>> results(bases.size());
  if (nthreads <= 1) {
    for (size_t i = 0; i < bases.size(); ++i) run_wedge(bases[i], results[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= bases.size()) return;
          run_wedge(bases[i], results[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  if (over_budget.load())
    throw Error(ErrorCode::CutoffTooLarge,
                "development frontier exceeded node budget " + std::to_string(budget));

  std::vector<SaddleConnection> all;
  for (auto& r : results)
    for (auto& sc : r) all.push_back(std::move(sc));
  std::sort(all.begin(), all.end(), [](const SaddleConnection& a, const SaddleConnection& b) {
    if (a.length != b.length) return a.length < b.length;
    double ta = direction_angle(a.holonomy), tb = direction_angle(b.holonomy);
    if (ta != tb) return ta < tb;
    if (a.start_class != b.start_class) return a.start_class < b.start_class;
    if (a.start_coord != b.start_coord) return a.start_coord < b.start_coord;
    return a.end_coord < b.end_coord;
  });
  return all;
}

double angle_between_coords(double in_coord, double out_coord, double cone_angle,
                            AngleSide side) {
  double left = std::fmod(in_coord - out_coord, cone_angle);
  if (left < 0) left += cone_angle;
  return side == AngleSide::Left ? left : cone_angle - left;
}

double angle_between(const TriMesh& mesh, const SaddleConnection& s_in,
                     const SaddleConnection& s_out, AngleSide side) {
  if (s_in.end_class != s_out.start_class)
    throw Error(ErrorCode::NotIncident, "saddle connections do not share the cone point");
  double cone = mesh.fans()[s_in.end_class].cone_angle;
  return angle_between_coords(s_in.end_coord, s_out.start_coord, cone, side);
}

std::vector<SegmentPiece> connection_pieces(const TriMesh& mesh,
                                            const SaddleConnection& sc) {
  const auto& tris = mesh.tris();
  std::vector<SegmentPiece> pieces;
  int cur = sc.start_tri;
  Vec2 p = tris[cur].p[sc.start_corner];
  for (const Crossing& c : sc.crossings) {
    const TriMesh::Tri& entered = tris[c.tri];
    Vec2 q = entered.p[c.edge] +
             (entered.p[(c.edge + 1) % 3] - entered.p[c.edge]) * c.t;
    // the same point seen from the triangle being left
    int exit_edge = entered.nbr_edge[c.edge];
    const TriMesh::Tri& left = tris[cur];
    Vec2 q_prev = left.p[exit_edge] +
                  (left.p[(exit_edge + 1) % 3] - left.p[exit_edge]) * (1.0 - c.t);
    pieces.push_back({cur, p, q_prev});
    cur = c.tri;
    p = q;
  }
  pieces.push_back({cur, p, tris[sc.end_tri].p[sc.end_corner]});
  return pieces;
}

SaddleConnection reversed_connection(const TriMesh& mesh, const SaddleConnection& sc) {
  const auto& tris = mesh.tris();
  SaddleConnection r;
  r.start_class = sc.end_class;
  r.end_class = sc.start_class;
  r.length = sc.length;
  r.start_coord = sc.end_coord;
  r.end_coord = sc.start_coord;
  r.start_tri = sc.end_tri;
  r.start_corner = sc.end_corner;
  r.end_tri = sc.start_tri;
  r.end_corner = sc.start_corner;
  // Holonomy in the reversed start frame: develop backward across the
  // crossings to carry -holonomy into the end triangle's frame.
  IsoMap dev = IsoMap::identity();  // maps current frame -> start frame
  int cur = sc.start_tri;
  for (const Crossing& c : sc.crossings) {
    const TriMesh::Tri& left = tris[cur];
    int exit_edge = tris[c.tri].nbr_edge[c.edge];
    dev = dev.compose(left.from_nbr[exit_edge]);
    cur = c.tri;
  }
  r.holonomy = dev.inverse().apply_dir(-sc.holonomy);
  for (size_t i = sc.crossings.size(); i-- > 0;) {
    const Crossing& c = sc.crossings[i];
    int prev_tri = tris[c.tri].nbr_tri[c.edge];
    int prev_edge = tris[c.tri].nbr_edge[c.edge];
    r.crossings.push_back({prev_tri, prev_edge, 1.0 - c.t});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cylinders

namespace {

struct DirectionRay {
  int cone_class;
  double coord;
};

struct TracedConn {
  SaddleConnection sc;  // oriented as traced (start ray -> end ray)
};

constexpr double kRayQuant = 1e-9;

struct RayKey {
  int cls;
  long long q;
  bool operator<(const RayKey& o) const {
    return cls != o.cls ? cls < o.cls : q < o.q;
  }
};

RayKey ray_key(int cls, double coord, double cone_angle) {
  double c = std::fmod(coord, cone_angle);
  if (c < 0) c += cone_angle;
  long long q = std::llround(c / kRayQuant);
  long long top = std::llround(cone_angle / kRayQuant);
  if (q >= top) q = 0;
  return {cls, q};
}

// All rays in a +/- direction pair around every cone point.
std::vector<DirectionRay> direction_rays(const TriMesh& mesh, Vec2 u) {
  std::vector<DirectionRay> rays;
  const auto& tris = mesh.tris();
  for (size_t cls = 0; cls < mesh.fans().size(); ++cls) {
    const auto& fan = mesh.fans()[cls];
    std::set<long long> seen;
    for (const auto& w : fan.wedges) {
      Vec2 out = tris[w.tri].p[(w.corner + 1) % 3] - tris[w.tri].p[w.corner];
      for (Vec2 dir : {u, -u}) {
        double delta = ccw_angle(out, dir);
        if (delta > 2 * kPi - 1e-12) delta = 0;
        if (delta > w.angle + 1e-12) continue;
        double coord = w.start_angle + std::min(delta, w.angle);
        RayKey key = ray_key(static_cast<int>(cls), coord, fan.cone_angle);
        if (seen.insert(key.q).second)
          rays.push_back({static_cast<int>(cls), coord});
      }
    }
  }
  return rays;
}

// Traces the separatrix leaving along the given ray; nullopt when it does
// not reach a cone point within the budget.
std::optional<SaddleConnection> trace_separatrix(const TriMesh& mesh, int cls,
                                                 double coord, double budget) {
  const auto& tris = mesh.tris();
  TriMesh::RaySeed seed = mesh.seed_ray(cls, coord);
  const TriMesh::Tri& t = tris[seed.tri];

  SaddleConnection sc;
  sc.start_class = cls;
  sc.start_coord = coord;
  sc.start_tri = seed.tri;
  sc.start_corner = seed.corner;

  if (seed.along_edge) {
    // The separatrix runs along a triangle edge and ends at its far vertex.
    int e = seed.edge;
    int a = e, b = (e + 1) % 3;
    bool from_start = seed.corner == a;
    int far = from_start ? b : a;
    Vec2 hol = t.p[far] - t.p[seed.corner];
    if (norm(hol) > budget) return std::nullopt;
    sc.end_class = t.vclass[far];
    sc.holonomy = hol;
    sc.length = norm(hol);
    sc.end_tri = seed.tri;
    sc.end_corner = far;
    sc.end_coord = mesh.ray_coordinate(seed.tri, far, -hol);
    return sc;
  }

  TraceResult tr = trace_ray(mesh, seed.tri, t.p[seed.corner], seed.dir, budget);
  if (!tr.hit_cone) return std::nullopt;
  sc.end_class = tr.cone_class;
  sc.holonomy = tr.displacement;
  sc.length = tr.length;
  sc.end_tri = tr.end_tri;
  int corner = -1;
  for (int k = 0; k < 3; ++k)
    if (norm(tris[tr.end_tri].p[k] - tr.end_pos) <= mesh.point_tol()) corner = k;
  if (corner < 0) throw Error(ErrorCode::BadPath, "separatrix end not at a corner");
  sc.end_corner = corner;
  sc.end_coord = mesh.ray_coordinate(tr.end_tri, corner, -tr.end_dir);
  sc.crossings = tr.crossings;
  return sc;
}

struct RaySlot {
  int conn = -1;
  bool is_start = true;
};

struct Leg {
  int conn;
  bool forward;
  bool operator<(const Leg& o) const {
    return conn != o.conn ? conn < o.conn : forward < o.forward;
  }
};

// Probe context: per-triangle pieces of the traced direction connections.
// A piece lying on a triangle edge is indexed in both adjacent triangles.
struct PieceIndex {
  std::map<int, std::vector<std::pair<int, SegmentPiece>>> by_tri;

  void add(const TriMesh& mesh, int conn, const std::vector<SegmentPiece>& pieces) {
    const auto& tris = mesh.tris();
    double tol = mesh.point_tol();
    for (const auto& p : pieces) {
      by_tri[p.tri].push_back({conn, p});
      const auto& t = tris[p.tri];
      for (int e = 0; e < 3; ++e) {
        Vec2 a = t.p[e], b = t.p[(e + 1) % 3];
        Vec2 ev = b - a;
        if (std::abs(cross(ev, p.a - a)) > tol * norm(ev)) continue;
        if (std::abs(cross(ev, p.b - a)) > tol * norm(ev)) continue;
        IsoMap inv = t.from_nbr[e].inverse();
        SegmentPiece twin{t.nbr_tri[e], inv.apply(p.a), inv.apply(p.b)};
        by_tri[twin.tri].push_back({conn, twin});
      }
    }
  }
};

// When pos sits on an edge of tri and dir points out of the triangle,
// switch to the neighbor across that edge. CCW triangles have the interior
// on the left of each directed edge.
void orient_into_triangle(const TriMesh& mesh, int& tri, Vec2& pos, Vec2& dir) {
  const auto& t = mesh.tris()[tri];
  double tol = mesh.point_tol();
  for (int e = 0; e < 3; ++e) {
    Vec2 a = t.p[e], b = t.p[(e + 1) % 3];
    Vec2 ev = b - a;
    if (std::abs(cross(ev, pos - a)) > tol * norm(ev)) continue;
    double u = dot(pos - a, ev) / norm2(ev);
    if (u < -1e-9 || u > 1 + 1e-9) continue;
    if (cross(ev, dir) < 0) {
      IsoMap inv = t.from_nbr[e].inverse();
      pos = inv.apply(pos);
      dir = inv.apply_dir(dir);
      tri = t.nbr_tri[e];
      return;
    }
  }
}

struct ProbeHit {
  int conn = -1;
  double distance = 0;
  bool left_of_forward = false;  // side of the hit connection facing the probe
  bool hit_cone = false;
};

// Walks from (tri, pos) in direction dir until crossing one of the indexed
// segments; mirrors trace_ray but checks piece intersections per triangle.
ProbeHit probe_to_boundary(const TriMesh& mesh, const PieceIndex& index, int tri,
                           Vec2 pos, Vec2 dir, double budget, double skip) {
  const auto& tris = mesh.tris();
  double tol = mesh.point_tol();
  double step_eps = 1e-13 * mesh.surface().diameter();
  dir = normalized(dir);
  int cur = tri;
  Vec2 p = pos;
  Vec2 d = dir;
  int entry_edge = -1;
  double traveled = 0;

  for (long guard = 0; guard < 100000000; ++guard) {
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
      double s = cross(a - p, e) / denom;
      double u = cross(p - a, d) / cross(e, d);
      if (s <= step_eps || u < -1e-12 || u > 1 + 1e-12) continue;
      if (exit_edge == -1 || s < best_exit) {
        best_exit = s;
        exit_edge = k;
        exit_param = std::clamp(u, 0.0, 1.0);
      }
    }
    if (exit_edge == -1) throw Error(ErrorCode::BadPath, "probe lost inside a triangle");
    Vec2 hit = p + d * best_exit;

    // Closest indexed piece crossed within this triangle step.
    ProbeHit best;
    auto it = index.by_tri.find(cur);
    if (it != index.by_tri.end()) {
      for (const auto& [conn, piece] : it->second) {
        Vec2 g = piece.b - piece.a;
        double denom = cross(d, g);
        if (std::abs(denom) < 1e-14 * norm(g)) continue;
        double s = cross(piece.a - p, g) / denom;
        double v = cross(p - piece.a, d) / cross(g, d);
        if (s < -tol || v < -1e-9 || v > 1 + 1e-9) continue;
        if (traveled + s <= skip) continue;
        if (best.conn == -1 || s < best.distance - traveled) {
          best.conn = conn;
          best.distance = traveled + s;
          best.left_of_forward = cross(g, d * -1.0) > 0;
        }
      }
    }
    if (best.conn != -1 && best.distance <= traveled + best_exit + tol) return best;

    for (int k = 0; k < 3; ++k) {
      if (norm(hit - t.p[k]) <= tol) {
        ProbeHit h;
        h.hit_cone = true;
        h.distance = traveled + best_exit;
        return h;
      }
    }

    traveled += best_exit;
    if (traveled > budget)
      throw Error(ErrorCode::BudgetExceeded, "boundary probe exceeded budget");

    int nt = t.nbr_tri[exit_edge];
    int ne = t.nbr_edge[exit_edge];
    IsoMap inv = t.from_nbr[exit_edge].inverse();
    p = inv.apply(hit);
    d = inv.apply_dir(d);
    cur = nt;
    entry_edge = ne;
  }
  throw Error(ErrorCode::BudgetExceeded, "probe step guard exceeded");
}

}  // namespace

CylinderDecomposition cylinders_in_direction(const TriMesh& mesh, double theta,
                                             double budget) {
  CylinderDecomposition out;
  Vec2 u{std::cos(theta), std::sin(theta)};

  std::vector<DirectionRay> rays = direction_rays(mesh, u);
  std::vector<SaddleConnection> conns;
  std::map<RayKey, RaySlot> slot_of_ray;
  bool all_closed = true;

  auto cone_angle = [&](int cls) { return mesh.fans()[cls].cone_angle; };

  for (const auto& ray : rays) {
    RayKey k0 = ray_key(ray.cone_class, ray.coord, cone_angle(ray.cone_class));
    if (slot_of_ray.count(k0)) continue;  // already reached from the other end
    auto sc = trace_separatrix(mesh, ray.cone_class, ray.coord, budget);
    if (!sc) {
      all_closed = false;
      continue;
    }
    RayKey k1 = ray_key(sc->end_class, sc->end_coord, cone_angle(sc->end_class));
    int idx = static_cast<int>(conns.size());
    conns.push_back(std::move(*sc));
    slot_of_ray[k0] = {idx, true};
    slot_of_ray[k1] = {idx, false};
  }
  out.certified_periodic = all_closed;

  // Boundary-chain orbits: crossing a junction continues along the ray one
  // half-turn clockwise of the arrival back-ray.
  auto next_leg = [&](Leg leg) -> std::optional<Leg> {
    const SaddleConnection& sc = conns[leg.conn];
    int cls = leg.forward ? sc.end_class : sc.start_class;
    double arr = leg.forward ? sc.end_coord : sc.start_coord;
    double target = arr - kPi;
    auto it = slot_of_ray.find(ray_key(cls, target, cone_angle(cls)));
    if (it == slot_of_ray.end()) return std::nullopt;
    return Leg{it->second.conn, it->second.is_start};
  };

  std::map<Leg, int> orbit_of;
  std::vector<std::vector<Leg>> orbits;
  for (size_t ci = 0; ci < conns.size(); ++ci) {
    for (bool fwd : {true, false}) {
      Leg start{static_cast<int>(ci), fwd};
      if (orbit_of.count(start)) continue;
      std::vector<Leg> orbit;
      Leg cur = start;
      bool ok = true;
      size_t cap = 2 * conns.size() + 2;
      do {
        if (orbit_of.count(cur) || orbit.size() > cap) {
          ok = false;  // ran into a dead chase or failed to close
          break;
        }
        orbit.push_back(cur);
        orbit_of[cur] = static_cast<int>(orbits.size());
        auto nx = next_leg(cur);
        if (!nx) {
          ok = false;
          break;
        }
        cur = *nx;
      } while (!(cur.conn == start.conn && cur.forward == start.forward));
      if (!ok) {
        for (const Leg& l : orbit) orbit_of[l] = -1;
        orbits.emplace_back();  // keep indices aligned; marked dead
        continue;
      }
      orbits.push_back(std::move(orbit));
    }
  }

  PieceIndex index;
  std::vector<std::vector<SegmentPiece>> pieces(conns.size());
  for (size_t ci = 0; ci < conns.size(); ++ci) {
    pieces[ci] = connection_pieces(mesh, conns[ci]);
    index.add(mesh, static_cast<int>(ci), pieces[ci]);
  }

  double probe_cap = mesh.surface().area();

  // Pair up orbits by shooting a perpendicular probe into the cylinder.
  std::vector<int> partner(orbits.size(), -2);
  std::vector<double> heights(orbits.size(), 0);
  for (size_t oi = 0; oi < orbits.size(); ++oi) {
    if (orbits[oi].empty() || partner[oi] != -2) continue;
    Leg leg = orbits[oi].front();
    const auto& pcs = pieces[leg.conn];
    bool found = false;
    for (double frac : {0.5, 0.25, 0.75, 0.375, 0.625}) {
      // pick the piece containing the fractional point of the connection
      double target = conns[leg.conn].length * frac;
      double acc = 0;
      for (const auto& piece : pcs) {
        double plen = dist(piece.a, piece.b);
        if (acc + plen < target) {
          acc += plen;
          continue;
        }
        double local = (target - acc) / std::max(plen, 1e-300);
        Vec2 m = piece.a + (piece.b - piece.a) * local;
        Vec2 g = normalized(piece.b - piece.a);
        Vec2 travel = leg.forward ? g : -g;
        Vec2 pd = rot90(travel);  // cylinder side of a type-1 leg
        int start_tri = piece.tri;
        orient_into_triangle(mesh, start_tri, m, pd);
        double cap = probe_cap / std::max(conns[leg.conn].length, 1e-12) * 2 +
                     mesh.surface().diameter();
        ProbeHit hit;
        try {
          hit = probe_to_boundary(mesh, index, start_tri, m, pd, cap,
                                  mesh.point_tol() * 10);
        } catch (const Error&) {
          break;
        }
        if (hit.hit_cone || hit.conn < 0) break;  // retry from another point
        Leg far{hit.conn, hit.left_of_forward};
        auto it = orbit_of.find(far);
        if (it == orbit_of.end() || it->second < 0) break;
        partner[oi] = it->second;
        heights[oi] = hit.distance;
        found = true;
        break;
      }
      if (found) break;
    }
    if (!found) partner[oi] = -1;
  }

  auto orbit_length = [&](int oi) {
    double s = 0;
    for (const Leg& l : orbits[oi]) s += conns[l.conn].length;
    return s;
  };

  std::set<int> emitted;
  for (size_t oi = 0; oi < orbits.size(); ++oi) {
    int oj = partner[oi];
    if (oj < 0 || emitted.count(static_cast<int>(oi))) continue;
    if (partner[oj] != static_cast<int>(oi)) continue;  // inconsistent probe
    double c1 = orbit_length(static_cast<int>(oi));
    double c2 = orbit_length(oj);
    if (std::abs(c1 - c2) > 1e-9 * std::max(1.0, c1)) continue;
    emitted.insert(static_cast<int>(oi));
    emitted.insert(oj);

    MaximalCylinder cyl;
    cyl.direction = direction_angle(u);
    cyl.circumference = c1;
    cyl.height = 0.5 * (heights[oi] + heights[oj]);
    for (int side = 0; side < 2; ++side) {
      int o = side == 0 ? static_cast<int>(oi) : oj;
      for (const Leg& l : orbits[o]) {
        const SaddleConnection& sc = conns[l.conn];
        bool flip = !canonical_orientation(sc.holonomy);
        CylinderBoundaryLeg bl;
        bl.connection = flip ? reversed_connection(mesh, sc) : sc;
        bl.forward = flip ? !l.forward : l.forward;
        cyl.boundary[side].push_back(std::move(bl));
      }
    }
    out.cylinders.push_back(std::move(cyl));
  }

  std::sort(out.cylinders.begin(), out.cylinders.end(),
            [](const MaximalCylinder& a, const MaximalCylinder& b) {
              return a.circumference < b.circumference;
            });
  return out;
}

std::optional<MaximalCylinder> cylinder_around_leaf(const TriMesh& mesh, int tri,
                                                    Vec2 pos, Vec2 dir,
                                                    double circumference_hint) {
  (void)tri;
  (void)pos;
  double theta = direction_angle(dir);
  double budget = circumference_hint * (1 + 1e-9) + 10 * mesh.point_tol();
  CylinderDecomposition dec = cylinders_in_direction(mesh, theta, budget);
  // The leaf's cylinder has circumference equal to the leaf length, or a
  // divisor of it when the leaf covers the core multiple times.
  for (int k = 1; k <= 8; ++k) {
    for (auto& cyl : dec.cylinders) {
      if (std::abs(cyl.circumference * k - circumference_hint) <=
          1e-6 * std::max(1.0, circumference_hint))
        return cyl;
    }
  }
  return std::nullopt;
}

}  // namespace flatspec
