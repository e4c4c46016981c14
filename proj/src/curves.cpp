#include "flatspec/curves.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "flatspec/errors.hpp"

namespace flatspec {

namespace {

long long quant(double x, double unit = 1e-9) { return std::llround(x / unit); }

// -----------------------------------------------------------------------
// Tightening machinery. The working curve is a cyclic list of nodes; an
// edge node is the entry point of the chord's triangle, a vertex node pins
// the curve at a cone point between two chords.

struct Node {
  bool at_vertex = false;
  // edge node: entry point of the outgoing chord's triangle
  int tri = -1;
  int edge = -1;
  double t = 0;
  // vertex node
  int cls = -1;
  int in_tri = -1, in_corner = -1;    // corner the incoming chord ends at
  int out_tri = -1, out_corner = -1;  // corner the outgoing chord leaves from
};

struct Curve {
  std::vector<Node> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  Node& at(int i) {
    int n = size();
    return nodes[((i % n) + n) % n];
  }
};

Vec2 node_out_pos(const TriMesh& mesh, const Node& n) {
  if (n.at_vertex) return mesh.tris()[n.out_tri].p[n.out_corner];
  const auto& t = mesh.tris()[n.tri];
  return t.p[n.edge] + (t.p[(n.edge + 1) % 3] - t.p[n.edge]) * n.t;
}

int node_out_tri(const Node& n) { return n.at_vertex ? n.out_tri : n.tri; }

// Position of node `next` in the frame of the chord leaving node `prev`
// (i.e., in node_out_tri(prev)'s frame).
Vec2 node_in_pos(const TriMesh& mesh, const Node& prev, const Node& next) {
  int chord_tri = node_out_tri(prev);
  if (next.at_vertex) {
    if (next.in_tri != chord_tri)
      throw Error(ErrorCode::BadPath, "chord frames out of sync at a vertex node");
    return mesh.tris()[next.in_tri].p[next.in_corner];
  }
  if (next.tri == chord_tri) {
    // degenerate: both nodes in the same triangle (should not persist)
    const auto& t = mesh.tris()[next.tri];
    return t.p[next.edge] + (t.p[(next.edge + 1) % 3] - t.p[next.edge]) * next.t;
  }
  const auto& entered = mesh.tris()[next.tri];
  if (entered.nbr_tri[next.edge] != chord_tri)
    throw Error(ErrorCode::BadPath, "chord frames out of sync");
  int exit_edge = entered.nbr_edge[next.edge];
  const auto& t = mesh.tris()[chord_tri];
  return t.p[exit_edge] +
         (t.p[(exit_edge + 1) % 3] - t.p[exit_edge]) * (1.0 - next.t);
}

double curve_length(const TriMesh& mesh, Curve& c) {
  double len = 0;
  int n = c.size();
  for (int i = 0; i < n; ++i) {
    Vec2 a = node_out_pos(mesh, c.at(i));
    Vec2 b = node_in_pos(mesh, c.at(i), c.at(i + 1));
    len += dist(a, b);
  }
  return len;
}

// Walks a straight chord between two points of one polygon, returning the
// crossings; identity frames inside a polygon make this a plain walk.
std::vector<Crossing> walk_in_polygon(const TriMesh& mesh, int tri, Vec2 from,
                                      Vec2 to) {
  TraceResult tr = trace_ray(mesh, tri, from, normalized(to - from),
                             dist(from, to) * (1 + 1e-9) + mesh.point_tol());
  if (tr.hit_cone)
    throw Error(ErrorCode::BadPath, "path chord passes through a cone point");
  std::vector<Crossing> out;
  for (const Crossing& c : tr.crossings) {
    const auto& entered = mesh.tris()[c.tri];
    Vec2 q = entered.p[c.edge] + (entered.p[(c.edge + 1) % 3] - entered.p[c.edge]) * c.t;
    if (dist(q, to) <= mesh.point_tol()) break;  // reached the far edge point
    out.push_back(c);
  }
  return out;
}

struct FanStep {
  int tri = -1;
  int corner = -1;
  IsoMap to_base;  // wedge triangle frame -> base (out wedge) frame
};

// Wedges swept counterclockwise from the wedge of (tri0, corner0), developed
// into that triangle's frame, up to total angle `span`.
std::vector<FanStep> develop_fan_ccw(const TriMesh& mesh, int tri0, int corner0,
                                     double span) {
  std::vector<FanStep> fan;
  const auto& tris = mesh.tris();
  int t = tri0, k = corner0;
  IsoMap dev = IsoMap::identity();
  double acc = 0;
  int guard = 0;
  while (true) {
    fan.push_back({t, k, dev});
    auto [cls, wi] = mesh.wedge_of_corner(t, k);
    acc += mesh.fans()[cls].wedges[wi].angle;
    if (acc >= span - 1e-12) break;
    int e = (k + 2) % 3;  // incoming edge of the corner
    int nt = tris[t].nbr_tri[e];
    int ne = tris[t].nbr_edge[e];
    dev = dev.compose(tris[t].from_nbr[e]);
    t = nt;
    k = ne;
    if (++guard > 100000) throw Error(ErrorCode::BadPath, "fan sweep runaway");
  }
  return fan;
}

std::vector<FanStep> develop_fan_cw(const TriMesh& mesh, int tri0, int corner0,
                                    double span) {
  std::vector<FanStep> fan;
  const auto& tris = mesh.tris();
  int t = tri0, k = corner0;
  IsoMap dev = IsoMap::identity();
  double acc = 0;
  int guard = 0;
  while (true) {
    fan.push_back({t, k, dev});
    auto [cls, wi] = mesh.wedge_of_corner(t, k);
    acc += mesh.fans()[cls].wedges[wi].angle;
    if (acc >= span - 1e-12) break;
    // clockwise: cross the outgoing edge of the corner
    int e = k;
    int nt = tris[t].nbr_tri[e];
    int ne = tris[t].nbr_edge[e];
    dev = dev.compose(tris[t].from_nbr[e]);
    t = nt;
    k = (ne + 1) % 3;  // corner at the end of the partner edge
    if (++guard > 100000) throw Error(ErrorCode::BadPath, "fan sweep runaway");
  }
  return fan;
}

}  // namespace

std::vector<std::pair<SaddleConnection, int>> GeodesicRepresentative::multiplicities()
    const {
  std::vector<std::pair<SaddleConnection, int>> out;
  std::map<std::array<long long, 5>, int> index;
  auto add = [&](const SaddleConnection& sc) {
    std::array<long long, 5> key{sc.start_class, sc.end_class, quant(sc.start_coord),
                                 quant(sc.end_coord),
                                 quant(sc.length, 1e-9 * std::max(1.0, sc.length))};
    auto it = index.find(key);
    if (it == index.end()) {
      index[key] = static_cast<int>(out.size());
      out.push_back({sc, 1});
    } else {
      out[it->second].second += 1;
    }
  };
  if (is_cylinder) {
    for (const auto& leg : cylinder->boundary[chosen_boundary]) add(leg.connection);
  } else {
    for (const auto& e : chain) add(e.connection);
  }
  return out;
}

Zonogon auxiliary_polygon(const GeodesicRepresentative& rep) {
  std::vector<Vec2> gens;
  for (const auto& [sc, m] : rep.multiplicities())
    gens.push_back(sc.holonomy * static_cast<double>(m));
  return build_zonogon(std::move(gens));
}

CurveClass classify(const GeodesicRepresentative& rep) {
  if (rep.is_cylinder) return CurveClass::Cylinder;
  double ref = -1;
  for (const auto& e : rep.chain) {
    double a = direction_angle(e.connection.holonomy);
    if (ref < 0) {
      ref = a;
    } else {
      double d = std::abs(a - ref);
      d = std::min(d, kPi - d);
      if (d > 1e-9) return CurveClass::Crooked;
    }
  }
  return CurveClass::ConstantDirectionChain;
}

bool validate_geodesic(const TriMesh& mesh, const std::vector<ChainEdge>& chain,
                       std::vector<JunctionReport>* report) {
  if (chain.empty()) throw Error(ErrorCode::BadPath, "empty chain");
  bool ok = true;
  int m = static_cast<int>(chain.size());
  for (int i = 0; i < m; ++i) {
    const ChainEdge& prev = chain[(i + m - 1) % m];
    const ChainEdge& cur = chain[i];
    int cls_in = prev.forward ? prev.connection.end_class : prev.connection.start_class;
    int cls_out = cur.forward ? cur.connection.start_class : cur.connection.end_class;
    if (cls_in != cls_out)
      throw Error(ErrorCode::NotIncident, "chain edges " + std::to_string(i) +
                                              " not incident");
    double a = prev.forward ? prev.connection.end_coord : prev.connection.start_coord;
    double b = cur.forward ? cur.connection.start_coord : cur.connection.end_coord;
    double cone = mesh.fans()[cls_in].cone_angle;
    JunctionReport r;
    r.junction = i;
    r.left = angle_between_coords(a, b, cone, AngleSide::Left);
    r.right = angle_between_coords(a, b, cone, AngleSide::Right);
    r.ok = r.left >= kPi - 1e-9 && r.right >= kPi - 1e-9;
    if (!r.ok) ok = false;
    if (report) report->push_back(r);
  }
  return ok;
}

// ---------------------------------------------------------------------------
// tighten

namespace {

Curve curve_from_path(const TriMesh& mesh, const CurvePath& path) {
  const auto& surf = mesh.surface();
  const auto& tris = mesh.tris();
  if (path.hops.empty()) throw Error(ErrorCode::BadPath, "path has no crossings");

  // gluing index -> its two (tri, edge) slots, a-side first
  std::map<int, std::array<std::pair<int, int>, 2>> slots;
  for (size_t ti = 0; ti < tris.size(); ++ti) {
    for (int e = 0; e < 3; ++e) {
      int gi = tris[ti].source_edge[e];
      if (gi < 0) continue;
      const EdgeGluing& g = surf.gluings()[gi];
      bool is_a = tris[ti].source_poly == g.a.poly &&
                  tris[ti].source_vertex[e] == g.a.edge;
      slots[gi][is_a ? 0 : 1] = {static_cast<int>(ti), e};
    }
  }

  int m = static_cast<int>(path.hops.size());
  std::vector<Node> hop_nodes(m);
  for (int i = 0; i < m; ++i) {
    const CurvePath::Hop& h = path.hops[i];
    if (h.gluing < 0 || h.gluing >= static_cast<int>(surf.gluings().size()))
      throw Error(ErrorCode::BadPath, "crossing references unknown gluing");
    if (!(h.t > 0 && h.t < 1))
      throw Error(ErrorCode::BadPath, "crossing parameter must be in (0,1)");
    auto [ta, ea] = slots[h.gluing][0];
    auto [tb, eb] = slots[h.gluing][1];
    Node n;
    if (h.sense >= 0) {
      n.tri = tb;
      n.edge = eb;
      n.t = 1.0 - h.t;
    } else {
      n.tri = ta;
      n.edge = ea;
      n.t = h.t;
    }
    hop_nodes[i] = n;
  }

  Curve curve;
  for (int i = 0; i < m; ++i) {
    const Node& cur = hop_nodes[i];
    const Node& nxt = hop_nodes[(i + 1) % m];
    curve.nodes.push_back(cur);
    // chord from cur to nxt runs inside the polygon of cur's triangle; the
    // exit slot is the other side of nxt's gluing
    const auto& entered = tris[nxt.tri];
    int exit_tri = entered.nbr_tri[nxt.edge];
    int exit_edge = entered.nbr_edge[nxt.edge];
    if (tris[exit_tri].source_poly != tris[cur.tri].source_poly)
      throw Error(ErrorCode::BadPath,
                  "consecutive crossings do not share a polygon (crossing " +
                      std::to_string(i) + ")");
    Vec2 from = node_out_pos(mesh, cur);
    const auto& xt = tris[exit_tri];
    Vec2 to = xt.p[exit_edge] +
              (xt.p[(exit_edge + 1) % 3] - xt.p[exit_edge]) * (1.0 - nxt.t);
    if (dist(from, to) <= mesh.point_tol()) continue;
    for (const Crossing& c : walk_in_polygon(mesh, cur.tri, from, to)) {
      Node d;
      d.tri = c.tri;
      d.edge = c.edge;
      d.t = c.t;
      curve.nodes.push_back(d);
    }
  }
  return curve;
}

// One local straightening move at node i. Returns the length saved.
double move_node(const TriMesh& mesh, Curve& curve, int i, double snap_delta) {
  const auto& tris = mesh.tris();
  Node n = curve.at(i);
  Node& prev = curve.at(i - 1);
  Node& next = curve.at(i + 1);

  if (!n.at_vertex) {
    // Two-triangle move across the node's edge.
    int chord_tri = n.tri;
    const auto& t = tris[chord_tri];
    Vec2 c = node_in_pos(mesh, n, next);
    Vec2 a_prev_frame = node_out_pos(mesh, prev);
    Vec2 a = t.from_nbr[n.edge].apply(a_prev_frame);
    Vec2 P = t.p[n.edge], Q = t.p[(n.edge + 1) % 3];
    Vec2 old_pos = P + (Q - P) * n.t;
    double old_len = dist(a, old_pos) + dist(old_pos, c);

    Vec2 e = Q - P;
    if (std::abs(cross(c - a, e)) < 1e-300) return 0;
    // solve a + s (c - a) = P + u e
    double u = cross(a - P, c - a) / cross(e, c - a);
    Vec2 np = P + e * u;

    double saved;
    if (u <= 0 || dist(np, P) <= snap_delta) {
      // pin at P
      saved = old_len - (dist(a, P) + dist(P, c));
      if (saved <= 0) return 0;
      Node vn;
      vn.at_vertex = true;
      vn.cls = t.vclass[n.edge];
      vn.out_tri = chord_tri;
      vn.out_corner = n.edge;
      int prev_tri = t.nbr_tri[n.edge];
      int prev_edge = t.nbr_edge[n.edge];
      vn.in_tri = prev_tri;
      vn.in_corner = (prev_edge + 1) % 3;
      curve.at(i) = vn;
      return saved;
    }
    if (u >= 1 || dist(np, Q) <= snap_delta) {
      saved = old_len - (dist(a, Q) + dist(Q, c));
      if (saved <= 0) return 0;
      Node vn;
      vn.at_vertex = true;
      vn.cls = t.vclass[(n.edge + 1) % 3];
      vn.out_tri = chord_tri;
      vn.out_corner = (n.edge + 1) % 3;
      int prev_tri = t.nbr_tri[n.edge];
      int prev_edge = t.nbr_edge[n.edge];
      vn.in_tri = prev_tri;
      vn.in_corner = prev_edge;
      curve.at(i) = vn;
      return saved;
    }
    double new_len = dist(a, np) + dist(np, c);
    if (new_len >= old_len) return 0;
    curve.at(i).t = u;
    return old_len - new_len;
  }

  // Vertex node: try to unpin across a side with angle < pi.
  Vec2 vpos_out = tris[n.out_tri].p[n.out_corner];
  Vec2 vpos_in = tris[n.in_tri].p[n.in_corner];
  Vec2 c = node_in_pos(mesh, n, next);
  Vec2 a = node_out_pos(mesh, prev);
  Vec2 dir_out = c - vpos_out;                            // out-ray, out frame
  Vec2 dir_in = a - vpos_in;                              // in-ray, in frame
  if (norm(dir_out) <= mesh.point_tol() || norm(dir_in) <= mesh.point_tol())
    return 0;
  double out_coord = mesh.ray_coordinate(n.out_tri, n.out_corner, dir_out);
  double in_coord = mesh.ray_coordinate(n.in_tri, n.in_corner, dir_in);
  double cone = mesh.fans()[n.cls].cone_angle;
  double left = angle_between_coords(in_coord, out_coord, cone, AngleSide::Left);
  double right = cone - left;

  double old_len = dist(a, vpos_in) + dist(vpos_out, c);

  auto try_side = [&](bool left_side, double span) -> double {
    // Develop the fan on this side starting from the out wedge; the in
    // wedge is reached after sweeping the side angle.
    std::vector<FanStep> fan = left_side
                                   ? develop_fan_ccw(mesh, n.out_tri, n.out_corner, span)
                                   : develop_fan_cw(mesh, n.out_tri, n.out_corner, span);
    const FanStep& last = fan.back();
    if (last.tri != n.in_tri || last.corner != n.in_corner) return 0;
    Vec2 a_dev = last.to_base.apply(a);
    Vec2 c_dev = c;  // base frame is the out wedge's frame
    double new_len = dist(a_dev, c_dev);
    if (old_len - new_len <= 2 * snap_delta) return 0;

    // Trace the chord through the mesh from a toward c.
    Vec2 dir_a = last.to_base.inverse().apply_dir(c_dev - a_dev);
    TraceResult tr1 = trace_ray(mesh, n.in_tri, a, dir_a, new_len + mesh.point_tol());

    std::vector<Node> replacement;
    bool done = false;
    if (!tr1.hit_cone) {
      // ended by budget just past c; crossings minus the final arrival
      for (const Crossing& cr : tr1.crossings)
        replacement.push_back({false, cr.tri, cr.edge, cr.t});
      // drop the final crossing: it is the chord arriving at c's edge only
      // when c sits on an edge; c is a node of the curve, so the last
      // crossing carries the chord into c's triangle. Keep all crossings:
      // the chord ends exactly at c, which lies on the boundary between
      // the last two triangles only for edge nodes. Validate below.
      done = true;
    } else {
      // Chord passes through an intermediate cone point W; build the two
      // halves by tracing backward from c as well.
      TraceResult tr2 = trace_ray(mesh, node_out_tri(n), c,
                                  -(c_dev - a_dev), new_len + mesh.point_tol());
      if (!tr2.hit_cone || tr2.cone_class != tr1.cone_class) return 0;
      if (std::abs(tr1.length + tr2.length - new_len) > 10 * mesh.point_tol())
        return 0;
      for (const Crossing& cr : tr1.crossings)
        replacement.push_back({false, cr.tri, cr.edge, cr.t});
      Node w;
      w.at_vertex = true;
      w.cls = tr1.cone_class;
      w.in_tri = tr1.end_tri;
      int ic = -1, oc = -1;
      for (int kk = 0; kk < 3; ++kk) {
        if (norm(tris[tr1.end_tri].p[kk] - tr1.end_pos) <= mesh.point_tol()) ic = kk;
        if (norm(tris[tr2.end_tri].p[kk] - tr2.end_pos) <= mesh.point_tol()) oc = kk;
      }
      if (ic < 0 || oc < 0) return 0;
      w.in_corner = ic;
      w.out_tri = tr2.end_tri;
      w.out_corner = oc;
      replacement.push_back(w);
      for (size_t q = tr2.crossings.size(); q-- > 0;) {
        const Crossing& cr = tr2.crossings[q];
        int ptri = tris[cr.tri].nbr_tri[cr.edge];
        int pedge = tris[cr.tri].nbr_edge[cr.edge];
        replacement.push_back({false, ptri, pedge, 1.0 - cr.t});
      }
      done = true;
    }
    if (!done) return 0;

    // Splice: replace node i by the replacement sequence.
    std::vector<Node> rebuilt;
    int nsz = curve.size();
    for (int j = 0; j < nsz; ++j) {
      if (((i % nsz) + nsz) % nsz == j) {
        for (const Node& r : replacement) rebuilt.push_back(r);
      } else {
        rebuilt.push_back(curve.at(j));
      }
    }
    curve.nodes = std::move(rebuilt);
    return old_len - new_len;
  };

  if (left < kPi - 1e-12) {
    double saved = try_side(true, left);
    if (saved > 0) return saved;
  }
  if (right < kPi - 1e-12) {
    double saved = try_side(false, right);
    if (saved > 0) return saved;
  }
  return 0;
}

// Remove zero-length chords and immediate backtracks.
void cleanup(const TriMesh& mesh, Curve& curve) {
  bool changed = true;
  int guard = 0;
  while (changed && curve.size() > 1 && ++guard < 10000) {
    changed = false;
    int n = curve.size();
    for (int i = 0; i < n; ++i) {
      Node& a = curve.at(i);
      Node& b = curve.at(i + 1);
      if (!a.at_vertex && !b.at_vertex) {
        // same geometric edge point twice: drop one
        bool same_edge = (a.tri == b.tri && a.edge == b.edge) ||
                         (mesh.tris()[b.tri].nbr_tri[b.edge] == a.tri &&
                          mesh.tris()[b.tri].nbr_edge[b.edge] == a.edge);
        if (same_edge) {
          Vec2 pa = node_out_pos(mesh, a);
          Vec2 pb = a.tri == b.tri
                        ? node_out_pos(mesh, b)
                        : mesh.tris()[a.tri].p[mesh.tris()[b.tri].nbr_edge[b.edge]] +
                              (mesh.tris()[a.tri].p[(mesh.tris()[b.tri].nbr_edge[b.edge] + 1) % 3] -
                               mesh.tris()[a.tri].p[mesh.tris()[b.tri].nbr_edge[b.edge]]) *
                                  (1.0 - b.t);
          if (dist(pa, pb) <= mesh.point_tol()) {
            curve.nodes.erase(curve.nodes.begin() + (((i + 1) % n + n) % n));
            changed = true;
            break;
          }
        }
      } else if (a.at_vertex && b.at_vertex && a.cls == b.cls) {
        Vec2 pa = mesh.tris()[a.out_tri].p[a.out_corner];
        Vec2 pb = mesh.tris()[b.in_tri].p[b.in_corner];
        // consecutive pins at the same point with a zero chord
        if (a.out_tri == b.in_tri && dist(pa, pb) <= mesh.point_tol()) {
          Node merged = a;
          merged.out_tri = b.out_tri;
          merged.out_corner = b.out_corner;
          curve.at(i) = merged;
          curve.nodes.erase(curve.nodes.begin() + (((i + 1) % n + n) % n));
          changed = true;
          break;
        }
      }
    }
  }
}

SaddleConnection build_connection_from_run(const TriMesh& mesh,
                                           const std::vector<Node>& run_nodes,
                                           const Node& from, const Node& to) {
  // from, to are vertex nodes; run_nodes the edge nodes between them.
  const auto& tris = mesh.tris();
  SaddleConnection sc;
  sc.start_class = from.cls;
  sc.end_class = to.cls;
  sc.start_tri = from.out_tri;
  sc.start_corner = from.out_corner;
  sc.end_tri = to.in_tri;
  sc.end_corner = to.in_corner;

  IsoMap to_start = IsoMap::identity();  // current chord frame -> start frame
  Vec2 start = tris[from.out_tri].p[from.out_corner];
  double len = 0;
  Vec2 prev_pos = start;
  int cur_tri = from.out_tri;
  for (const Node& nd : run_nodes) {
    const auto& entered = tris[nd.tri];
    Vec2 q = entered.p[nd.edge] + (entered.p[(nd.edge + 1) % 3] - entered.p[nd.edge]) * nd.t;
    // q in the frame of the triangle being left
    int exit_edge = entered.nbr_edge[nd.edge];
    const auto& left = tris[cur_tri];
    Vec2 q_prev = left.p[exit_edge] +
                  (left.p[(exit_edge + 1) % 3] - left.p[exit_edge]) * (1.0 - nd.t);
    len += dist(prev_pos, q_prev);
    sc.crossings.push_back({nd.tri, nd.edge, nd.t});
    to_start = to_start.compose(left.from_nbr[exit_edge]);
    cur_tri = nd.tri;
    prev_pos = q;
  }
  Vec2 end_pos = tris[to.in_tri].p[to.in_corner];
  if (cur_tri != to.in_tri)
    throw Error(ErrorCode::BadPath, "chain run frames out of sync");
  len += dist(prev_pos, end_pos);
  sc.length = len;
  sc.holonomy = to_start.apply(end_pos) - start;
  sc.start_coord = mesh.ray_coordinate(from.out_tri, from.out_corner, sc.holonomy);
  Vec2 back = to_start.inverse().apply_dir(-sc.holonomy);
  sc.end_coord = mesh.ray_coordinate(to.in_tri, to.in_corner, back);
  return sc;
}

}  // namespace

GeodesicRepresentative tighten(const TriMesh& mesh, const CurvePath& path,
                               const TightenOptions& opts) {
  Curve curve = curve_from_path(mesh, path);
  double snap_delta = mesh.point_tol();

  double len = curve_length(mesh, curve);
  long sweeps = 0;
  for (; sweeps < opts.sweep_budget; ++sweeps) {
    double saved = 0;
    int n = curve.size();
    for (int i = 0; i < n && i < curve.size(); ++i) {
      saved += move_node(mesh, curve, i, snap_delta);
      if (curve.size() != n) break;  // topology changed; restart sweep
    }
    cleanup(mesh, curve);
    double new_len = curve_length(mesh, curve);
    if (new_len <= 10 * snap_delta) {
      Error err(ErrorCode::Degenerate, "curve tightened to zero length");
      throw err;
    }
    if (saved <= opts.tol * std::max(new_len, 1e-300) &&
        std::abs(len - new_len) <= opts.tol * std::max(new_len, 1e-300)) {
      len = new_len;
      break;
    }
    len = new_len;
  }
  if (sweeps >= opts.sweep_budget)
    throw Error(ErrorCode::NoConvergence,
                "tightening did not converge within the sweep budget");

  // Classification of the limit.
  bool any_vertex = false;
  for (const Node& nd : curve.nodes) any_vertex |= nd.at_vertex;

  GeodesicRepresentative rep;
  if (!any_vertex) {
    // Closed regular geodesic: find its cylinder.
    Vec2 a = node_out_pos(mesh, curve.at(0));
    Vec2 b = node_in_pos(mesh, curve.at(0), curve.at(1));
    Vec2 mid = (a + b) * 0.5;
    Vec2 dir = b - a;
    auto cyl = cylinder_around_leaf(mesh, node_out_tri(curve.at(0)), mid, dir, len);
    if (!cyl)
      throw Error(ErrorCode::NoConvergence,
                  "closed leaf found but its cylinder could not be certified");
    rep.is_cylinder = true;
    rep.cylinder = std::move(*cyl);
    rep.chosen_boundary = 0;
    rep.length = rep.cylinder->circumference;
  } else {
    // Rotate so the curve starts at a vertex node, then cut into runs.
    int n = curve.size();
    int first = -1;
    for (int i = 0; i < n; ++i)
      if (curve.nodes[i].at_vertex) {
        first = i;
        break;
      }
    std::vector<Node> rot;
    for (int i = 0; i < n; ++i) rot.push_back(curve.at(first + i));
    std::vector<ChainEdge> chain;
    int i = 0;
    while (i < n) {
      const Node& from = rot[i];
      std::vector<Node> run;
      int j = i + 1;
      while (j < n && !rot[j].at_vertex) run.push_back(rot[j++]);
      const Node& to = (j < n) ? rot[j] : rot[0];
      SaddleConnection sc = build_connection_from_run(mesh, run, from, to);
      ChainEdge ce;
      if (canonical_orientation(sc.holonomy)) {
        ce.connection = std::move(sc);
        ce.forward = true;
      } else {
        ce.connection = reversed_connection(mesh, sc);
        ce.forward = false;
      }
      chain.push_back(std::move(ce));
      i = j;
    }
    rep.chain = std::move(chain);
    rep.length = len;

    // puncture-parallel proxy: a closed chain at a single marked class whose
    // developed holonomy vanishes bounds a disk around that point.
    bool single_class = true;
    for (const auto& e : rep.chain)
      if (e.connection.start_class != rep.chain[0].connection.start_class ||
          e.connection.end_class != rep.chain[0].connection.start_class)
        single_class = false;
    if (single_class &&
        mesh.surface().cone_points()[rep.chain[0].connection.start_class].marked) {
      Vec2 total{0, 0};
      for (const auto& e : rep.chain)
        total += e.forward ? e.connection.holonomy : -e.connection.holonomy;
      if (norm(total) <= 10 * mesh.point_tol()) rep.puncture_parallel = true;
    }
  }

  // Lengths from the multiset.
  rep.length_h = 0;
  rep.length_v = 0;
  double l = 0;
  for (const auto& [sc, m] : rep.multiplicities()) {
    rep.length_h += m * std::abs(sc.holonomy.x);
    rep.length_v += m * std::abs(sc.holonomy.y);
    l += m * sc.length;
  }
  if (!rep.is_cylinder) rep.length = l;
  return rep;
}


// ---------------------------------------------------------------------------
// is_simple

namespace {

constexpr long long kMicroCap = 1 << 20;

struct JunctionData {
  int cls = -1;
  double in_coord = 0;   // arrival ray of the previous traversal
  double out_coord = 0;  // departure ray of the next traversal
};

std::vector<JunctionData> chain_junctions(const std::vector<ChainEdge>& chain) {
  int m = static_cast<int>(chain.size());
  std::vector<JunctionData> js(m);
  for (int i = 0; i < m; ++i) {
    const ChainEdge& prev = chain[(i + m - 1) % m];
    const ChainEdge& cur = chain[i];
    js[i].cls = cur.forward ? cur.connection.start_class : cur.connection.end_class;
    js[i].in_coord = prev.forward ? prev.connection.end_coord : prev.connection.start_coord;
    js[i].out_coord = cur.forward ? cur.connection.start_coord : cur.connection.end_coord;
  }
  return js;
}

// A strand end at a junction: "out" walks forward along the chain, "in"
// walks backward. Both move away from the junction along the same geometric
// connection when their rays coincide.
struct StrandEnd {
  int junction = 0;
  bool out = false;
};

struct StrandWalker {
  const std::vector<JunctionData>* js;
  int m;

  // One step away from the junction: returns (arrival ray, continuation ray,
  // arrival class) and advances the state.
  void step(StrandEnd& e, double& arr, double& cont, int& cls) const {
    if (e.out) {
      int nj = (e.junction + 1) % m;
      arr = (*js)[nj].in_coord;
      cont = (*js)[nj].out_coord;
      cls = (*js)[nj].cls;
      e.junction = nj;
    } else {
      int pj = (e.junction + m - 1) % m;
      arr = (*js)[pj].out_coord;
      cont = (*js)[pj].in_coord;
      cls = (*js)[pj].cls;
      e.junction = pj;
    }
  }
};

// Transverse order of two strand ends sharing a ray: negative when e1 runs
// on the left of the outward direction, 0 when the itineraries never
// diverge (a power curve). Smaller clockwise turn at the first divergence
// means the strand stays left.
int compare_strands(const TriMesh& mesh, const StrandWalker& walker, StrandEnd e1,
                    StrandEnd e2) {
  for (int step = 0; step <= 2 * walker.m + 2; ++step) {
    double arr1, cont1, arr2, cont2;
    int cls1, cls2;
    walker.step(e1, arr1, cont1, cls1);
    walker.step(e2, arr2, cont2, cls2);
    if (cls1 != cls2) return 0;  // desynchronized; treat as non-simple
    double cone = mesh.fans()[cls1].cone_angle;
    if (quant(arr1) != quant(arr2)) return 0;
    auto cw = [&](double from, double to) {
      double d = std::fmod(from - to, cone);
      if (d < 0) d += cone;
      return d;
    };
    double d1 = cw(arr1, cont1);
    double d2 = cw(arr2, cont2);
    if (std::abs(d1 - d2) > 1e-9) return d1 < d2 ? -1 : 1;
  }
  return 0;
}

bool pieces_cross(const TriMesh& mesh, const SegmentPiece& p1, const SegmentPiece& p2) {
  Vec2 d1 = p1.b - p1.a, d2 = p2.b - p2.a;
  double den = cross(d1, d2);
  if (std::abs(den) <= 1e-12 * norm(d1) * norm(d2)) return false;  // parallel
  double s = cross(p2.a - p1.a, d2) / den;
  double u = cross(p2.a - p1.a, d1) / den;
  if (s < -1e-9 || s > 1 + 1e-9 || u < -1e-9 || u > 1 + 1e-9) return false;
  Vec2 x = p1.a + d1 * s;
  const auto& t = mesh.tris()[p1.tri];
  for (int k = 0; k < 3; ++k)
    if (norm(x - t.p[k]) <= mesh.point_tol()) return false;  // at a cone point
  return true;
}

// Transverse crossing between the canonical traversals of two (possibly
// equal) connections, away from cone points.
bool connections_cross(const TriMesh& mesh, const std::vector<SegmentPiece>& a,
                       const std::vector<SegmentPiece>& b, bool same) {
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = same ? i + 1 : 0; j < b.size(); ++j) {
      if (a[i].tri != b[j].tri) continue;
      if (pieces_cross(mesh, a[i], b[j])) return true;
    }
  }
  return false;
}

}  // namespace

bool is_simple(const TriMesh& mesh, const GeodesicRepresentative& rep) {
  if (rep.is_cylinder) return true;
  const auto& chain = rep.chain;
  int m = static_cast<int>(chain.size());

  // Distinct connections and their pieces.
  std::vector<std::vector<SegmentPiece>> pieces;
  std::vector<int> piece_of_edge(m, -1);
  std::map<std::array<long long, 4>, int> conn_index;
  for (int i = 0; i < m; ++i) {
    const SaddleConnection& sc = chain[i].connection;
    std::array<long long, 4> key{sc.start_class, sc.end_class, quant(sc.start_coord),
                                 quant(sc.end_coord)};
    auto it = conn_index.find(key);
    if (it == conn_index.end()) {
      conn_index[key] = static_cast<int>(pieces.size());
      piece_of_edge[i] = static_cast<int>(pieces.size());
      pieces.push_back(connection_pieces(mesh, sc));
    } else {
      piece_of_edge[i] = it->second;
    }
  }
  for (size_t i = 0; i < pieces.size(); ++i)
    for (size_t j = i; j < pieces.size(); ++j)
      if (connections_cross(mesh, pieces[i], pieces[j], i == j)) return false;

  // Junction chord diagrams with bundled rays resolved by strand order.
  std::vector<JunctionData> js = chain_junctions(chain);
  StrandWalker walker{&js, m};

  // micro rank per strand end within its ray bundle
  std::map<std::pair<int, long long>, std::vector<StrandEnd>> bundles;
  for (int i = 0; i < m; ++i) {
    bundles[{js[i].cls, quant(js[i].in_coord)}].push_back({i, false});
    bundles[{js[i].cls, quant(js[i].out_coord)}].push_back({i, true});
  }
  std::map<std::pair<int, bool>, long long> micro;
  for (auto& [key, ends] : bundles) {
    if (ends.size() > 1) {
      bool tie = false;
      std::sort(ends.begin(), ends.end(), [&](const StrandEnd& a, const StrandEnd& b) {
        int c = compare_strands(mesh, walker, a, b);
        if (c == 0) tie = true;
        return c > 0;  // rightmost first, lefter strands get larger offsets
      });
      if (tie) return false;  // power curve or desynchronized strands
    }
    for (size_t r = 0; r < ends.size(); ++r)
      micro[{ends[r].junction, ends[r].out}] = static_cast<long long>(r) + 1;
  }

  auto position = [&](int junction, bool out) {
    double coord = out ? js[junction].out_coord : js[junction].in_coord;
    return quant(coord) * kMicroCap + micro[{junction, out}];
  };

  for (int cls = 0; cls < static_cast<int>(mesh.fans().size()); ++cls) {
    double cone = mesh.fans()[cls].cone_angle;
    long long M = quant(cone) * kMicroCap;
    auto in_open_arc = [&](long long x, long long a, long long b) {
      long long da = ((x - a) % M + M) % M;
      long long db = ((b - a) % M + M) % M;
      return da > 0 && da < db;
    };
    std::vector<int> here;
    for (int i = 0; i < m; ++i)
      if (js[i].cls == cls) here.push_back(i);
    for (size_t x = 0; x < here.size(); ++x) {
      for (size_t y = x + 1; y < here.size(); ++y) {
        long long a1 = position(here[x], false), b1 = position(here[x], true);
        long long a2 = position(here[y], false), b2 = position(here[y], true);
        int inside = (in_open_arc(a2, a1, b1) ? 1 : 0) + (in_open_arc(b2, a1, b1) ? 1 : 0);
        if (inside == 1) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// enumeration

namespace {

struct OrientedEdge {
  int conn = -1;
  bool forward = true;
  int start_cls = -1, end_cls = -1;
  double dep_coord = 0, arr_coord = 0;
  double length = 0;
};

using Word = std::vector<std::pair<int, int>>;  // (conn, forward)

Word canonical_word(Word w) {
  auto min_rotation = [](const Word& v) {
    Word best = v;
    for (size_t r = 1; r < v.size(); ++r) {
      Word rot(v.begin() + static_cast<long>(r), v.end());
      rot.insert(rot.end(), v.begin(), v.begin() + static_cast<long>(r));
      if (rot < best) best = rot;
    }
    return best;
  };
  Word rev;
  for (size_t i = w.size(); i-- > 0;) rev.push_back({w[i].first, w[i].second ? 0 : 1});
  Word a = min_rotation(w), b = min_rotation(rev);
  return std::min(a, b);
}

}  // namespace

CurveEnumeration enumerate_simple_closed_geodesics(
    const TriMesh& mesh, double max_length,
    const std::vector<SaddleConnection>& connections,
    const CurveEnumerationOptions& opts) {
  CurveEnumeration result;
  const double L = max_length * (1 + 1e-12);
  int n = static_cast<int>(connections.size());

  std::vector<std::vector<SegmentPiece>> pieces(n);
  std::vector<bool> self_crossing(n, false);
  for (int i = 0; i < n; ++i) {
    pieces[i] = connection_pieces(mesh, connections[i]);
    self_crossing[i] = connections_cross(mesh, pieces[i], pieces[i], true);
  }
  std::vector<std::vector<bool>> crossing(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      crossing[i][j] = crossing[j][i] =
          connections_cross(mesh, pieces[i], pieces[j], false);

  std::vector<OrientedEdge> oriented;
  for (int i = 0; i < n; ++i) {
    if (self_crossing[i]) continue;
    const SaddleConnection& sc = connections[i];
    if (sc.length > L) continue;
    oriented.push_back({i, true, sc.start_class, sc.end_class, sc.start_coord,
                        sc.end_coord, sc.length});
    oriented.push_back({i, false, sc.end_class, sc.start_class, sc.end_coord,
                        sc.start_coord, sc.length});
  }
  int ne = static_cast<int>(oriented.size());
  std::vector<std::vector<int>> by_start(mesh.fans().size());
  for (int i = 0; i < ne; ++i) by_start[oriented[i].start_cls].push_back(i);

  auto junction_ok = [&](const OrientedEdge& in, const OrientedEdge& out) {
    double cone = mesh.fans()[in.end_cls].cone_angle;
    double left = angle_between_coords(in.arr_coord, out.dep_coord, cone, AngleSide::Left);
    return left >= kPi - 1e-9 && cone - left >= kPi - 1e-9;
  };

  long nodes = 0;
  std::set<Word> seen;
  std::vector<Word> candidates;

  std::vector<int> seq;
  std::vector<int> used_conns;
  double used_len = 0;

  std::function<void(int)> dfs = [&](int root) {
    if (++nodes > opts.chain_budget) {
      result.budget_exceeded = true;
      return;
    }
    const OrientedEdge& last = oriented[seq.back()];
    // close the loop?
    if (last.end_cls == oriented[root].start_cls &&
        junction_ok(last, oriented[root])) {
      Word w;
      for (int id : seq) w.push_back({oriented[id].conn, oriented[id].forward ? 1 : 0});
      Word cw = canonical_word(w);
      if (seen.insert(cw).second) candidates.push_back(w);
    }
    if (static_cast<int>(seq.size()) >= opts.max_chain_edges) return;
    for (int next : by_start[last.end_cls]) {
      if (next < root) continue;
      if (result.budget_exceeded) return;
      const OrientedEdge& e = oriented[next];
      if (used_len + e.length > L) continue;
      if (!junction_ok(last, e)) continue;
      bool crosses = false;
      for (int c : used_conns)
        if (c != e.conn && crossing[c][e.conn]) {
          crosses = true;
          break;
        }
      if (crosses) continue;
      seq.push_back(next);
      used_conns.push_back(e.conn);
      used_len += e.length;
      dfs(root);
      used_len -= e.length;
      used_conns.pop_back();
      seq.pop_back();
    }
  };

  for (int root = 0; root < ne && !result.budget_exceeded; ++root) {
    if (oriented[root].length > L) continue;
    seq = {root};
    used_conns = {oriented[root].conn};
    used_len = oriented[root].length;
    dfs(root);
  }

  // Build chain representatives.
  std::vector<GeodesicRepresentative> chains;
  for (const Word& w : candidates) {
    GeodesicRepresentative rep;
    for (auto [conn, fwd] : w) {
      ChainEdge e;
      e.connection = connections[conn];
      e.forward = fwd != 0;
      rep.chain.push_back(std::move(e));
    }
    if (!validate_geodesic(mesh, rep.chain)) continue;
    if (!is_simple(mesh, rep)) continue;
    rep.length = 0;
    for (const auto& [sc, mult] : rep.multiplicities()) {
      rep.length += mult * sc.length;
      rep.length_h += mult * std::abs(sc.holonomy.x);
      rep.length_v += mult * std::abs(sc.holonomy.y);
    }
    chains.push_back(std::move(rep));
  }

  // Cylinders in every saddle-connection direction.
  std::vector<GeodesicRepresentative> cylinders;
  std::set<long long> dirs;
  for (const auto& sc : connections) dirs.insert(quant(direction_angle(sc.holonomy)));
  for (long long dq : dirs) {
    double theta = static_cast<double>(dq) * 1e-9;
    CylinderDecomposition dec =
        cylinders_in_direction(mesh, theta, L + 10 * mesh.point_tol());
    for (auto& cyl : dec.cylinders) {
      if (cyl.circumference > L) continue;
      GeodesicRepresentative rep;
      rep.is_cylinder = true;
      rep.cylinder = std::move(cyl);
      rep.chosen_boundary = 0;
      rep.length = rep.cylinder->circumference;
      for (const auto& [sc, mult] : rep.multiplicities()) {
        rep.length_h += mult * std::abs(sc.holonomy.x);
        rep.length_v += mult * std::abs(sc.holonomy.y);
      }
      cylinders.push_back(std::move(rep));
    }
  }

  // Drop chains that retrace a cylinder boundary: those classes are already
  // represented by the cylinder.
  auto multiset_key = [&](const GeodesicRepresentative& rep) {
    std::vector<std::array<long long, 6>> keys;
    for (const auto& [sc, mult] : rep.multiplicities())
      keys.push_back({sc.start_class, sc.end_class, quant(sc.start_coord),
                      quant(sc.end_coord), quant(sc.length, 1e-12), mult});
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  std::set<std::vector<std::array<long long, 6>>> boundary_keys;
  for (const auto& rep : cylinders) {
    for (int side = 0; side < 2; ++side) {
      GeodesicRepresentative b;
      b.is_cylinder = true;
      b.cylinder = rep.cylinder;
      b.chosen_boundary = side;
      boundary_keys.insert(multiset_key(b));
    }
  }
  for (auto& rep : chains) {
    if (classify(rep) != CurveClass::Crooked &&
        boundary_keys.count(multiset_key(rep)))
      continue;
    result.curves.push_back(std::move(rep));
  }
  for (auto& rep : cylinders) result.curves.push_back(std::move(rep));

  std::sort(result.curves.begin(), result.curves.end(),
            [](const GeodesicRepresentative& a, const GeodesicRepresentative& b) {
              if (a.length != b.length) return a.length < b.length;
              if (a.is_cylinder != b.is_cylinder) return a.is_cylinder < b.is_cylinder;
              return a.chain.size() < b.chain.size();
            });
  return result;
}

}  // namespace flatspec
