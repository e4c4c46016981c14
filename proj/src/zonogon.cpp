#include "flatspec/zonogon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flatspec/errors.hpp"

namespace flatspec {

namespace {
constexpr double kDirTol = 1e-12;  // radians, for parallel-generator merging
}

double Zonogon::scale() const {
  double r = 0;
  for (const Vec2& v : vertices) r = std::max(r, norm(v));
  return r;
}

Zonogon build_zonogon(std::vector<Vec2> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::ZeroGenerator, "no generators");
  for (Vec2& v : vectors) {
    if (norm(v) == 0.0) throw Error(ErrorCode::ZeroGenerator, "zero generator vector");
    v = canonical_direction(v);
  }
  std::sort(vectors.begin(), vectors.end(), [](Vec2 a, Vec2 b) {
    return direction_angle(a) < direction_angle(b);
  });

  // Merge parallel generators; summing keeps the total length since they
  // share a direction.
  Zonogon z;
  for (const Vec2& v : vectors) {
    if (!z.generators.empty() &&
        std::abs(direction_angle(z.generators.back()) - direction_angle(v)) <= kDirTol) {
      z.generators.back() += v;
    } else {
      z.generators.push_back(v);
    }
  }

  z.degenerate = z.generators.size() == 1;
  Vec2 p{0, 0};
  for (const Vec2& w : z.generators) p += w;
  p = p * 0.5;

  Vec2 cur = -p;
  for (const Vec2& w : z.generators) {
    z.vertices.push_back(cur);
    cur += w;
  }
  for (const Vec2& w : z.generators) {
    z.vertices.push_back(cur);
    cur -= w;
  }
  return z;
}

double area(const Zonogon& z) {
  double s = 0;
  for (size_t i = 0; i < z.generators.size(); ++i)
    for (size_t j = i + 1; j < z.generators.size(); ++j)
      s += std::abs(cross(z.generators[i], z.generators[j]));
  return s;
}

double perimeter(const Zonogon& z) {
  double s = 0;
  for (const Vec2& w : z.generators) s += norm(w);
  return 2.0 * s;
}

double support(const Zonogon& z, Vec2 u) {
  double h = -std::numeric_limits<double>::infinity();
  for (const Vec2& v : z.vertices) h = std::max(h, dot(v, u));
  return h;
}

double width(const Zonogon& z, double theta) {
  return 2.0 * support(z, {std::cos(theta), std::sin(theta)});
}

WidthProfile width_profile(const Zonogon& z) {
  // Walking u_theta counterclockwise for theta in [0, pi), the maximizing
  // vertex advances by one generator each time theta passes a breakpoint
  // theta_i + pi/2 (mod pi), where theta_i is a generator direction.
  WidthProfile prof;
  const auto& gens = z.generators;
  size_t k = gens.size();

  struct Break {
    double theta;
    size_t gen;
  };
  std::vector<Break> breaks;
  for (size_t i = 0; i < k; ++i) {
    double t = direction_angle(gens[i]) + kPi / 2.0;
    if (t >= kPi) t -= kPi;
    breaks.push_back({t, i});
  }
  std::sort(breaks.begin(), breaks.end(),
            [](const Break& a, const Break& b) { return a.theta < b.theta; });

  auto argmax_vertex = [&](double theta) {
    Vec2 u{std::cos(theta), std::sin(theta)};
    Vec2 best = z.vertices.front();
    double hb = dot(best, u);
    for (const Vec2& v : z.vertices) {
      double h = dot(v, u);
      if (h > hb) {
        hb = h;
        best = v;
      }
    }
    return best;
  };

  double prev = 0.0;
  for (size_t i = 0; i <= breaks.size(); ++i) {
    double next = (i == breaks.size()) ? kPi : breaks[i].theta;
    if (next - prev > 1e-15) {
      Vec2 v = argmax_vertex(0.5 * (prev + next));
      prof.arcs.push_back({prev, next, v * 2.0});
    }
    prev = next;
  }
  return prof;
}

double WidthProfile::eval(double theta) const {
  theta = std::fmod(theta, kPi);
  if (theta < 0) theta += kPi;
  for (const Arc& a : arcs) {
    if (theta >= a.lo && theta <= a.hi)
      return dot(a.d, {std::cos(theta), std::sin(theta)});
  }
  const Arc& a = arcs.back();
  return dot(a.d, {std::cos(theta), std::sin(theta)});
}

double WidthProfile::integral() const {
  // integral of <d, u_theta> = |d| * (sin(hi - phi) - sin(lo - phi)),
  // phi = angle of d. The integrand is nonnegative on each arc except for
  // a degenerate zonogon, where it changes sign at phi + pi/2; split there.
  double total = 0;
  for (const Arc& a : arcs) {
    double phi = std::atan2(a.d.y, a.d.x);
    auto piece = [&](double lo, double hi) {
      return norm(a.d) * (std::sin(hi - phi) - std::sin(lo - phi));
    };
    double zero = phi + kPi / 2.0;
    while (zero > a.hi) zero -= kPi;
    while (zero < a.lo) zero += kPi;
    if (zero > a.lo && zero < a.hi) {
      total += std::abs(piece(a.lo, zero)) + std::abs(piece(zero, a.hi));
    } else {
      total += std::abs(piece(a.lo, a.hi));
    }
  }
  return total;
}

namespace {

// Outward edge normal angles of the boundary, covering the full circle.
// A degenerate zonogon contributes the two normals of its segment.
std::vector<double> support_breakpoints(const Zonogon& z) {
  std::vector<double> out;
  size_t n = z.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 e = z.vertices[(i + 1) % n] - z.vertices[i];
    if (norm(e) == 0) continue;
    Vec2 nrm = rot90(e) * -1.0;  // CCW boundary: outward normal is -rot90
    out.push_back(std::atan2(nrm.y, nrm.x));
  }
  if (z.degenerate) {
    Vec2 e = z.vertices[1] - z.vertices[0];
    Vec2 nrm = rot90(e);
    out.push_back(std::atan2(nrm.y, nrm.x));
    out.push_back(std::atan2(-nrm.y, -nrm.x));
  }
  return out;
}

Vec2 argmax_vertex(const Zonogon& z, Vec2 u) {
  Vec2 best = z.vertices.front();
  double hb = dot(best, u);
  for (const Vec2& v : z.vertices) {
    double h = dot(v, u);
    if (h > hb) {
      hb = h;
      best = v;
    }
  }
  return best;
}

}  // namespace

double hausdorff(const Zonogon& a, const Zonogon& b) {
  // sup over u of |h_a(u) - h_b(u)|. Between consecutive normal-fan
  // breakpoints of both polygons the difference is a single sinusoid
  // <va - vb, u>, maximized in closed form.
  std::vector<double> phis = support_breakpoints(a);
  for (double p : support_breakpoints(b)) phis.push_back(p);
  for (double& p : phis) {
    p = std::fmod(p, 2.0 * kPi);
    if (p < 0) p += 2.0 * kPi;
  }
  std::sort(phis.begin(), phis.end());
  phis.erase(std::unique(phis.begin(), phis.end()), phis.end());

  double best = 0;
  auto eval = [&](double phi) {
    Vec2 u{std::cos(phi), std::sin(phi)};
    best = std::max(best, std::abs(support(a, u) - support(b, u)));
  };

  size_t n = phis.size();
  for (size_t i = 0; i < n; ++i) {
    double lo = phis[i];
    double hi = (i + 1 < n) ? phis[i + 1] : phis[0] + 2.0 * kPi;
    eval(lo);
    double mid = 0.5 * (lo + hi);
    Vec2 um{std::cos(mid), std::sin(mid)};
    Vec2 d = argmax_vertex(a, um) - argmax_vertex(b, um);
    // critical points of <d, u_phi> on the arc, at angle(d) mod pi
    if (norm(d) > 0) {
      double phid = std::atan2(d.y, d.x);
      for (int k = -2; k <= 2; ++k) {
        double cand = phid + k * kPi;
        if (cand > lo && cand < hi) eval(cand);
      }
    }
    eval(mid);
  }
  return best;
}

std::pair<double, double> radii(const Zonogon& z) {
  double rplus = 0;
  for (const Vec2& v : z.vertices) rplus = std::max(rplus, norm(v));
  if (z.degenerate) return {0.0, rplus};

  double rminus = std::numeric_limits<double>::infinity();
  size_t n = z.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 p = z.vertices[i];
    Vec2 e = z.vertices[(i + 1) % n] - p;
    double len = norm(e);
    if (len == 0) continue;
    rminus = std::min(rminus, std::abs(cross(e, p)) / len);
  }
  return {rminus, rplus};
}

double eccentricity(const Zonogon& z) {
  auto [rm, rp] = radii(z);
  if (rm == 0) return std::numeric_limits<double>::infinity();
  return rp / rm;
}

Zonogon apply_sl2(const Zonogon& z, const Mat2& m) {
  std::vector<Vec2> gens;
  gens.reserve(z.generators.size());
  for (const Vec2& w : z.generators) gens.push_back(m.apply(w));
  return build_zonogon(std::move(gens));
}

}  // namespace flatspec
