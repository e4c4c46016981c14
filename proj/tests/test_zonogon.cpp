#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flatspec/errors.hpp"
#include "flatspec/sl2opt.hpp"
#include "flatspec/zonogon.hpp"
#include "test_util.hpp"

using namespace flatspec;
using testutil::random_sl2;

namespace {

// Independent shoelace oracle over an explicitly constructed boundary.
double shoelace(const std::vector<Vec2>& v) {
  double s = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    s += a.x * b.y - a.y * b.x;
  }
  return std::abs(s) / 2;
}

// Brute-force Minkowski-sum oracle: hull of all corner combinations.
std::vector<Vec2> hull_of_sums(const std::vector<Vec2>& gens) {
  std::vector<Vec2> pts;
  size_t k = gens.size();
  for (size_t mask = 0; mask < (size_t(1) << k); ++mask) {
    Vec2 p{0, 0};
    for (size_t i = 0; i < k; ++i)
      p += gens[i] * ((mask >> i) & 1 ? 0.5 : -0.5);
    pts.push_back(p);
  }
  // Andrew monotone chain
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  auto half = [&](bool upper) {
    std::vector<Vec2> h;
    for (Vec2 p : pts) {
      while (h.size() >= 2) {
        Vec2 u = h[h.size() - 1] - h[h.size() - 2];
        Vec2 v = p - h[h.size() - 1];
        double c = cross(u, v);
        if (upper ? c >= -1e-12 : c <= 1e-12) h.pop_back();
        else break;
      }
      h.push_back(p);
    }
    return h;
  };
  std::vector<Vec2> lo = half(false), hi = half(true);
  lo.pop_back();
  std::reverse(hi.begin(), hi.end());
  hi.pop_back();
  lo.insert(lo.end(), hi.begin(), hi.end());
  return lo;
}

std::vector<Vec2> random_generators(std::mt19937& rng, int kmax = 12) {
  std::uniform_int_distribution<int> kd(2, kmax);
  std::uniform_real_distribution<double> cd(-10, 10);
  int k = kd(rng);
  std::vector<Vec2> g;
  for (int i = 0; i < k; ++i) {
    Vec2 v{cd(rng), cd(rng)};
    if (norm(v) < 1e-6) v.x += 1;
    g.push_back(v);
  }
  return g;
}

}  // namespace

TEST_CASE("unit square zonogon") {
  Zonogon z = build_zonogon({{1, 0}, {0, 1}});
  CHECK(!z.degenerate);
  REQUIRE(z.vertices.size() == 4);
  for (const Vec2& v : z.vertices) {
    CHECK(std::abs(std::abs(v.x) - 0.5) < 1e-15);
    CHECK(std::abs(std::abs(v.y) - 0.5) < 1e-15);
  }
  CHECK(area(z) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(perimeter(z) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(support(z, {1, 0}) == doctest::Approx(0.5));
  CHECK(width(z, kPi / 4) == doctest::Approx(std::sqrt(2.0)));
  auto [rm, rp] = radii(z);
  CHECK(rm == doctest::Approx(0.5));
  CHECK(rp == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(eccentricity(z) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("three-generator hexagon matches the Minkowski-sum oracle") {
  std::vector<Vec2> gens{{1, 0}, {1, 1}, {0, 1}};
  Zonogon z = build_zonogon(gens);
  REQUIRE(z.vertices.size() == 6);
  // p_3 = (sum)/2 = (1, 1)
  bool has_p = false;
  for (const Vec2& v : z.vertices)
    if (dist(v, {1, 1}) < 1e-12) has_p = true;
  CHECK(has_p);
  std::vector<Vec2> oracle = hull_of_sums(gens);
  REQUIRE(oracle.size() == 6);
  for (const Vec2& v : z.vertices) {
    double best = 1e300;
    for (const Vec2& o : oracle) best = std::min(best, dist(v, o));
    CHECK(best < 1e-12);
  }
  CHECK(area(z) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(area(z) == doctest::Approx(shoelace(z.vertices)).epsilon(1e-14));
  CHECK(perimeter(z) == doctest::Approx(2 * (2 + std::sqrt(2.0))).epsilon(1e-14));
}

TEST_CASE("parallel generators merge into a degenerate segment") {
  Zonogon z = build_zonogon({{1, 0}, {2, 0}});
  CHECK(z.degenerate);
  REQUIRE(z.vertices.size() == 2);
  CHECK(dist(z.vertices[0], {-1.5, 0}) < 1e-15);
  CHECK(dist(z.vertices[1], {1.5, 0}) < 1e-15);
  CHECK(area(z) == 0.0);
  CHECK(perimeter(z) == doctest::Approx(6.0));  // segment traversed both ways
  CHECK(eccentricity(z) == std::numeric_limits<double>::infinity());
}

TEST_CASE("zero generator is rejected") {
  CHECK_THROWS_AS(build_zonogon({{0, 0}}), Error);
}

TEST_CASE("area formula equals shoelace on random generators") {
  std::mt19937 rng(7);
  for (int it = 0; it < 2000; ++it) {
    Zonogon z = build_zonogon(random_generators(rng));
    double a1 = area(z);
    double a2 = shoelace(z.vertices);
    CHECK(std::abs(a1 - a2) <= 1e-12 * std::max(1.0, std::abs(a1)));
  }
}

TEST_CASE("perimeter equals the width integral") {
  std::mt19937 rng(11);
  for (int it = 0; it < 500; ++it) {
    Zonogon z = build_zonogon(random_generators(rng));
    double p = perimeter(z);
    double integral = width_profile(z).integral();
    CHECK(std::abs(p - integral) <= 1e-10 * std::max(1.0, p));
  }
}

TEST_CASE("width profile evaluates like direct supports") {
  std::mt19937 rng(13);
  for (int it = 0; it < 200; ++it) {
    Zonogon z = build_zonogon(random_generators(rng));
    WidthProfile prof = width_profile(z);
    for (double theta : {0.0, 0.3, kPi / 4, 1.2, 2.9}) {
      CHECK(prof.eval(theta) == doctest::Approx(width(z, theta)).epsilon(1e-10));
    }
  }
}

TEST_CASE("hausdorff distance basics") {
  Zonogon sq1 = build_zonogon({{1, 0}, {0, 1}});
  CHECK(hausdorff(sq1, sq1) == doctest::Approx(0.0));
  Zonogon sq2 = build_zonogon({{2, 0}, {0, 2}});
  // max over angles of (|cos| + |sin|) / 2
  CHECK(hausdorff(sq1, sq2) == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  Zonogon seg = build_zonogon({{2, 0}});
  CHECK(hausdorff(seg, sq1) == doctest::Approx(0.5).epsilon(1e-12));
}

namespace {

// Exact supremum of |w1 - w2| over [0, pi) from the piecewise-sinusoidal
// profiles: evaluate at all arc boundaries and at the critical angles of
// each difference sinusoid.
double sup_width_diff(const WidthProfile& p1, const WidthProfile& p2) {
  std::vector<double> cuts{0.0, kPi};
  for (const auto& a : p1.arcs) cuts.push_back(a.lo);
  for (const auto& a : p2.arcs) cuts.push_back(a.lo);
  std::sort(cuts.begin(), cuts.end());
  double sup = 0;
  auto eval = [&](double th) {
    sup = std::max(sup, std::abs(p1.eval(th) - p2.eval(th)));
  };
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = cuts[i + 1];
    if (hi - lo < 1e-15) continue;
    eval(lo);
    double mid = 0.5 * (lo + hi);
    Vec2 d1{0, 0}, d2{0, 0};
    for (const auto& a : p1.arcs)
      if (mid >= a.lo && mid <= a.hi) d1 = a.d;
    for (const auto& a : p2.arcs)
      if (mid >= a.lo && mid <= a.hi) d2 = a.d;
    Vec2 d = d1 - d2;
    if (norm(d) > 0) {
      double phid = std::atan2(d.y, d.x);
      for (int k = -2; k <= 2; ++k) {
        double cand = phid + k * kPi;
        if (cand > lo && cand < hi) eval(cand);
      }
    }
  }
  eval(kPi - 1e-15);
  return sup;
}

}  // namespace

TEST_CASE("isometric embedding: 2 d_H equals the sup width difference") {
  std::mt19937 rng(17);
  for (int it = 0; it < 1000; ++it) {
    Zonogon z1 = build_zonogon(random_generators(rng));
    Zonogon z2 = build_zonogon(random_generators(rng));
    double dh = hausdorff(z1, z2);
    double sup = sup_width_diff(width_profile(z1), width_profile(z2));
    CHECK(std::abs(2 * dh - sup) <= 1e-12 * std::max(1.0, sup));
  }
}

TEST_CASE("eccentricity approaches 1 for fine regular zonogons") {
  std::vector<Vec2> gens;
  int n = 64;
  for (int i = 0; i < n; ++i) {
    double th = kPi * i / n;
    gens.push_back({std::cos(th) / n, std::sin(th) / n});
  }
  Zonogon z = build_zonogon(gens);
  CHECK(eccentricity(z) < 1.01);
}

TEST_CASE("SL(2,R) action on zonogons") {
  Zonogon z = build_zonogon({{1, 0}, {0, 1}});
  Zonogon zi = apply_sl2(z, Mat2::identity());
  CHECK(area(zi) == doctest::Approx(area(z)));
  Zonogon zd = apply_sl2(z, Mat2::diagonal(2, 0.5));
  CHECK(area(zd) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(support(zd, {1, 0}) == doctest::Approx(1.0));
  CHECK(support(zd, {0, 1}) == doctest::Approx(0.25));

  std::mt19937 rng(23);
  for (int it = 0; it < 500; ++it) {
    Zonogon a = build_zonogon(random_generators(rng));
    Mat2 m = random_sl2(rng);
    Zonogon b = apply_sl2(a, m);
    CHECK(std::abs(area(a) - area(b)) <= 1e-12 * std::max(1.0, area(a)));
    // vertex set maps onto vertex set
    for (const Vec2& v : a.vertices) {
      Vec2 w = m.apply(v);
      double best = 1e300;
      for (const Vec2& u : b.vertices) best = std::min(best, dist(u, w));
      CHECK(best <= 1e-10 * std::max(1.0, norm(w)));
    }
  }
}

TEST_CASE("hausdorff is lambda-Lipschitz under the action") {
  std::mt19937 rng(29);
  for (int it = 0; it < 1000; ++it) {
    Zonogon k = build_zonogon(random_generators(rng, 6));
    Zonogon l = build_zonogon(random_generators(rng, 6));
    Mat2 m = random_sl2(rng);
    double lam = svd_stretch(m);
    double before = hausdorff(k, l);
    double after = hausdorff(apply_sl2(k, m), apply_sl2(l, m));
    CHECK(after <= lam * before * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("radii bounds under stretch") {
  std::mt19937 rng(31);
  for (int it = 0; it < 500; ++it) {
    Zonogon k = build_zonogon(random_generators(rng, 6));
    Mat2 m = random_sl2(rng);
    double lam = svd_stretch(m);
    auto [rm, rp] = radii(k);
    auto [rm2, rp2] = radii(apply_sl2(k, m));
    double tol = 1e-9 * std::max(1.0, rp);
    CHECK(rp2 <= lam * rp + tol);
    CHECK(rp2 >= lam * rm - tol);
    CHECK(rm2 >= rm / lam - tol);
    CHECK(rm2 <= rp / lam + tol);
  }
}

TEST_CASE("eccentricity ratio bound from the hausdorff distance") {
  std::mt19937 rng(37);
  int tested = 0;
  while (tested < 300) {
    Zonogon k = build_zonogon(random_generators(rng, 6));
    Zonogon l = build_zonogon(random_generators(rng, 6));
    double r0 = 0.5;
    auto [rmk, rpk] = radii(k);
    auto [rml, rpl] = radii(l);
    if (rmk <= r0 || rml <= r0) continue;
    ++tested;
    double d = hausdorff(k, l);
    double bound = (1 + d / r0) * (1 + d / r0);
    double ratio = eccentricity(k) / eccentricity(l);
    CHECK(ratio < bound + 1e-9);
    CHECK(ratio > 1.0 / bound - 1e-9);
  }
}
