#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "flatspec/errors.hpp"
#include "flatspec/geodesy.hpp"
#include "flatspec/io.hpp"
#include "flatspec/mesh.hpp"
#include "flatspec/sl2opt.hpp"
#include "test_util.hpp"

using namespace flatspec;
using testutil::random_sl2;

namespace {

HalfTranslationSurface load(const char* name) {
  return HalfTranslationSurface::build(
      load_surface_file(std::string(SURFACE_DIR) + "/" + name));
}

// Brute-force oracle for the square torus: canonical-direction primitive
// integer vectors of norm <= L, one per +/- pair.
std::vector<Vec2> torus_primitive_vectors(double L) {
  std::vector<Vec2> out;
  int n = static_cast<int>(L) + 1;
  for (int p = -n; p <= n; ++p) {
    for (int q = -n; q <= n; ++q) {
      if (p == 0 && q == 0) continue;
      if (std::gcd(std::abs(p), std::abs(q)) != 1) continue;
      if (p * p + q * q > L * L + 1e-9) continue;
      if (q < 0 || (q == 0 && p < 0)) continue;  // canonical representative
      out.push_back({double(p), double(q)});
    }
  }
  std::sort(out.begin(), out.end(), [](Vec2 a, Vec2 b) {
    double la = norm2(a), lb = norm2(b);
    if (la != lb) return la < lb;
    return direction_angle(a) < direction_angle(b);
  });
  return out;
}

bool holonomy_multisets_match(std::vector<Vec2> a, std::vector<Vec2> b, double tol) {
  if (a.size() != b.size()) return false;
  for (const Vec2& v : a) {
    bool found = false;
    for (size_t i = 0; i < b.size(); ++i) {
      if (dist(b[i], v) <= tol) {
        b.erase(b.begin() + static_cast<long>(i));
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("square torus saddle connections at L = 2 are the four short vectors") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 2.0);
  std::vector<Vec2> hol;
  for (const auto& c : conns) hol.push_back(c.holonomy);
  std::vector<Vec2> expect{{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
  CHECK(holonomy_multisets_match(hol, expect, 1e-9));
}

TEST_CASE("square torus saddle connections match the gcd oracle at L = 10") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 10.0);
  std::vector<Vec2> hol;
  for (const auto& c : conns) hol.push_back(c.holonomy);
  std::vector<Vec2> expect = torus_primitive_vectors(10.0);
  CHECK(hol.size() == expect.size());
  CHECK(holonomy_multisets_match(hol, expect, 1e-9));
}

TEST_CASE("cutoff below the shortest connection yields nothing") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  CHECK(enumerate_saddle_connections(mesh, 0.5).empty());
}

TEST_CASE("enumeration is deterministic and sorted") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  auto a = enumerate_saddle_connections(mesh, 4.0);
  auto b = enumerate_saddle_connections(mesh, 4.0);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].holonomy.x == b[i].holonomy.x);
    CHECK(a[i].holonomy.y == b[i].holonomy.y);
    CHECK(a[i].start_coord == b[i].start_coord);
    if (i) CHECK(a[i - 1].length <= a[i].length + 1e-15);
  }
  // single-threaded run agrees with the default
  EnumerationOptions opts;
  opts.threads = 1;
  auto c = enumerate_saddle_connections(mesh, 4.0, opts);
  REQUIRE(c.size() == a.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(dist(a[i].holonomy, c[i].holonomy) == 0.0);
}

TEST_CASE("crossing records re-trace to the holonomy") {
  for (const char* name : {"octagon.json", "lshape_1_1.2345678.json"}) {
    HalfTranslationSurface s = load(name);
    TriMesh mesh(s);
    auto conns = enumerate_saddle_connections(mesh, 3.0);
    CHECK(conns.size() > 4);
    for (const auto& c : conns) {
      // develop the pieces and compare the accumulated displacement
      auto pieces = connection_pieces(mesh, c);
      REQUIRE(pieces.size() == c.crossings.size() + 1);
      double len = 0;
      for (const auto& p : pieces) len += dist(p.a, p.b);
      CHECK(std::abs(len - c.length) <= 1e-9 * c.length);
      TraceResult tr = trace_ray(mesh, c.start_tri,
                                 mesh.tris()[c.start_tri].p[c.start_corner],
                                 c.holonomy, c.length * (1 + 1e-7) + 1e-12);
      CHECK(tr.hit_cone);
      CHECK(tr.cone_class == c.end_class);
      CHECK(dist(tr.displacement, c.holonomy) <= 1e-9 * std::max(1.0, c.length));
    }
  }
}

TEST_CASE("node budget failure is reported") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  EnumerationOptions opts;
  opts.node_budget = 3;
  try {
    enumerate_saddle_connections(mesh, 20.0, opts);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CutoffTooLarge);
  }
}

TEST_CASE("holonomies are equivariant under the action") {
  HalfTranslationSurface s = load("stsquare3.json");
  TriMesh mesh(s);
  double L = 2.5;
  auto base = enumerate_saddle_connections(mesh, L);
  std::mt19937 rng(73);
  for (int it = 0; it < 5; ++it) {
    Mat2 m = random_sl2(rng, 2.0);
    double lam = svd_stretch(m);
    HalfTranslationSurface t = s.applied(m);
    TriMesh tmesh(t);
    auto imgs = enumerate_saddle_connections(tmesh, lam * L * (1 + 1e-9));
    for (const auto& c : base) {
      Vec2 want = canonical_direction(m.apply(c.holonomy));
      bool found = false;
      for (const auto& d : imgs)
        if (dist(d.holonomy, want) <= 1e-9 * std::max(1.0, norm(want))) {
          found = true;
          break;
        }
      CHECK(found);
    }
  }
}

TEST_CASE("angle between connections at the torus marked point") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 1.5);
  const SaddleConnection* h = nullptr;
  const SaddleConnection* v = nullptr;
  for (const auto& c : conns) {
    if (dist(c.holonomy, {1, 0}) < 1e-9) h = &c;
    if (dist(c.holonomy, {0, 1}) < 1e-9) v = &c;
  }
  REQUIRE(h);
  REQUIRE(v);
  // incoming (1,0), outgoing (0,1): left pi/2, right 3pi/2
  CHECK(angle_between(mesh, *h, *v, AngleSide::Left) == doctest::Approx(kPi / 2));
  CHECK(angle_between(mesh, *h, *v, AngleSide::Right) == doctest::Approx(3 * kPi / 2));
  // reversal: sides sum to the cone angle
  double l = angle_between(mesh, *h, *h, AngleSide::Left);
  double r = angle_between(mesh, *h, *h, AngleSide::Right);
  CHECK(l + r == doctest::Approx(2 * kPi));
}

TEST_CASE("parallel connections at the octagon cone bound angle 3 pi") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 1.5);
  double cone = mesh.fans()[0].cone_angle;
  CHECK(cone == doctest::Approx(6 * kPi));
  bool found_3pi = false;
  for (const auto& a : conns) {
    for (const auto& b : conns) {
      double d = std::abs(direction_angle(a.holonomy) - direction_angle(b.holonomy));
      d = std::min(d, kPi - d);
      if (d > 1e-9) continue;  // only parallel pairs
      double left = angle_between(mesh, a, b, AngleSide::Left);
      // angles between parallel rays are multiples of pi
      double frac = std::fmod(left, kPi);
      CHECK((frac < 1e-6 || kPi - frac < 1e-6));
      if (std::abs(left - 3 * kPi) < 1e-6) found_3pi = true;
    }
  }
  CHECK(found_3pi);
}

TEST_CASE("horizontal cylinder of the square torus") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  CylinderDecomposition dec = cylinders_in_direction(mesh, 0.0, 10.0);
  CHECK(dec.certified_periodic);
  REQUIRE(dec.cylinders.size() == 1);
  const MaximalCylinder& c = dec.cylinders[0];
  CHECK(c.circumference == doctest::Approx(1.0));
  CHECK(c.height == doctest::Approx(1.0));
  CHECK(c.boundary[0].size() == 1);
  CHECK(c.boundary[1].size() == 1);
}

TEST_CASE("slope-1/2 cylinder of the square torus") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  double theta = std::atan2(1.0, 2.0);
  CylinderDecomposition dec = cylinders_in_direction(mesh, theta, 10.0);
  CHECK(dec.certified_periodic);
  REQUIRE(dec.cylinders.size() == 1);
  CHECK(dec.cylinders[0].circumference == doctest::Approx(std::sqrt(5.0)));
  CHECK(dec.cylinders[0].height == doctest::Approx(1.0 / std::sqrt(5.0)));
}

TEST_CASE("irrational direction on the octagon is not certified periodic") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  CylinderDecomposition dec = cylinders_in_direction(mesh, 0.7301, 40.0);
  CHECK(!dec.certified_periodic);
  CHECK(dec.cylinders.empty());
}

TEST_CASE("cylinder decompositions fill the surface in periodic directions") {
  for (const char* name : {"stsquare3.json", "lshape_1_1.2345678.json"}) {
    HalfTranslationSurface s = load(name);
    TriMesh mesh(s);
    for (double theta : {0.0, kPi / 2}) {
      CylinderDecomposition dec = cylinders_in_direction(mesh, theta, 50.0);
      CHECK(dec.certified_periodic);
      double total = 0;
      for (const auto& c : dec.cylinders) {
        total += c.circumference * c.height;
        // boundary legs are parallel to the direction and sum to the length
        for (int side = 0; side < 2; ++side) {
          double len = 0;
          for (const auto& leg : c.boundary[side]) {
            double d = std::abs(direction_angle(leg.connection.holonomy) - c.direction);
            d = std::min(d, kPi - d);
            CHECK(d <= 1e-9);
            len += leg.connection.length;
          }
          CHECK(len == doctest::Approx(c.circumference).epsilon(1e-9));
        }
      }
      CHECK(total == doctest::Approx(s.area()).epsilon(1e-9));
    }
  }
}

TEST_CASE("octagon horizontal decomposition matches the known pattern") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  CylinderDecomposition dec = cylinders_in_direction(mesh, 0.0, 30.0);
  CHECK(dec.certified_periodic);
  double total = 0;
  for (const auto& c : dec.cylinders) total += c.circumference * c.height;
  CHECK(total == doctest::Approx(s.area()).epsilon(1e-9));
}
