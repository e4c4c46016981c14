#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flatspec/curves.hpp"
#include "flatspec/errors.hpp"
#include "flatspec/io.hpp"
#include "flatspec/sl2opt.hpp"
#include "test_util.hpp"

using namespace flatspec;
using testutil::random_sl2;

namespace {

HalfTranslationSurface load(const char* name) {
  return HalfTranslationSurface::build(
      load_surface_file(std::string(SURFACE_DIR) + "/" + name));
}

// On the torus surface file, gluing 0 identifies bottom and top, gluing 1
// identifies right and left. A (p, q) lattice loop crosses gluing 1 p times
// and gluing 0 q times, interleaved as evenly as possible.
CurvePath torus_path(int p, int q) {
  CurvePath path;
  int total = p + q;
  double ph = 0.15, pv = 0.35;
  int cp = 0, cq = 0;
  for (int i = 0; i < total; ++i) {
    bool do_h = (cp * q <= cq * p && cp < p) || cq >= q;
    if (do_h) {
      path.hops.push_back({1, ph, +1});
      ph = std::fmod(ph + 0.13, 0.7) + 0.1;
      ++cp;
    } else {
      path.hops.push_back({0, pv, +1});
      pv = std::fmod(pv + 0.17, 0.7) + 0.1;
      ++cq;
    }
  }
  return path;
}

}  // namespace

TEST_CASE("torus lattice curves tighten to cylinders of lattice length") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  struct Case {
    int p, q;
    double len;
  };
  for (const Case& c : {Case{1, 0, 1.0}, Case{0, 1, 1.0}, Case{1, 1, std::sqrt(2.0)},
                        Case{2, 1, std::sqrt(5.0)}}) {
    GeodesicRepresentative rep = tighten(mesh, torus_path(c.p, c.q));
    CHECK(rep.is_cylinder);
    CHECK(rep.length == doctest::Approx(c.len).epsilon(1e-9));
    CHECK(classify(rep) == CurveClass::Cylinder);
    CHECK(is_simple(mesh, rep));
    Zonogon z = auxiliary_polygon(rep);
    CHECK(z.degenerate);
    CHECK(perimeter(z) == doctest::Approx(2 * rep.length).epsilon(1e-9));
  }
}

TEST_CASE("contractible loop degenerates") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  CurvePath path;
  path.hops.push_back({1, 0.3, +1});
  path.hops.push_back({1, 0.6, -1});
  try {
    tighten(mesh, path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Degenerate);
  }
}

TEST_CASE("octagon path hugging two non-parallel sides tightens to a crooked chain") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  CurvePath path;
  path.hops.push_back({0, 0.5, +1});
  path.hops.push_back({1, 0.5, +1});
  GeodesicRepresentative rep = tighten(mesh, path);
  REQUIRE(!rep.is_cylinder);
  CHECK(rep.chain.size() >= 2);
  CHECK(classify(rep) == CurveClass::Crooked);
  CHECK(validate_geodesic(mesh, rep.chain));
  CHECK(is_simple(mesh, rep));
  // the junction condition holds on both sides
  std::vector<JunctionReport> reports;
  validate_geodesic(mesh, rep.chain, &reports);
  for (const auto& r : reports) {
    CHECK(r.left >= kPi - 1e-9);
    CHECK(r.right >= kPi - 1e-9);
    CHECK(r.left + r.right == doctest::Approx(6 * kPi));
  }
  // crooked iff the zonogon has positive area
  CHECK(area(auxiliary_polygon(rep)) > 1e-12);
  CHECK(perimeter(auxiliary_polygon(rep)) == doctest::Approx(2 * rep.length).epsilon(1e-9));
}

TEST_CASE("different paths in one class reach the same geodesic length") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  CurvePath path;
  path.hops.push_back({0, 0.15, +1});
  path.hops.push_back({1, 0.85, +1});
  GeodesicRepresentative a = tighten(mesh, path);
  CurvePath path2;
  path2.hops.push_back({0, 0.8, +1});
  path2.hops.push_back({1, 0.2, +1});
  GeodesicRepresentative b = tighten(mesh, path2);
  CHECK(a.length == doctest::Approx(b.length).epsilon(1e-8));
}

TEST_CASE("single closed saddle connection on the torus is not a valid chain") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 1.5);
  const SaddleConnection* h = nullptr;
  for (const auto& c : conns)
    if (dist(c.holonomy, {1, 0}) < 1e-9) h = &c;
  REQUIRE(h);
  std::vector<ChainEdge> chain{{*h, true}};
  std::vector<JunctionReport> reports;
  CHECK(!validate_geodesic(mesh, chain, &reports));
  REQUIRE(reports.size() == 1);
  CHECK(!reports[0].ok);
  CHECK(std::min(reports[0].left, reports[0].right) == doctest::Approx(kPi / 2));
}

TEST_CASE("chains of parallel connections classify as constant direction") {
  HalfTranslationSurface s = load("stsquare3.json");
  TriMesh mesh(s);
  CylinderDecomposition dec = cylinders_in_direction(mesh, 0.0, 10.0);
  REQUIRE(!dec.cylinders.empty());
  const MaximalCylinder* wide = nullptr;
  for (const auto& c : dec.cylinders)
    if (c.boundary[0].size() + c.boundary[1].size() > 2) wide = &c;
  if (wide) {
    GeodesicRepresentative rep;
    for (const auto& leg : wide->boundary[0])
      rep.chain.push_back({leg.connection, leg.forward});
    CHECK(classify(rep) == CurveClass::ConstantDirectionChain);
  }
}

TEST_CASE("a chain using two crossing diagonals is not simple") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 3.0);
  for (size_t i = 0; i < conns.size(); ++i) {
    for (size_t j = i + 1; j < conns.size(); ++j) {
      double d = std::abs(direction_angle(conns[i].holonomy) -
                          direction_angle(conns[j].holonomy));
      d = std::min(d, kPi - d);
      if (d < 0.3) continue;
      if (conns[i].length < 1.5 || conns[j].length < 1.5) continue;
      GeodesicRepresentative rep;
      rep.chain.push_back({conns[i], true});
      rep.chain.push_back({conns[j], true});
      // transversal long diagonals of the octagon must cross
      if (!is_simple(mesh, rep)) {
        CHECK(true);
        return;
      }
    }
  }
  CHECK(false);
}

TEST_CASE("torus simple closed geodesics up to 2.3 are the four cylinder classes") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 2.3);
  CurveEnumeration en = enumerate_simple_closed_geodesics(mesh, 2.3, conns);
  CHECK(!en.budget_exceeded);
  REQUIRE(en.curves.size() == 4);
  std::vector<double> lens;
  for (const auto& rep : en.curves) {
    CHECK(rep.is_cylinder);
    lens.push_back(rep.length);
  }
  std::sort(lens.begin(), lens.end());
  CHECK(lens[0] == doctest::Approx(1.0));
  CHECK(lens[1] == doctest::Approx(1.0));
  CHECK(lens[2] == doctest::Approx(std::sqrt(2.0)));
  CHECK(lens[3] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("tiny cutoff yields no curves") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 0.9);
  CurveEnumeration en = enumerate_simple_closed_geodesics(mesh, 0.9, conns);
  CHECK(en.curves.empty());
}

TEST_CASE("octagon enumeration finds crooked chains by length 4") {
  HalfTranslationSurface s = load("octagon.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 4.0);
  CurveEnumeration en = enumerate_simple_closed_geodesics(mesh, 4.0, conns);
  CHECK(!en.budget_exceeded);
  int crooked = 0, cylinders = 0;
  for (const auto& rep : en.curves) {
    if (classify(rep) == CurveClass::Crooked) {
      ++crooked;
      CHECK(validate_geodesic(mesh, rep.chain));
      CHECK(is_simple(mesh, rep));
      CHECK(area(auxiliary_polygon(rep)) > 1e-12);
    }
    if (rep.is_cylinder) ++cylinders;
    CHECK(perimeter(auxiliary_polygon(rep)) ==
          doctest::Approx(2 * rep.length).epsilon(1e-9));
  }
  CHECK(crooked > 0);
  CHECK(cylinders > 0);
}

TEST_CASE("classification agrees with zonogon area on all enumerated curves") {
  HalfTranslationSurface s = load("stsquare3.json");
  TriMesh mesh(s);
  auto conns = enumerate_saddle_connections(mesh, 3.0);
  CurveEnumeration en = enumerate_simple_closed_geodesics(mesh, 3.0, conns);
  for (const auto& rep : en.curves) {
    bool crooked = classify(rep) == CurveClass::Crooked;
    double a = area(auxiliary_polygon(rep));
    CHECK(crooked == (a > 1e-12));
  }
}

TEST_CASE("tightening commutes with the action at fixed combinatorics") {
  HalfTranslationSurface s = load("torus.json");
  TriMesh mesh(s);
  CurvePath path = torus_path(1, 1);
  GeodesicRepresentative base = tighten(mesh, path);
  std::mt19937 rng(79);
  for (int it = 0; it < 5; ++it) {
    Mat2 m = random_sl2(rng, 2.0);
    HalfTranslationSurface t = s.applied(m);
    TriMesh tmesh(t);
    GeodesicRepresentative img = tighten(tmesh, path);
    auto base_mult = base.multiplicities();
    auto img_mult = img.multiplicities();
    REQUIRE(base_mult.size() == img_mult.size());
    for (const auto& [sc, mult] : base_mult) {
      Vec2 want = canonical_direction(m.apply(sc.holonomy * double(mult)));
      bool found = false;
      for (const auto& [sd, mult2] : img_mult)
        if (dist(canonical_direction(sd.holonomy * double(mult2)), want) <=
            1e-8 * std::max(1.0, norm(want)))
          found = true;
      CHECK(found);
    }
  }
}
