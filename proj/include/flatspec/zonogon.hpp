#pragma once

#include <utility>
#include <vector>

#include "flatspec/vec.hpp"

namespace flatspec {

// Centrally symmetric convex polygon given by direction-sorted generators.
// Generators are canonicalized to direction angle in [0, pi), sorted
// ascending, with parallel generators merged. The boundary runs from -p
// through p and back, where p = sum(w_i) / 2.
struct Zonogon {
  std::vector<Vec2> generators;
  std::vector<Vec2> vertices;  // CCW boundary; 2 endpoints if degenerate
  bool degenerate = false;     // all generators parallel

  double scale() const;  // r_plus, used for relative tolerances
};

// Piecewise-sinusoidal width function w(theta) = 2 h(u_theta) on [0, pi).
// On each arc the width is <d, u_theta> for a fixed vertex difference d.
struct WidthProfile {
  struct Arc {
    double lo = 0, hi = 0;  // theta interval
    Vec2 d;                 // width(theta) = dot(d, (cos theta, sin theta))
  };
  std::vector<Arc> arcs;

  double eval(double theta) const;
  double integral() const;  // closed form per arc
};

Zonogon build_zonogon(std::vector<Vec2> vectors);

double area(const Zonogon& z);       // sum over pairs |w_i ^ w_j|
double perimeter(const Zonogon& z);  // 2 sum |w_i|; degenerate included
double support(const Zonogon& z, Vec2 u);
double width(const Zonogon& z, double theta);
WidthProfile width_profile(const Zonogon& z);

double hausdorff(const Zonogon& a, const Zonogon& b);

std::pair<double, double> radii(const Zonogon& z);  // (r_minus, r_plus)
double eccentricity(const Zonogon& z);              // +inf iff degenerate

Zonogon apply_sl2(const Zonogon& z, const Mat2& m);

}  // namespace flatspec
