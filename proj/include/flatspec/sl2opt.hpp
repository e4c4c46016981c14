#pragma once

#include <array>
#include <optional>

#include "flatspec/vec.hpp"
#include "flatspec/zonogon.hpp"

namespace flatspec {

// Largest singular value of a determinant-one matrix.
double svd_stretch(const Mat2& m);

// A determinant-one matrix bringing the zonogon to eccentricity <= 2.
Mat2 balance(const Zonogon& z);

struct InfimalLengthResult {
  double value = 0;
  std::optional<Mat2> minimizer;  // absent for degenerate zonogons
  int iterations = 0;
  std::array<double, 2> certified_bounds{0, 0};  // [sqrt(pi A), sqrt(8 A)]
};

// Minimizes sum |A w_i| over A in SL(2,R). The objective depends only on
// Q = A^T A, a two-parameter problem solved by damped Newton descent from
// the balanced starting point.
InfimalLengthResult infimal_length(const Zonogon& z, double tol = 1e-12);

struct EccGrowthReport {
  double lambda = 1;         // stretch factor of the probe matrix
  double ecc_at_minimizer = 1;
  double ecc_after = 1;      // ecc(A * Z_min)
  double ratio = 1;          // ecc_after / lambda^2
};

EccGrowthReport ecc_growth_check(const Zonogon& z, const Mat2& probe);

}  // namespace flatspec
