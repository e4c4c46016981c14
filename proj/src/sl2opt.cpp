#include "flatspec/sl2opt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "flatspec/errors.hpp"

namespace flatspec {

double svd_stretch(const Mat2& m) {
  if (std::abs(m.det() - 1.0) > 1e-12)
    throw Error(ErrorCode::NotUnimodular, "determinant differs from 1");
  // Eigenvalues of M^T M have product det^2 = 1 and sum = trace(M^T M).
  double t = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
  double lam2 = 0.5 * (t + std::sqrt(std::max(0.0, t * t - 4.0)));
  return std::sqrt(std::max(1.0, lam2));
}

namespace {

// Symmetric 2x2 matrix helpers for the moment-based balancing step.
struct Sym2 {
  double xx = 0, xy = 0, yy = 0;
};

// S^{-1/2} normalized to determinant one; S must be positive definite.
Mat2 inverse_sqrt_unimodular(const Sym2& s) {
  double tr = s.xx + s.yy;
  double det = s.xx * s.yy - s.xy * s.xy;
  double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  double l1 = tr / 2.0 + disc;
  double l2 = tr / 2.0 - disc;
  Vec2 e1;
  if (std::abs(s.xy) > 1e-300) {
    e1 = normalized({l1 - s.yy, s.xy});
  } else {
    e1 = (s.xx >= s.yy) ? Vec2{1, 0} : Vec2{0, 1};
  }
  Vec2 e2 = rot90(e1);
  // R diag(a1, a2) R^T with a_i = l_i^{-1/2}, then scale to det 1.
  double a1 = 1.0 / std::sqrt(l1), a2 = 1.0 / std::sqrt(l2);
  double sc = 1.0 / std::sqrt(a1 * a2);
  a1 *= sc;
  a2 *= sc;
  Mat2 m;
  m.a = a1 * e1.x * e1.x + a2 * e2.x * e2.x;
  m.b = a1 * e1.x * e1.y + a2 * e2.x * e2.y;
  m.c = m.b;
  m.d = a1 * e1.y * e1.y + a2 * e2.y * e2.y;
  return m;
}

}  // namespace

Mat2 balance(const Zonogon& z) {
  if (z.degenerate) throw Error(ErrorCode::Degenerate, "cannot balance a degenerate zonogon");

  Sym2 m;
  for (const Vec2& w : z.generators) {
    m.xx += w.x * w.x;
    m.xy += w.x * w.y;
    m.yy += w.y * w.y;
  }
  Mat2 a = inverse_sqrt_unimodular(m);
  Zonogon cur = apply_sl2(z, a);
  double best_ecc = eccentricity(cur);
  Mat2 best = a;

  // Refinement: re-balance on the vertex second moment, which tracks the
  // polygon shape rather than the generator lengths.
  for (int it = 0; it < 50 && best_ecc > 2.0 + 1e-9; ++it) {
    Sym2 mv;
    for (const Vec2& v : cur.vertices) {
      mv.xx += v.x * v.x;
      mv.xy += v.x * v.y;
      mv.yy += v.y * v.y;
    }
    Mat2 step = inverse_sqrt_unimodular(mv);
    a = step * a;
    cur = apply_sl2(z, a);
    double e = eccentricity(cur);
    if (e < best_ecc) {
      best_ecc = e;
      best = a;
    }
  }
  if (best_ecc > 2.0 + 1e-9)
    throw Error(ErrorCode::EccNotBalanced,
                "best eccentricity " + std::to_string(best_ecc));
  return best;
}

namespace {

struct Objective {
  // f(x, y) = sum_i sqrt(e^x a_i + 2 y b_i + (1 + y^2) e^{-x} c_i)
  // where Q = [[e^x, y], [y, (1+y^2) e^{-x}]] has determinant one.
  std::vector<double> a, b, c;

  explicit Objective(const Zonogon& z) {
    for (const Vec2& w : z.generators) {
      a.push_back(w.x * w.x);
      b.push_back(w.x * w.y);
      c.push_back(w.y * w.y);
    }
  }

  double value(double x, double y) const {
    double ex = std::exp(x), emx = std::exp(-x), yy = 1 + y * y;
    double f = 0;
    for (size_t i = 0; i < a.size(); ++i)
      f += std::sqrt(ex * a[i] + 2 * y * b[i] + yy * emx * c[i]);
    return f;
  }

  void derivatives(double x, double y, double& f, double& gx, double& gy,
                   double& hxx, double& hxy, double& hyy) const {
    double ex = std::exp(x), emx = std::exp(-x), yy = 1 + y * y;
    f = gx = gy = hxx = hxy = hyy = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      double s = ex * a[i] + 2 * y * b[i] + yy * emx * c[i];
      double r = std::sqrt(s);
      double sx = ex * a[i] - yy * emx * c[i];
      double sy = 2 * b[i] + 2 * y * emx * c[i];
      double sxx = ex * a[i] + yy * emx * c[i];
      double sxy = -2 * y * emx * c[i];
      double syy = 2 * emx * c[i];
      f += r;
      gx += sx / (2 * r);
      gy += sy / (2 * r);
      hxx += sxx / (2 * r) - sx * sx / (4 * s * r);
      hxy += sxy / (2 * r) - sx * sy / (4 * s * r);
      hyy += syy / (2 * r) - sy * sy / (4 * s * r);
    }
  }
};

Mat2 symmetric_sqrt(double q11, double q12, double q22) {
  // Positive square root of the positive definite [[q11,q12],[q12,q22]].
  double tr = q11 + q22;
  double det = q11 * q22 - q12 * q12;
  double s = std::sqrt(det);
  double t = std::sqrt(tr + 2 * s);
  return {(q11 + s) / t, q12 / t, q12 / t, (q22 + s) / t};
}

}  // namespace

InfimalLengthResult infimal_length(const Zonogon& z, double tol) {
  InfimalLengthResult res;
  double ar = area(z);
  res.certified_bounds = {std::sqrt(kPi * ar), std::sqrt(8.0 * ar)};
  if (z.degenerate) {
    // Infimum 0, not attained: stretching along the segment direction.
    res.value = 0.0;
    return res;
  }

  Mat2 a0 = balance(z);
  Mat2 q0 = a0.transposed() * a0;
  double x = std::log(q0.a);
  double y = q0.b;

  Objective obj(z);
  double f = obj.value(x, y);
  const int max_iter = 100000;
  int it = 0;
  for (; it < max_iter; ++it) {
    double fv, gx, gy, hxx, hxy, hyy;
    obj.derivatives(x, y, fv, gx, gy, hxx, hxy, hyy);

    // Newton step when the Hessian is positive definite, else gradient.
    double dx, dy;
    double det = hxx * hyy - hxy * hxy;
    if (det > 0 && hxx > 0) {
      dx = -(hyy * gx - hxy * gy) / det;
      dy = -(hxx * gy - hxy * gx) / det;
    } else {
      dx = -gx;
      dy = -gy;
    }

    double step = 1.0;
    double fn = obj.value(x + step * dx, y + step * dy);
    int bt = 0;
    while (fn > fv - 1e-4 * step * (-(gx * dx + gy * dy)) && bt < 60) {
      step *= 0.5;
      fn = obj.value(x + step * dx, y + step * dy);
      ++bt;
    }
    if (bt >= 60 || !(fn < fv)) break;  // no further progress at float precision
    x += step * dx;
    y += step * dy;
    double improvement = (fv - fn) / std::max(fv, 1e-300);
    f = fn;
    if (improvement < tol && std::hypot(gx, gy) < 1e-9 * std::max(1.0, f)) break;
  }
  if (it >= max_iter)
    throw Error(ErrorCode::NoConvergence, "infimal length did not converge");

  res.value = f;
  res.iterations = it;
  double ex = std::exp(x);
  res.minimizer = symmetric_sqrt(ex, y, (1 + y * y) / ex);
  return res;
}

EccGrowthReport ecc_growth_check(const Zonogon& z, const Mat2& probe) {
  if (z.degenerate)
    throw Error(ErrorCode::Degenerate, "eccentricity growth needs a non-degenerate zonogon");
  EccGrowthReport rep;
  rep.lambda = svd_stretch(probe);
  auto min = infimal_length(z).minimizer.value();
  Zonogon zmin = apply_sl2(z, min);
  rep.ecc_at_minimizer = eccentricity(zmin);
  rep.ecc_after = eccentricity(apply_sl2(zmin, probe));
  rep.ratio = rep.ecc_after / (rep.lambda * rep.lambda);
  return rep;
}

}  // namespace flatspec
