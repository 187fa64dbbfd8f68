#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rotopump/constants.hpp"

namespace rotopump {

namespace detail {

template <class F>
double simpson(F&& f, double a, double fa, double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0) throw accuracy_error("adaptive quadrature: recursion limit reached");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson on [a, b] with absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 60) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = detail::simpson(f, a, fa, b, fb, m, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole,
                                      tol > 0 ? tol : 1e-300, max_depth);
}

/// Integrate across explicit breakpoints; each panel gets an absolute
/// tolerance of rel_tol times a first-pass estimate of the total.
template <class F>
double integrate_with_breakpoints(F&& f, const std::vector<double>& pts, double rel_tol) {
  double rough = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double a = pts[i], b = pts[i + 1];
    rough += std::abs(detail::simpson(f, a, f(a), b, f(b), 0.5 * (a + b), f(0.5 * (a + b))));
  }
  double total = 0.0;
  double tol = rough > 0 ? rel_tol * rough : 1e-300;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    total += adaptive_simpson(f, pts[i], pts[i + 1], tol / double(pts.size() - 1));
  return total;
}

}  // namespace rotopump
