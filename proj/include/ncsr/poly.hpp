#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ncsr {

/// Dense univariate polynomial with real coefficients in ascending power order.
struct Poly {
  std::vector<double> c;

  Poly() = default;
  explicit Poly(std::vector<double> coeffs) : c(std::move(coeffs)) {}

  /// Degree after ignoring trailing coefficients that are exactly zero; -1 for
  /// the zero polynomial.
  int degree() const;

  double eval(double z) const;
  Poly deriv() const;

  /// p(z + shift) expanded in z.
  Poly shifted(double shift) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly scaled(double k) const;

  std::string to_string() const;
};

/// All real roots of p in the closed interval [lo, hi], ascending and
/// deduplicated. Roots are located by recursive monotone-segment bisection
/// (segment boundaries at the roots of p'), so multiple roots where p touches
/// zero without a sign change are found as well.
std::vector<double> real_roots_in(const Poly& p, double lo, double hi);

/// Bisection for a continuous f with f(lo) and f(hi) of opposite sign (or
/// zero). Refines until the bracket width drops below abs_tol (plus a relative
/// floor near machine precision). Returns the midpoint of the final bracket.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double abs_tol = 1e-14);

}  // namespace ncsr
