#include "ncsr/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncsr {

int Poly::degree() const {
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
    if (c[static_cast<size_t>(i)] != 0.0) return i;
  }
  return -1;
}

double Poly::eval(double z) const {
  double acc = 0.0;
  for (size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
  return acc;
}

Poly Poly::deriv() const {
  Poly d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (size_t i = 1; i < c.size(); ++i) d.c[i - 1] = c[i] * static_cast<double>(i);
  return d;
}

Poly Poly::shifted(double shift) const {
  // Binomial expansion: sum_i c_i (z + s)^i.
  Poly out;
  out.c.assign(c.size(), 0.0);
  for (size_t i = 0; i < c.size(); ++i) {
    // Expand (z + s)^i.
    std::vector<double> binom(i + 1, 0.0);
    binom[0] = 1.0;
    for (size_t n = 1; n <= i; ++n) {
      for (size_t k = n; k-- > 0;) {
        binom[k + 1] += binom[k];
      }
    }
    double spow = 1.0;
    for (size_t k = 0; k <= i; ++k) {
      // Coefficient of z^(i-k): C(i,k) s^k.
      out.c[i - k] += c[i] * binom[k] * spow;
      spow *= shift;
    }
  }
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r;
  r.c.assign(std::max(c.size(), o.c.size()), 0.0);
  for (size_t i = 0; i < c.size(); ++i) r.c[i] += c[i];
  for (size_t i = 0; i < o.c.size(); ++i) r.c[i] += o.c[i];
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  return *this + o.scaled(-1.0);
}

Poly Poly::scaled(double k) const {
  Poly r = *this;
  for (double& v : r.c) v *= k;
  return r;
}

std::string Poly::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    if (!first) os << " + ";
    os << c[i];
    if (i >= 1) os << "*z";
    if (i >= 2) os << "^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double abs_tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    // No sign change: return the endpoint closer to zero (caller guards).
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo < abs_tol + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) {
      return mid;
    }
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

void roots_rec(const Poly& p, double lo, double hi, std::vector<double>& out) {
  int deg = p.degree();
  if (deg <= 0) return;
  if (deg == 1) {
    double r = -p.c[0] / p.c[1];
    if (r >= lo && r <= hi) out.push_back(r);
    return;
  }
  if (deg == 2) {
    double a = p.c[2], b = p.c[1], cc = p.c[0];
    double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) return;
    double sq = std::sqrt(disc);
    // Numerically stable quadratic roots.
    double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    double r1 = q / a;
    double r2 = (q != 0.0) ? cc / q : r1;
    for (double r : {std::min(r1, r2), std::max(r1, r2)}) {
      if (r >= lo && r <= hi) out.push_back(r);
    }
    return;
  }
  // Partition [lo, hi] into monotone segments at the roots of p'.
  std::vector<double> crit;
  roots_rec(p.deriv(), lo, hi, crit);
  std::sort(crit.begin(), crit.end());
  std::vector<double> knots;
  knots.push_back(lo);
  for (double cpt : crit) {
    if (cpt > knots.back() + 1e-300 && cpt < hi) knots.push_back(cpt);
  }
  knots.push_back(hi);

  double scale = 0.0;
  for (double v : p.c) scale = std::max(scale, std::abs(v));
  double zmax = std::max({1.0, std::abs(lo), std::abs(hi)});
  double val_tol = 1e-11 * scale * std::pow(zmax, deg);

  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    double a = knots[i], b = knots[i + 1];
    double fa = p.eval(a), fb = p.eval(b);
    if (std::abs(fa) <= val_tol) out.push_back(a);
    if ((fa > 0.0) != (fb > 0.0) && std::abs(fa) > val_tol && std::abs(fb) > val_tol) {
      double r = bisect([&](double z) { return p.eval(z); }, a, b, 1e-15);
      out.push_back(r);
    }
  }
  if (std::abs(p.eval(hi)) <= val_tol) out.push_back(hi);
}

}  // namespace

std::vector<double> real_roots_in(const Poly& p, double lo, double hi) {
  std::vector<double> out;
  roots_rec(p, lo, hi, out);
  std::sort(out.begin(), out.end());
  // Deduplicate near-coincident roots.
  std::vector<double> dedup;
  double span = std::max(1.0, hi - lo);
  for (double r : out) {
    if (dedup.empty() || r - dedup.back() > 1e-9 * span) {
      dedup.push_back(r);
    }
  }
  return dedup;
}

}  // namespace ncsr
