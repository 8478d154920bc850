#pragma once

// Shared fixture curves used across the test suites.

#include <cmath>
#include <vector>

#include "ncsr/profile.hpp"

namespace ncsr_test {

/// rho(z) = z^2 on [-hw, hw].
inline ncsr::ProfileCurve parabola(double hw = 6.0) {
  return ncsr::ProfileCurve::make({{-hw, ncsr::Poly({0.0, 0.0, 1.0})}}, hw);
}

/// rho(z) = z^4 on [-hw, hw].
inline ncsr::ProfileCurve quartic(double hw = 6.0) {
  return ncsr::ProfileCurve::make({{-hw, ncsr::Poly({0.0, 0.0, 0.0, 0.0, 1.0})}}, hw);
}

/// rho(z) = z^4 + z^2 on [-hw, hw] (single well, non-flat minimum).
inline ncsr::ProfileCurve quartic_plus_square(double hw = 4.0) {
  return ncsr::ProfileCurve::make({{-hw, ncsr::Poly({0.0, 0.0, 1.0, 0.0, 1.0})}}, hw);
}

/// rho(z) = (z^2 - 1)^2 on [-hw, hw]: symmetric double well, barrier 1 at z=0.
inline ncsr::ProfileCurve double_well(double hw = 2.5) {
  return ncsr::ProfileCurve::make({{-hw, ncsr::Poly({1.0, 0.0, -2.0, 0.0, 1.0})}}, hw);
}

/// Asymmetric single-well piecewise quartic: z^4 + z^2 left of 0, steeper to
/// the right. C^1 at the joint (value 0, slope 0).
inline ncsr::ProfileCurve asym_single_well(double hw = 4.0) {
  return ncsr::ProfileCurve::make(
      {{-hw, ncsr::Poly({0.0, 0.0, 1.0, 0.0, 1.0})},
       {0.0, ncsr::Poly({0.0, 0.0, 2.0, 0.5, 1.0})}},
      hw);
}

/// Asymmetric double well assembled from three parabolic pieces, C^1 at the
/// breakpoints +-0.4. Barrier value 1 at z=0; left minimum (-0.72, 0.712),
/// right minimum (361/340, 489/850). The outer slopes cross the barrier level
/// exactly at z=-1.2 (left) and z=1.9 (right), so the widest interval widths
/// per well are W_L = 1.2 and W_R = 1.9 (sum 3.1).
inline ncsr::ProfileCurve asym_double_well(double hw = 6.0) {
  ncsr::Poly left({34.0 / 25.0, 9.0 / 5.0, 5.0 / 4.0});
  ncsr::Poly barrier({1.0, 0.0, -1.0});
  ncsr::Poly right({7069.0 / 5625.0, -1444.0 / 1125.0, 136.0 / 225.0});
  return ncsr::ProfileCurve::make(
      {{-hw, left}, {-0.4, barrier}, {0.4, right}}, hw);
}

/// Triple well: three minima, two distinct barrier levels -> five branches.
/// Built from C^1 parabolic arches between the given extrema.
inline ncsr::ProfileCurve triple_well(double hw_margin = 3.0) {
  // Extrema: min(-3, 0.0), max(-1.5, 1.0), min(0, 0.3), max(1.5, 2.0), min(3, 0.6).
  struct Ext {
    double z, v;
  };
  std::vector<Ext> ext = {{-3.0, 0.0}, {-1.5, 1.0}, {0.0, 0.3}, {1.5, 2.0}, {3.0, 0.6}};
  std::vector<ncsr::ProfileCurve::Piece> pieces;
  double z_lo = ext.front().z - hw_margin;
  // Leading outer arch: upward parabola at the first minimum.
  pieces.push_back({z_lo, ncsr::Poly({ext[0].v, 0.0, 1.0}).shifted(-ext[0].z)});
  for (size_t i = 0; i + 1 < ext.size(); ++i) {
    double h = 0.5 * (ext[i + 1].z - ext[i].z);
    double a = std::abs(ext[i + 1].v - ext[i].v) / (2.0 * h * h);
    double mid = 0.5 * (ext[i].z + ext[i + 1].z);
    // Arch half on [ext[i].z, mid] centered at ext[i], then half on
    // [mid, ext[i+1].z] centered at ext[i+1] with opposite curvature.
    double sign_i = 1.0;   // parabola opens up at minima, down at maxima
    double sign_j = -1.0;
    if (ext[i].v > ext[i + 1].v) {
      sign_i = -1.0;
      sign_j = 1.0;
    }
    pieces.push_back({ext[i].z, ncsr::Poly({ext[i].v, 0.0, sign_i * a}).shifted(-ext[i].z)});
    pieces.push_back({mid, ncsr::Poly({ext[i + 1].v, 0.0, sign_j * a}).shifted(-ext[i + 1].z)});
  }
  // The final piece (centered at the last minimum, opening up) continues to
  // the window edge.
  return ncsr::ProfileCurve::make(std::move(pieces), ext.back().z + hw_margin);
}

}  // namespace ncsr_test
