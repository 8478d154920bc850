#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncsr/poly.hpp"

namespace ncsr {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown by validation and construction entry points; carries a list of
/// human-readable violations.
class ProfileError : public std::runtime_error {
 public:
  explicit ProfileError(std::string what, std::vector<std::string> violations = {})
      : std::runtime_error(std::move(what)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct CriticalPoint {
  enum class Kind { kMinimum, kMaximum };
  double z = 0.0;
  double value = 0.0;
  Kind kind = Kind::kMinimum;
};

/// One branch of the sublevel-set forest of the height function. Member
/// intervals [z_min, z_max] satisfy z1 <= z_min < z2, z3 < z_max <= z4 with
/// the height strictly below its z_min value at interior points.
struct TopologyInterval {
  int id = 0;
  double z1 = 0.0, z2 = 0.0, z3 = 0.0, z4 = 0.0;
  /// Interior point at the z2 level for coalescence-born branches (the
  /// barrier location); unset for minimum-born branches.
  std::optional<double> z5;
  /// Level at which this branch is born (its minimum value or coalescence
  /// level) and at which it dies into the parent (+inf for the root).
  double birth = 0.0;
  double death = 0.0;
  /// Index of the parent branch in the forest (-1 for the root).
  int parent = -1;
  /// z-locations of the minima contained in this branch (diagnostics).
  std::vector<double> minima;

  bool unbounded() const { return parent < 0; }
};

/// Piecewise-polynomial C^1 height curve on a working window, extended beyond
/// it by quadratic continuation matching value and slope.
class ProfileCurve {
 public:
  struct Piece {
    double z_left;  // left edge of this piece's coverage
    Poly p;
  };

  /// Validates and constructs. Pieces are given with ascending breakpoints;
  /// the first piece also covers (-inf, pieces[1].z_left) inside the window
  /// and the window is [z_lo, z_hi] = [pieces.front().z_left, z_hi].
  /// Violations collected: non-ascending breakpoints, C^0/C^1 mismatches at
  /// interior breakpoints (relative tolerance 1e-10), degenerate window.
  static ProfileCurve make(std::vector<Piece> pieces, double z_hi);

  double z_lo() const { return z_lo_; }
  double z_hi() const { return z_hi_; }

  double rho(double z) const { return rho_k(z, 0); }
  double drho(double z) const { return rho_k(z, 1); }
  /// k-th derivative (k >= 0); beyond available orders returns 0.
  double rho_k(double z, int k) const;

  const std::vector<CriticalPoint>& critical_points() const { return crit_; }
  double global_min_value() const;

  /// Sublevel-set forest: one branch per minimum plus one per coalescence
  /// event, parents linked, root unbounded. Branches are sorted by (birth
  /// level, z2). Equal-valued maxima coalesce more than two children at once.
  const std::vector<TopologyInterval>& topology_intervals() const { return topo_; }

  /// Index of the branch an interval [z_min, z_max] belongs to, or -1.
  /// Matching uses tolerance `tol` on the defining inequalities.
  int locate_interval(double z_min, double z_max, double tol = 1e-9) const;

  /// Map sending each non-root branch to the branch its z1-level continues
  /// into: the parent branch (pi_T). Provided by TopologyInterval::parent.

  /// Connected components of the sublevel set {rho <= y} within the working
  /// window, as [left, right] pairs (used by surface sampling and tests).
  std::vector<std::pair<double, double>> level_components(double y) const;

  /// True when the curve has a single minimum and no other critical point.
  /// `why` (optional) receives the offending critical points otherwise.
  bool is_trivial(std::string* why = nullptr) const;

  /// Warning flag: trivial shape but vanishing curvature at the minimum.
  bool trivial_flat_minimum() const;

 private:
  double rho_raw(double z, int k) const;  // piecewise poly, no extension
  void compute_critical_points();
  void build_topology();

  std::vector<Piece> pieces_;
  double z_lo_ = 0.0, z_hi_ = 0.0;
  // Quadratic extensions q(z) = v + s*(z-edge) + (z-edge)^2 beyond the window.
  double ext_lo_v_ = 0.0, ext_lo_s_ = 0.0;
  double ext_hi_v_ = 0.0, ext_hi_s_ = 0.0;
  std::vector<CriticalPoint> crit_;
  std::vector<TopologyInterval> topo_;
};

/// Strictly monotone data of a single-well curve: the signed height root
/// tau and the level-interval left endpoint omega, with inverses. All four
/// are evaluated by bisection against the curve and memoized per argument.
class TrivialProfileData {
 public:
  explicit TrivialProfileData(const ProfileCurve& prof);

  double z0() const { return z0_; }
  double depth() const { return depth_; }

  /// Signed square root of (rho - depth): positive left of the minimum,
  /// strictly decreasing.
  double tau(double x) const;
  /// Inverse of tau.
  double tau_inv(double v) const;
  /// Left endpoint of the level interval of width x (x > 0); for x < 0 the
  /// right endpoint of the width |x| interval: omega(-w) = omega(w) + w.
  /// omega(0) = z0.
  double omega(double x) const;
  /// Signed width of the level interval through y: positive for y <= z0
  /// (left branch), negative right of the minimum.
  double omega_inv(double y) const;

  const ProfileCurve& curve() const { return *prof_; }

 private:
  const ProfileCurve* prof_;
  double z0_ = 0.0;
  double depth_ = 0.0;
};

/// One enumerated representation interval J_s.
struct RepInterval {
  int id = 0;        // canonical index (sorted by width, then z_min)
  int topo = 0;      // owning topology branch
  int n = 0;         // integer width: z_max - z_min = n * eps
  double z_min = 0.0;
  double z_max = 0.0;
  double level = 0.0;  // common endpoint height
  int parent = -1;     // id of the smallest strictly containing interval
  /// True for the first unbounded-chain interval when its level exceeds the
  /// enumeration ceiling (kept regardless; see reports).
  bool above_ceiling = false;
};

/// All intervals with integer width whose endpoints share a height level,
/// grouped by topology branch, capped at level y_max (the smallest interval
/// of the unbounded chain is always kept). Widths equal to a branch's birth
/// width are excluded; equal to its death width included (tolerance 1e-9).
std::vector<RepInterval> enumerate_rep_intervals(const ProfileCurve& prof,
                                                 double eps, double y_max);

/// Smallest positive lattice spacing margin: min over branches of
/// (death width - birth width); divided by the branch count for the
/// remove compromise.
double epsilon0(const ProfileCurve& prof, const std::string& compromise);

/// Point cloud of the surface of rotation at radius parameter R:
/// x1 = sqrt(rho(R) - rho(z)) cos(phi), x2 = ... sin(phi), x3 = z over
/// {rho(z) <= rho(R)}. Rows: (x1, x2, x3, component index).
struct SurfacePoint {
  double x1, x2, x3;
  int component;
};
std::vector<SurfacePoint> surface_points(const ProfileCurve& prof, double R,
                                         int n_z, int n_phi);

}  // namespace ncsr
