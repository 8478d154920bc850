#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common_profiles.hpp"
#include "ncsr/profile.hpp"

using namespace ncsr;
using namespace ncsr_test;

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

TEST_CASE("polynomial roots: monotone-segment bisection finds multiple roots") {
  // (z-1)^2 (z+2): roots -2 and a double root at 1.
  Poly p({-2.0, -3.0, 0.0, 1.0});
  p = Poly({2.0, -3.0, 0.0, 1.0});  // z^3 - 3z + 2 = (z-1)^2 (z+2)
  auto r = real_roots_in(p, -5.0, 5.0);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("validation: breakpoints, continuity, degenerate shapes") {
  CHECK_THROWS_AS(ProfileCurve::make({{0.0, Poly({0, 0, 1})}, {-1.0, Poly({0, 0, 1})}}, 2.0),
                  ProfileError);
  // C^0 break at z=0.
  CHECK_THROWS_AS(ProfileCurve::make({{-2.0, Poly({0, 0, 1})}, {0.0, Poly({1, 0, 1})}}, 2.0),
                  ProfileError);
  // C^1 break at z=0 (values agree, slopes don't).
  CHECK_THROWS_AS(ProfileCurve::make({{-2.0, Poly({0, 0, 1})}, {0.0, Poly({0, 1, 1})}}, 2.0),
                  ProfileError);
  // Monotone curve: no minimum in the window.
  CHECK_THROWS_AS(ProfileCurve::make({{0.0, Poly({0, 1})}}, 2.0), ProfileError);
  // Violation list carries the mismatch location.
  try {
    ProfileCurve::make({{-2.0, Poly({0, 0, 1})}, {0.0, Poly({1, 0, 1})}}, 2.0);
    CHECK(false);
  } catch (const ProfileError& e) {
    REQUIRE(e.violations().size() >= 1);
    CHECK(e.violations()[0].find("z=0") != std::string::npos);
  }
}

TEST_CASE("critical points: z^2 and (z^2-1)^2") {
  auto p1 = parabola();
  REQUIRE(p1.critical_points().size() == 1);
  CHECK(p1.critical_points()[0].z == doctest::Approx(0.0));
  CHECK(p1.critical_points()[0].kind == CriticalPoint::Kind::kMinimum);
  CHECK(p1.is_trivial());
  CHECK_FALSE(p1.trivial_flat_minimum());

  auto p2 = double_well();
  REQUIRE(p2.critical_points().size() == 3);
  CHECK(p2.critical_points()[0].z == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(p2.critical_points()[1].z == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(p2.critical_points()[1].kind == CriticalPoint::Kind::kMaximum);
  CHECK(p2.critical_points()[2].value == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_FALSE(p2.is_trivial());
  std::string why;
  p2.is_trivial(&why);
  CHECK(why.find("max") != std::string::npos);

  CHECK(quartic().is_trivial());
  CHECK(quartic().trivial_flat_minimum());
  CHECK(asym_single_well().is_trivial());
}

TEST_CASE("topology forest: single well") {
  auto p = parabola();
  const auto& topo = p.topology_intervals();
  REQUIRE(topo.size() == 1);
  CHECK(topo[0].z2 == doctest::Approx(0.0));
  CHECK(topo[0].z3 == doctest::Approx(0.0));
  CHECK(topo[0].parent == -1);
  CHECK(topo[0].unbounded());
  CHECK(topo[0].birth == doctest::Approx(0.0));
  CHECK(topo[0].death == kInf);
}

TEST_CASE("topology forest: symmetric double well") {
  auto p = double_well();
  const auto& topo = p.topology_intervals();
  REQUIRE(topo.size() == 3);
  // Sorted by (birth, z2): left well, right well, root.
  const auto& L = topo[0];
  const auto& Rw = topo[1];
  const auto& root = topo[2];
  CHECK(L.z1 == doctest::Approx(-kSqrt2).epsilon(1e-9));
  CHECK(L.z2 == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(L.z3 == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(L.z4 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(L.birth == doctest::Approx(0.0));
  CHECK(L.death == doctest::Approx(1.0));
  CHECK(L.parent == root.id);
  CHECK(Rw.z1 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(Rw.z4 == doctest::Approx(kSqrt2).epsilon(1e-9));
  CHECK(Rw.parent == root.id);
  CHECK(root.z1 == -kInf);
  CHECK(root.z2 == doctest::Approx(-kSqrt2).epsilon(1e-9));
  CHECK(root.z3 == doctest::Approx(kSqrt2).epsilon(1e-9));
  CHECK(root.z4 == kInf);
  CHECK(root.birth == doctest::Approx(1.0));
  REQUIRE(root.z5.has_value());
  CHECK(*root.z5 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("topology forest: triple well has five branches with distinct barriers") {
  auto p = triple_well();
  const auto& topo = p.topology_intervals();
  REQUIRE(topo.size() == 5);
  int unbounded = 0, merge_born = 0;
  for (const auto& t : topo) {
    if (t.unbounded()) ++unbounded;
    if (t.z5.has_value()) ++merge_born;
  }
  CHECK(unbounded == 1);
  CHECK(merge_born == 2);
  // The low barrier (value 1.0 at z=-1.5) merges the two left wells first.
  const auto& mid = topo[3];
  CHECK(mid.birth == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mid.death == doctest::Approx(2.0).epsilon(1e-9));
  REQUIRE(mid.z5.has_value());
  CHECK(*mid.z5 == doctest::Approx(-1.5).epsilon(1e-9));
}

TEST_CASE("topology forest: equal-valued barriers coalesce N-ary") {
  // Symmetric triple well: minima at -2, 0, 2 (value 0), both barriers at
  // value 1. The two coalescences happen at the same level, so the root has
  // three children and the branch count is 4 (< #minima + #maxima = 5).
  auto arch = [](double zv, double v, double a) {
    return Poly({v, 0.0, a}).shifted(-zv);
  };
  std::vector<ProfileCurve::Piece> pieces = {
      {-5.0, arch(-2.0, 0.0, 2.0)}, {-1.5, arch(-1.0, 1.0, -2.0)},
      {-0.5, arch(0.0, 0.0, 2.0)},  {0.5, arch(1.0, 1.0, -2.0)},
      {1.5, arch(2.0, 0.0, 2.0)},
  };
  auto p = ProfileCurve::make(std::move(pieces), 5.0);
  const auto& topo = p.topology_intervals();
  REQUIRE(topo.size() == 4);
  const auto& root = topo[3];
  CHECK(root.unbounded());
  CHECK(root.birth == doctest::Approx(1.0).epsilon(1e-9));
  int root_children = 0;
  for (const auto& t : topo) {
    if (t.parent == root.id) ++root_children;
  }
  CHECK(root_children == 3);
}

TEST_CASE("level components") {
  auto p = double_well();
  auto c1 = p.level_components(0.5);
  REQUIRE(c1.size() == 2);
  CHECK(c1[0].first == doctest::Approx(-std::sqrt(1.0 + std::sqrt(0.5))).epsilon(1e-9));
  CHECK(c1[0].second == doctest::Approx(-std::sqrt(1.0 - std::sqrt(0.5))).epsilon(1e-9));
  auto c2 = p.level_components(1.5);
  REQUIRE(c2.size() == 1);
  auto c3 = p.level_components(1.0);  // exactly the barrier: one touching component
  REQUIRE(c3.size() == 1);
  CHECK(c3[0].first == doctest::Approx(-kSqrt2).epsilon(1e-9));
  CHECK(c3[0].second == doctest::Approx(kSqrt2).epsilon(1e-9));
}

TEST_CASE("trivial data: z^2 closed forms") {
  auto p = parabola();
  TrivialProfileData tv(p);
  CHECK(tv.z0() == doctest::Approx(0.0));
  CHECK(tv.tau(-2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tv.tau(2.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(tv.tau_inv(1.5) == doctest::Approx(-1.5).epsilon(1e-10));
  CHECK(tv.omega(1.0) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(tv.omega(-1.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(tv.omega_inv(-0.7) == doctest::Approx(1.4).epsilon(1e-10));
  CHECK(tv.omega_inv(0.7) == doctest::Approx(-1.4).epsilon(1e-10));
}

TEST_CASE("trivial data: z^4 and identities") {
  auto p = quartic();
  TrivialProfileData tv(p);
  CHECK(tv.omega(1.0) == doctest::Approx(-0.5).epsilon(1e-10));

  auto asym = asym_single_well();
  TrivialProfileData ta(asym);
  for (double x : {0.15, 0.6, 1.3, 2.2}) {
    double w = ta.omega(x);
    // Level interval property: both endpoints share the height.
    CHECK(ta.tau(w) + ta.tau(w + x) == doctest::Approx(0.0).epsilon(1e-10));
    // omega_inv inverts omega.
    CHECK(ta.omega_inv(w) == doctest::Approx(x).epsilon(1e-9));
    CHECK(ta.omega_inv(w + x) == doctest::Approx(-x).epsilon(1e-9));
    // tau_inv inverts tau.
    CHECK(ta.tau_inv(ta.tau(w)) == doctest::Approx(w).epsilon(1e-9));
  }
  // Positive left of the minimum, decreasing.
  CHECK(ta.tau(-1.0) > ta.tau(-0.5));
  CHECK(ta.tau(-0.5) > ta.tau(0.5));
}

TEST_CASE("interval enumeration: single well ladder") {
  auto p = parabola();
  auto iv = enumerate_rep_intervals(p, 0.5, 2.0);
  // Widths 0.5n at level (n/4)^2 <= 2 -> n = 1..5.
  REQUIRE(iv.size() == 5);
  for (int n = 1; n <= 5; ++n) {
    const auto& s = iv[static_cast<size_t>(n - 1)];
    CHECK(s.n == n);
    CHECK(s.z_min == doctest::Approx(-0.25 * n).epsilon(1e-10));
    CHECK(s.z_max == doctest::Approx(0.25 * n).epsilon(1e-10));
    CHECK(s.level == doctest::Approx(0.0625 * n * n).epsilon(1e-9));
    CHECK(s.parent == (n < 5 ? iv[static_cast<size_t>(n)].id : -1));
    CHECK_FALSE(s.above_ceiling);
  }
}

TEST_CASE("interval enumeration: symmetric double well at eps=0.4") {
  auto p = double_well();
  auto iv = enumerate_rep_intervals(p, 0.4, 2.0);
  // Three intervals per well (widths <= 1.2 < sqrt(2)), one kept root interval
  // above the ceiling (width 3.2 at level ~2.43).
  REQUIRE(iv.size() == 7);
  int wells = 0, roots = 0;
  const RepInterval* left1 = nullptr;
  const RepInterval* root8 = nullptr;
  for (const auto& s : iv) {
    if (p.topology_intervals()[static_cast<size_t>(s.topo)].unbounded()) {
      ++roots;
      root8 = &s;
    } else {
      ++wells;
    }
    if (s.n == 1 && s.z_min < -0.9) left1 = &s;
  }
  CHECK(wells == 6);
  CHECK(roots == 1);
  REQUIRE(left1 != nullptr);
  CHECK(left1->z_min == doctest::Approx(-1.179797).epsilon(1e-5));
  CHECK(left1->z_max == doctest::Approx(-0.779797).epsilon(1e-5));
  CHECK(left1->level == doctest::Approx(0.1536).epsilon(1e-6));
  REQUIRE(root8 != nullptr);
  CHECK(root8->n == 8);
  CHECK(root8->above_ceiling);
  CHECK(root8->level == doctest::Approx(2.4336).epsilon(1e-6));
  // Parent chains: left n=3 interval's parent is the root interval.
  for (const auto& s : iv) {
    if (s.n == 3 && s.z_min < -0.5) CHECK(s.parent == root8->id);
    if (s.n == 1 && s.z_min < -0.9) {
      REQUIRE(s.parent >= 0);
      CHECK(iv[static_cast<size_t>(s.parent)].n == 2);
    }
  }
}

TEST_CASE("interval enumeration: wide spacing leaves wells empty") {
  auto p = double_well();
  auto iv = enumerate_rep_intervals(p, 2.0, 2.0);
  for (const auto& s : iv) {
    CHECK(p.topology_intervals()[static_cast<size_t>(s.topo)].unbounded());
  }
  REQUIRE(iv.size() >= 1);
  CHECK(iv[0].n == 2);  // 2*2.0 = 4.0 > 2*sqrt(2); width 2.0 is excluded
  CHECK(iv[0].above_ceiling);
}

TEST_CASE("interval enumeration: birth-width interval is excluded") {
  // At eps = sqrt(2)/2 the well chains end exactly at the barrier-level
  // interval (width sqrt(2), included), while the root chain starts strictly
  // above width 2*sqrt(2) (width exactly 2*sqrt(2) excluded).
  auto p = double_well();
  double eps = kSqrt2 / 2.0;
  auto iv = enumerate_rep_intervals(p, eps, 10.0);
  int well_max_n = 0;
  int root_min_n = 1 << 20;
  for (const auto& s : iv) {
    if (p.topology_intervals()[static_cast<size_t>(s.topo)].unbounded()) {
      root_min_n = std::min(root_min_n, s.n);
    } else {
      well_max_n = std::max(well_max_n, s.n);
    }
  }
  CHECK(well_max_n == 2);   // width sqrt(2) = 2 eps reaches the barrier level
  CHECK(root_min_n == 5);   // width 4 eps = 2 sqrt(2) is the excluded birth width
}

TEST_CASE("membership query") {
  auto p = double_well();
  auto iv = enumerate_rep_intervals(p, 0.4, 2.0);
  for (const auto& s : iv) {
    int t = p.locate_interval(s.z_min, s.z_max);
    CHECK(t == s.topo);
  }
  // The degenerate barrier-level interval belongs to no branch.
  CHECK(p.locate_interval(-kSqrt2, kSqrt2) == -1);
}

TEST_CASE("epsilon0") {
  CHECK(epsilon0(parabola(), "merge") == kInf);
  CHECK(epsilon0(double_well(), "merge") == doctest::Approx(kSqrt2).epsilon(1e-9));
  CHECK(epsilon0(double_well(), "split") == doctest::Approx(kSqrt2).epsilon(1e-9));
  CHECK(epsilon0(double_well(), "remove") == doctest::Approx(kSqrt2 / 3.0).epsilon(1e-9));
}

TEST_CASE("asymmetric double well fixture geometry") {
  auto p = asym_double_well();
  const auto& topo = p.topology_intervals();
  REQUIRE(topo.size() == 3);
  // Sorted by birth: the right well is deeper (0.5753) than the left (0.712).
  const auto& wr = topo[0];
  const auto& wl = topo[1];
  const auto& root = topo[2];
  CHECK(wr.birth == doctest::Approx(489.0 / 850.0).epsilon(1e-9));
  CHECK(wr.z2 == doctest::Approx(361.0 / 340.0).epsilon(1e-9));
  CHECK(wl.birth == doctest::Approx(0.712).epsilon(1e-9));
  CHECK(wl.z2 == doctest::Approx(-0.72).epsilon(1e-9));
  // Outer extents at the barrier level.
  CHECK(wl.z1 == doctest::Approx(-1.2).epsilon(1e-9));
  CHECK(wl.z4 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(wr.z1 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(wr.z4 == doctest::Approx(1.9).epsilon(1e-9));
  CHECK(root.z2 == doctest::Approx(-1.2).epsilon(1e-9));
  CHECK(root.z3 == doctest::Approx(1.9).epsilon(1e-9));

  auto iv = enumerate_rep_intervals(p, 0.5, 2.5);
  // Left well: widths 0.5, 1.0 (1.5 > 1.2); right: 0.5, 1.0, 1.5 (2.0 > 1.9);
  // root: 3.5, 4.0, 4.5 (3.0 < 3.1 excluded; 5.0 above y_max=2.5).
  int left_count = 0, right_count = 0, root_count = 0;
  for (const auto& s : iv) {
    if (topo[static_cast<size_t>(s.topo)].unbounded()) ++root_count;
    else if (s.z_min < -0.4) ++left_count;
    else ++right_count;
  }
  CHECK(left_count == 2);
  CHECK(right_count == 3);
  CHECK(root_count == 3);
}

TEST_CASE("surface point cloud") {
  auto p = parabola();
  auto pts = surface_points(p, 1.0, 21, 4);
  REQUIRE(pts.size() == 21u * 4u);
  bool found_a = false, found_b = false;
  for (const auto& q : pts) {
    if (std::abs(q.x1 - 1.0) < 1e-9 && std::abs(q.x2) < 1e-9 && std::abs(q.x3) < 1e-9) {
      found_a = true;
    }
    if (std::abs(q.x1) < 1e-9 && std::abs(q.x2 - 0.8) < 1e-9 && std::abs(q.x3 - 0.6) < 1e-9) {
      found_b = true;
    }
    CHECK(q.component == 0);
  }
  CHECK(found_a);
  CHECK(found_b);

  // Singular radius: rho(R) equal to a critical value.
  CHECK_THROWS_AS(surface_points(p, 0.0, 5, 5), ProfileError);

  auto dw = double_well();
  // rho(R) = 0.5: two components.
  double R = std::sqrt(1.0 + std::sqrt(0.5));
  auto pts2 = surface_points(dw, R, 8, 8);
  int max_comp = 0;
  for (const auto& q : pts2) max_comp = std::max(max_comp, q.component);
  CHECK(max_comp == 1);
}
