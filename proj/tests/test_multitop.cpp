#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "common_profiles.hpp"
#include "ncsr/multitop.hpp"

using namespace ncsr;
using namespace ncsr_test;

namespace {

constexpr double kRt2 = 1.4142135623730951;

/// Largest magnitude in column `sj` of the blocks leaving space `ss`.
double col_max(const BlockOperator& A, int ss, int sj) {
  double m = 0.0;
  for (const auto& [key, mat] : A.blocks) {
    if (key.first != ss) continue;
    for (int r = 0; r < mat.rows(); ++r) {
      m = std::max(m, std::abs(mat(r, sj)));
    }
  }
  return m;
}

std::complex<double> entry(const BlockOperator& A, int ss, int sj, int ts,
                           int tj) {
  auto it = A.blocks.find(std::make_pair(ss, ts));
  if (it == A.blocks.end()) return 0.0;
  return it->second(tj, sj);
}

bool has_defect(const ANReport& rep, int s, int m, const std::string& check) {
  for (const auto& d : rep.defects) {
    if (d.s == s && d.m == m && d.check == check) return true;
  }
  return false;
}

Eigen::MatrixXcd random_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd F(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) F(i, j) = std::complex<double>(g(rng), g(rng));
  }
  return F;
}

}  // namespace

TEST_CASE("window lattice of an asymmetric double well") {
  const ProfileCurve prof = asym_double_well();
  const MultiLattice G = build_G0(prof, 0.5, 2.5);
  REQUIRE(G.spaces.size() == 8);

  // (level, m_min, dim, parent) per space, sorted by (level, m_min).
  const int expect[8][4] = {
      {1, 3, 1, 2},  {2, 0, 1, 3}, {2, 3, 2, 4},  {3, 0, 2, 5},
      {3, 3, 3, 5},  {4, 0, 7, 6}, {5, 0, 8, 7},  {6, 0, 9, -1},
  };
  for (int s = 0; s < 8; ++s) {
    CAPTURE(s);
    CHECK(G.spaces[s].n == expect[s][0]);
    CHECK(G.spaces[s].m_min == expect[s][1]);
    CHECK(G.spaces[s].dim == expect[s][2]);
    CHECK(G.spaces[s].parent == expect[s][3]);
    CHECK_FALSE(G.spaces[s].added);
  }
  CHECK(G.total_dim() == 33);
  CHECK(G.space_of(4, 6) == 5);
  CHECK(G.space_of(4, 7) == -1);
  CHECK(G.space_of(1, 3) == 0);

  // Tables: per space, S has dim+1 entries, |S| <= C, and the two ends
  // carry opposite signs of C exactly.
  for (int s = 0; s < 8; ++s) {
    CAPTURE(s);
    REQUIRE(static_cast<int>(G.S[s].size()) == G.spaces[s].dim + 1);
    CHECK(G.S[s].front() == G.C[s]);
    CHECK(G.S[s].back() == -G.C[s]);
    for (double v : G.S[s]) CHECK(std::abs(v) <= G.C[s] + 1e-12);
  }

  const ViolationReport V = check_violations(G);
  CHECK(V.over_ok());
  REQUIRE(V.under_violations.size() == 1);
  CHECK(V.under_violations[0] == 5);

  const MultiLattice Ms = apply_compromise(G, Compromise::kSplit);
  REQUIRE(Ms.split_slots.size() == 1);
  CHECK(Ms.split_slots[0] == std::make_pair(5, 2));

  // Adjointness of every hop family is exact on stored coefficients.
  for (HopMode mode : {HopMode::kOver, HopMode::kUnder}) {
    const MultiHops H = hopping_operators(G, mode);
    CHECK(bo_diff_max(bo_adjoint(H.ap), H.am) == 0.0);
    CHECK(bo_diff_max(bo_adjoint(H.bp), H.bm) == 0.0);
    CHECK(bo_diff_max(bo_adjoint(H.Xp), H.Xm) == 0.0);
  }
}

TEST_CASE("window tables specialize to the single-well ladder") {
  const ProfileCurve prof = parabola();
  const TrivialProfileData triv(prof);
  const double eps = 0.5;
  const int n_max = 6;
  const double y_top = std::pow(n_max * eps / 2.0, 2);
  const MultiLattice G = build_G0(prof, eps, y_top * 1.0000001);
  REQUIRE(G.spaces.size() == static_cast<size_t>(n_max));
  for (int s = 0; s < n_max; ++s) {
    CHECK(G.spaces[s].n == s + 1);
    CHECK(G.spaces[s].m_min == 0);
    CHECK(G.spaces[s].dim == s + 1);
  }

  const TrivialLattice tl = trivial_lattice(prof, triv, eps, n_max);
  const MultiHops Ho = hopping_operators(G, HopMode::kOver);
  const MultiHops Hu = hopping_operators(G, HopMode::kUnder);
  CHECK(bo_diff_max(Ho.ap, tl.ap) <= 1e-9);
  CHECK(bo_diff_max(Ho.am, tl.am) <= 1e-9);
  CHECK(bo_diff_max(Ho.bp, tl.bp) <= 1e-9);
  CHECK(bo_diff_max(Ho.bm, tl.bm) <= 1e-9);
  CHECK(bo_diff_max(Hu.ap, tl.apu) <= 1e-9);
  CHECK(bo_diff_max(Hu.am, tl.amu) <= 1e-9);
  CHECK(bo_diff_max(Hu.bp, tl.bpu) <= 1e-9);
  CHECK(bo_diff_max(Hu.bm, tl.bmu) <= 1e-9);
  CHECK(bo_diff_max(Ho.Xp, tl.Xp) <= 1e-9);
  CHECK(bo_diff_max(Ho.Xm, tl.Xm) <= 1e-9);
  CHECK(bo_diff_max(Ho.X0, tl.X0) <= 1e-9);
  CHECK(bo_diff_max(Ho.N0, tl.N0) <= 1e-9);

  // Single-well audits pass in both modes.
  CHECK(is_AN_representation(G, HopMode::kOver).is_AN);
  CHECK(is_AN_representation(G, HopMode::kUnder).is_AN);
}

TEST_CASE("merge flags adjacent sibling windows and seams break the audit") {
  const ProfileCurve prof = double_well();
  const double eps = kRt2 / 1.25;
  const MultiLattice G = build_G0(prof, eps, 4.0);
  REQUIRE(G.spaces.size() == 3);
  CHECK(G.spaces[0].n == 1);  // left well, one state at column 0
  CHECK(G.spaces[0].m_min == 0);
  CHECK(G.spaces[0].dim == 1);
  CHECK(G.spaces[0].z_min == doctest::Approx(-1.3903066).epsilon(1e-5));
  CHECK(G.spaces[1].m_min == 1);  // right well, adjacent column
  CHECK(G.spaces[1].z_min == doctest::Approx(0.2589357).epsilon(1e-4));
  CHECK(G.spaces[2].n == 2);
  CHECK(G.spaces[2].dim == 3);
  CHECK(G.C[0] == doctest::Approx(0.9329523).epsilon(1e-5));
  CHECK(G.C[1] == doctest::Approx(G.C[0]).epsilon(1e-9));

  const ViolationReport V = check_violations(G);
  REQUIRE(V.over_violations.size() == 1);
  CHECK(V.over_violations[0] == 2);
  CHECK(V.under_ok());  // 3 == 1 + 1 + 1

  const MultiLattice M = apply_compromise(G, Compromise::kMerge);
  REQUIRE(M.merge_pairs.size() == 1);
  CHECK(M.merge_pairs[0] == std::make_pair(0, 1));
  CHECK(M.spaces.size() == 3);  // merge never changes the lattice itself

  const MultiHops H = hopping_operators(M, HopMode::kOver);
  CHECK(bo_diff_max(bo_adjoint(H.ap), H.am) == 0.0);
  CHECK(bo_diff_max(bo_adjoint(H.bp), H.bm) == 0.0);

  // The composed raising operator crosses the seam: up out of the left
  // well's top state, down into the right well's bottom state.
  const BlockOperator Xp = bo_compose(H.bm, H.ap);
  const double seam = std::sqrt(4.0 * M.C[0] * M.C[1]);
  CHECK(std::abs(entry(Xp, 0, 0, 1, 0)) == doctest::Approx(seam).epsilon(1e-9));

  const BlockOperator Qn =
      bo_sub(bo_compose(H.N0, Xp), bo_compose(Xp, H.N0));
  const double dz = M.spaces[1].z_min - M.spaces[0].z_min;
  CHECK(std::abs(entry(Qn, 0, 0, 1, 0)) ==
        doctest::Approx(seam * dz).epsilon(1e-9));

  const ANReport rep = is_AN_representation(M, HopMode::kOver);
  CHECK_FALSE(rep.is_AN);
  CHECK(rep.worst == doctest::Approx(4.0 * M.C[0] * M.C[1]).epsilon(1e-9));
  CHECK(has_defect(rep, 0, 0, "X- X+ product"));
  CHECK(has_defect(rep, 1, 1, "X+ X- product"));
  // Defects appear only at the two seam-flanking states.
  for (const auto& d : rep.defects) {
    CHECK(((d.s == 0 && d.m == 0) || (d.s == 1 && d.m == 1)));
  }
  CHECK(rep.space_ok[2] == 1);
}

TEST_CASE("split flags uncovered columns and the audit fails exactly there") {
  const ProfileCurve prof = double_well();
  const double eps = kRt2 / 1.75;
  const MultiLattice G = build_G0(prof, eps, 7.0);
  REQUIRE(G.spaces.size() == 3);
  CHECK(G.spaces[0].m_min == 0);
  CHECK(G.spaces[1].m_min == 2);
  CHECK(G.spaces[2].dim == 4);

  const ViolationReport V = check_violations(G);
  CHECK(V.over_ok());  // 4 >= 2 + 2
  REQUIRE(V.under_violations.size() == 1);
  CHECK(V.under_violations[0] == 2);

  const MultiLattice M = apply_compromise(G, Compromise::kSplit);
  REQUIRE(M.split_slots.size() == 1);
  CHECK(M.split_slots[0] == std::make_pair(2, 1));

  const ANReport rep = is_AN_representation(M, HopMode::kUnder);
  CHECK_FALSE(rep.is_AN);
  const double want = M.C[2] * M.C[2] - M.Sval(2, 2) * M.Sval(2, 2);
  CHECK(want == doctest::Approx(1.5993336).epsilon(1e-5));
  CHECK(rep.worst == doctest::Approx(want).epsilon(1e-9));
  CHECK(has_defect(rep, 2, 1, "X- X+ product"));
  CHECK(has_defect(rep, 2, 2, "X+ X- product"));
  // Defects appear only at the states flanking the flagged column.
  for (const auto& d : rep.defects) {
    CHECK(d.s == 2);
    CHECK((d.m == 1 || d.m == 2));
  }
}

TEST_CASE("add inserts one-state spaces that heal the under audit") {
  const ProfileCurve prof = double_well();
  const double eps = kRt2 / 1.75;
  const MultiLattice G = build_G0(prof, eps, 7.0);
  const MultiLattice A = apply_compromise(G, Compromise::kAdd);
  REQUIRE(A.spaces.size() == 4);
  REQUIRE(A.added_spaces.size() == 1);
  const int u = A.added_spaces[0];
  CHECK(u == 1);  // sorted between the wells
  CHECK(A.spaces[u].added);
  CHECK(A.spaces[u].n == 1);
  CHECK(A.spaces[u].m_min == 1);
  CHECK(A.spaces[u].dim == 1);
  CHECK(A.spaces[u].parent == 3);
  CHECK(A.C[u] == 0.0);
  REQUIRE(A.S[u].size() == 2);
  CHECK(A.S[u][0] == 0.0);
  CHECK(A.annotations.size() == 1);

  const MultiHops H = hopping_operators(A, HopMode::kUnder);
  CHECK(bo_diff_max(bo_adjoint(H.ap), H.am) == 0.0);
  CHECK(bo_diff_max(bo_adjoint(H.bp), H.bm) == 0.0);

  // The inserted state restores the missing rung: up-hops out of it carry
  // the parent's table values.
  const double up_a = std::sqrt(A.C[3] - A.Sval(3, 2));
  CHECK(std::abs(entry(H.ap, u, 0, 3, 2)) ==
        doctest::Approx(up_a).epsilon(1e-12));
  const BlockOperator Xp = bo_compose(H.ap, H.bm);
  const double healed = std::sqrt(A.C[3] * A.C[3] - A.Sval(3, 2) * A.Sval(3, 2));
  CHECK(std::abs(entry(Xp, 3, 1, 3, 2)) ==
        doctest::Approx(healed).epsilon(1e-9));

  const ANReport rep = is_AN_representation(A, HopMode::kUnder);
  CHECK(rep.is_AN);
  CHECK(rep.worst <= 1e-10);
}

TEST_CASE("remove deletes unfit parents and re-anchors the survivors") {
  const ProfileCurve prof = double_well();
  const double eps = kRt2 / 4.0;
  const MultiLattice G = build_G0(prof, eps, 9.0);
  REQUIRE(G.spaces.size() == 11);  // four windows per well, three chain

  const MultiLattice R = apply_compromise(G, Compromise::kRemove);
  REQUIRE(R.spaces.size() == 9);
  CHECK(R.removed_intervals.size() == 2);

  // (level, m_min, dim, parent) per surviving space.
  const int expect[9][4] = {
      {1, 1, 1, 2}, {1, 6, 1, 3}, {2, 1, 2, 4},  {2, 6, 2, 5}, {3, 1, 3, 6},
      {3, 6, 3, 7}, {4, 1, 4, 8}, {4, 6, 4, 8},  {5, 0, 11, -1},
  };
  for (int s = 0; s < 9; ++s) {
    CAPTURE(s);
    CHECK(R.spaces[s].n == expect[s][0]);
    CHECK(R.spaces[s].m_min == expect[s][1]);
    CHECK(R.spaces[s].dim == expect[s][2]);
    CHECK(R.spaces[s].parent == expect[s][3]);
  }
  CHECK(check_violations(R).over_ok());
  // Both re-parented chains sit off the root's step grid.
  REQUIRE(R.annotations.size() == 2);
  CHECK(R.annotations[0].find("position-X0 residue") != std::string::npos);

  const MultiHops H = hopping_operators(R, HopMode::kOver);
  CHECK(bo_diff_max(bo_adjoint(H.ap), H.am) == 0.0);
  CHECK(bo_diff_max(bo_adjoint(H.bp), H.bm) == 0.0);

  // The audit passes, and not vacuously: interior raising entries of the
  // widest well windows are nonzero, while the one-column gap between the
  // two child blocks annihilates the top of the left stack.
  const BlockOperator Xp = bo_compose(H.bm, H.ap);
  CHECK(std::abs(entry(Xp, 6, 0, 6, 1)) > 0.1);
  CHECK(col_max(Xp, 6, 3) == 0.0);

  const ANReport rep = is_AN_representation(R, HopMode::kOver);
  CHECK(rep.is_AN);
  CHECK(rep.worst <= 1e-12);
}

TEST_CASE("compromise application and hop modes are guarded") {
  const ProfileCurve prof = double_well();
  const MultiLattice G = build_G0(prof, kRt2 / 1.25, 4.0);
  const MultiLattice M = apply_compromise(G, Compromise::kMerge);
  CHECK_THROWS_AS((void)apply_compromise(M, Compromise::kSplit),
                  std::invalid_argument);
  CHECK(apply_compromise(G, Compromise::kNone).compromise ==
        Compromise::kNone);

  CHECK_THROWS_AS((void)hopping_operators(M, HopMode::kUnder),
                  std::invalid_argument);
  const MultiLattice G2 = build_G0(prof, kRt2 / 1.75, 7.0);
  const MultiLattice Ms = apply_compromise(G2, Compromise::kSplit);
  CHECK_THROWS_AS((void)hopping_operators(Ms, HopMode::kOver),
                  std::invalid_argument);
  const MultiLattice Ma = apply_compromise(G2, Compromise::kAdd);
  CHECK_THROWS_AS((void)hopping_operators(Ma, HopMode::kOver),
                  std::invalid_argument);
  // Removing the only chain window orphans the two wells; the survivors
  // are re-anchored as disconnected components with a one-column gap.
  const MultiLattice Mr = apply_compromise(G, Compromise::kRemove);
  REQUIRE(Mr.spaces.size() == 2);
  CHECK(Mr.spaces[0].m_min == 0);
  CHECK(Mr.spaces[1].m_min == 2);
  CHECK(Mr.spaces[0].parent == -1);
  CHECK(Mr.spaces[1].parent == -1);
  REQUIRE(Mr.annotations.size() == 1);
  CHECK(Mr.annotations[0].find("disconnected components") !=
        std::string::npos);
  CHECK_THROWS_AS((void)hopping_operators(Mr, HopMode::kUnder),
                  std::invalid_argument);

  // A table-built lattice has no curve to re-enumerate.
  CHECK_THROWS_AS(
      (void)apply_compromise(build_gmtl(export_gmtl(G)), Compromise::kRemove),
      std::invalid_argument);

  CHECK(compromise_from_string("merge") == Compromise::kMerge);
  CHECK_THROWS_AS((void)compromise_from_string("fuse"), std::invalid_argument);
  CHECK(hop_mode_from_string("under") == HopMode::kUnder);
  CHECK(std::string(to_string(Compromise::kRemove)) == "remove");
  CHECK(std::string(to_string(HopMode::kOver)) == "over");
}

TEST_CASE("topology reflection across spacings") {
  const ProfileCurve prof = double_well();
  const double y_max = 5.0;
  const double e_merge = kRt2;      // narrowest well width range
  const double e_remove = kRt2 / 3.0;  // divided by the branch count

  for (int k : {2, 4, 8}) {
    CAPTURE(k);
    const MultiLattice G = build_G0(prof, e_merge / k, y_max);
    for (Compromise c :
         {Compromise::kMerge, Compromise::kSplit, Compromise::kAdd}) {
      CAPTURE(to_string(c));
      const ReflectsReport r =
          reflects_topology(apply_compromise(G, c), prof);
      CHECK(r.reflects);
      CHECK(r.failures.empty());
      CHECK(r.witnesses.size() >= 5);  // 3 hosts + 2 crossings
    }
    const MultiLattice Gr = build_G0(prof, e_remove / k, y_max);
    const ReflectsReport rr =
        reflects_topology(apply_compromise(Gr, Compromise::kRemove), prof);
    CHECK(rr.reflects);
  }

  // Twice the critical spacing: the wells are too narrow to host any
  // window, and the only chain window sits above the ceiling.
  const MultiLattice Gw = build_G0(prof, 2.0 * kRt2, y_max);
  REQUIRE(Gw.spaces.size() == 1);
  CHECK(Gw.spaces[0].above_ceiling);
  for (Compromise c :
       {Compromise::kMerge, Compromise::kSplit, Compromise::kAdd}) {
    CAPTURE(to_string(c));
    const ReflectsReport r = reflects_topology(apply_compromise(Gw, c), prof);
    CHECK_FALSE(r.reflects);
    // Neither well nor the chain hosts a window (3 failures), and with no
    // well windows the two birth crossings are missing as well.
    CHECK(r.failures.size() == 5);
  }
  const MultiLattice Gr2 = build_G0(prof, 2.0 * e_remove, y_max);
  const MultiLattice Rr2 = apply_compromise(Gr2, Compromise::kRemove);
  CHECK(Rr2.removed_intervals.empty());
  const ReflectsReport r2 = reflects_topology(Rr2, prof);
  CHECK_FALSE(r2.reflects);
  REQUIRE(r2.failures.size() == 1);
  CHECK(r2.failures[0].find("above the enumeration ceiling") !=
        std::string::npos);
}

TEST_CASE("parent-child intertwiners are exact morphisms") {
  const ProfileCurve prof = double_well();
  const MultiLattice G = build_G0(prof, kRt2 / 4.0, 9.0);
  const MultiLattice R = apply_compromise(G, Compromise::kRemove);
  CHECK_THROWS_AS((void)topo_change_maps(R, 0), std::invalid_argument);

  const TopologyChangeMaps M = topo_change_maps(R, 8);
  CHECK(M.children == std::vector<int>{6, 7});
  CHECK(M.child_total == 8);
  CHECK(M.parent_dim == 11);
  CHECK(M.child_offset == std::vector<int>{0, 4});
  CHECK((M.Da.array() > 0.0).all());
  CHECK((M.Db.array() > 0.0).all());

  // One positive entry per column in distinct rows.
  const Eigen::MatrixXd gram_a =
      M.Ap.transpose() * M.Ap - Eigen::MatrixXd(M.Da.asDiagonal());
  CHECK(gram_a.cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd gram_b =
      M.Bp.transpose() * M.Bp - Eigen::MatrixXd(M.Db.asDiagonal());
  CHECK(gram_b.cwiseAbs().maxCoeff() <= 1e-12);

  // Identity image: 0/1 diagonals with the zero exactly at each child's
  // first (raising family) resp. last (column family) parent slot.
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(8, 8);
  const Eigen::MatrixXcd AI = M.A_plus(I);
  const Eigen::MatrixXcd BI = M.B_plus(I);
  for (int r = 0; r < 11; ++r) {
    const bool a_on = (r >= 2 && r <= 5) || (r >= 7 && r <= 10);
    const bool b_on = (r >= 1 && r <= 4) || (r >= 6 && r <= 9);
    CHECK(std::abs(AI(r, r) - (a_on ? 1.0 : 0.0)) <= 1e-12);
    CHECK(std::abs(BI(r, r) - (b_on ? 1.0 : 0.0)) <= 1e-12);
  }
  CHECK((AI - Eigen::MatrixXcd(AI.diagonal().asDiagonal()))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 10; ++trial) {
    CAPTURE(trial);
    const Eigen::MatrixXcd F = random_matrix(8, rng);
    const Eigen::MatrixXcd Gm = random_matrix(8, rng);
    CHECK((M.A_minus(M.A_plus(F)) - F).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((M.B_minus(M.B_plus(F)) - F).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((M.A_plus(F * Gm) - M.A_plus(F) * M.A_plus(Gm))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
    CHECK((M.B_plus(F * Gm) - M.B_plus(F) * M.B_plus(Gm))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
    // First footprint row/column vanish for the raising family, last for
    // the column family.
    const Eigen::MatrixXcd AF = M.A_plus(F);
    const Eigen::MatrixXcd BF = M.B_plus(F);
    for (int r : {1, 6}) {
      CHECK(AF.row(r).cwiseAbs().maxCoeff() == 0.0);
      CHECK(AF.col(r).cwiseAbs().maxCoeff() == 0.0);
    }
    for (int r : {5, 10}) {
      CHECK(BF.row(r).cwiseAbs().maxCoeff() == 0.0);
      CHECK(BF.col(r).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("table-built lattices round-trip the compromise operators") {
  const ProfileCurve prof = double_well();
  const MultiLattice G = build_G0(prof, kRt2 / 1.25, 4.0);
  const MultiLattice M = apply_compromise(G, Compromise::kMerge);

  const GmtlSpec spec = export_gmtl(M);
  REQUIRE(spec.spaces.size() == 3);
  const MultiLattice G2 = build_gmtl(spec);
  REQUIRE(G2.spaces.size() == 3);
  CHECK(G2.prof == nullptr);
  CHECK(G2.spaces[0].parent == 2);
  CHECK(G2.spaces[1].parent == 2);

  const MultiHops Ha = hopping_operators(M, HopMode::kOver);
  const MultiHops Hb = hopping_operators(G2, HopMode::kOver);
  CHECK(bo_diff_max(Ha.ap, Hb.ap) == 0.0);
  CHECK(bo_diff_max(Ha.am, Hb.am) == 0.0);
  CHECK(bo_diff_max(Ha.bp, Hb.bp) == 0.0);
  CHECK(bo_diff_max(Ha.bm, Hb.bm) == 0.0);
  CHECK(bo_diff_max(Ha.Xp, Hb.Xp) == 0.0);
  CHECK(bo_diff_max(Ha.X0, Hb.X0) == 0.0);
  CHECK(bo_diff_max(Ha.N0, Hb.N0) == 0.0);

  // A single hand-written chain is a valid lattice in its own right.
  GmtlSpec ramp;
  ramp.eps = 1.0;
  GmtlSpace sp;
  sp.n = 1;
  sp.m_min = 0;
  sp.m_max = 3;
  sp.C = 2.0;
  sp.S = {2.0, 1.0, 0.0, -1.0, -2.0};
  ramp.spaces.push_back(sp);
  const MultiLattice Gr = build_gmtl(ramp);
  const MultiHops Hr = hopping_operators(Gr, HopMode::kOver);
  CHECK(std::abs(entry(Hr.Xp, 0, 0, 0, 1)) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(std::abs(entry(Hr.Xp, 0, 2, 0, 3)) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK(bo_diff_max(bo_adjoint(Hr.Xp), Hr.Xm) == 0.0);
}

TEST_CASE("table validation names the offending window") {
  GmtlSpec spec;
  spec.eps = 0.5;
  GmtlSpace sp;
  sp.n = 1;
  sp.m_min = 0;
  sp.m_max = 1;
  sp.C = 2.0;
  sp.S = {1.0, 0.5, -1.0};  // both ends disagree with C
  spec.spaces.push_back(sp);
  try {
    (void)build_gmtl(spec);
    FAIL("expected a validation error");
  } catch (const ProfileError& e) {
    REQUIRE(e.violations().size() == 2);
    CHECK(e.violations()[0].find("space 0") != std::string::npos);
    CHECK(e.violations()[0].find("column 0") != std::string::npos);
    CHECK(e.violations()[1].find("column 2") != std::string::npos);
  }

  spec.spaces[0].C = 1.0;
  spec.spaces[0].S = {1.0, 1.5, -1.0};  // interior entry beyond C
  try {
    (void)build_gmtl(spec);
    FAIL("expected a validation error");
  } catch (const ProfileError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].find("column 1") != std::string::npos);
    CHECK(e.violations()[0].find("no real hop coefficient") !=
          std::string::npos);
  }

  spec.spaces[0].S = {1.0, -1.0};  // wrong table length
  CHECK_THROWS_AS((void)build_gmtl(spec), ProfileError);

  // Two spaces claiming the same (level, column) label collide.
  GmtlSpec twice;
  twice.eps = 0.5;
  GmtlSpace one;
  one.n = 1;
  one.m_min = 0;
  one.m_max = 0;
  one.C = 1.0;
  one.S = {1.0, -1.0};
  twice.spaces.push_back(one);
  twice.spaces.push_back(one);
  CHECK_THROWS_WITH_AS((void)build_gmtl(twice), "lattice label collision",
                       ProfileError);
}
