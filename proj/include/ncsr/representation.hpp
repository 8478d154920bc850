#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncsr/algebra.hpp"

namespace ncsr {

struct BasisLabel {
  int n = 0;
  int m = 0;
};

/// One ladder of basis states. `n` is the level label (several spaces may
/// share a level on general lattices), `m_min` the global column of the
/// first state, `z_min` its X0 eigenvalue.
struct SpaceInfo {
  int s = 0;
  int n = 1;
  int m_min = 0;
  int dim = 0;
  double z_min = 0.0;
};

/// A finite family of spaces with the curve data needed to evaluate
/// diagonal coefficients at each basis state.
struct Lattice {
  const ProfileCurve* prof = nullptr;
  const TrivialProfileData* triv = nullptr;
  double eps = 0.0;
  std::optional<double> R;
  std::vector<SpaceInfo> spaces;

  int total_dim() const;
  /// X0 eigenvalue of local state j of space s.
  double x0(int s, int j) const { return spaces[s].z_min + eps * j; }
  /// N0 eigenvalue of space s.
  double n0(int s) const { return spaces[s].z_min; }
  /// Index of the unique space at level n, or -1 (trivial lattices).
  int space_at_level(int n) const;
  EvalCtx eval_ctx() const;
};

/// Complex matrix blocks keyed by (source space, target space); the block
/// for (s, t) has dim(t) rows and dim(s) columns. Blocks are pure data:
/// operations that need space metadata take the lattice as an argument, so
/// operators stay valid when a lattice is copied or moved.
struct BlockOperator {
  std::string name;
  std::map<std::pair<int, int>, Eigen::MatrixXcd> blocks;

  const Eigen::MatrixXcd* block(int src, int dst) const;
};

BlockOperator bo_zero(std::string name = "");
BlockOperator bo_identity(const Lattice& lat);
/// Diagonal operator from a coefficient expression.
BlockOperator bo_diag(const Lattice& lat, const CE& f);
/// A then B: (A o B)v = A(B(v)).
BlockOperator bo_compose(const BlockOperator& a, const BlockOperator& b);
BlockOperator bo_add(const BlockOperator& a, const BlockOperator& b);
BlockOperator bo_sub(const BlockOperator& a, const BlockOperator& b);
BlockOperator bo_scale(const BlockOperator& a, std::complex<double> s);
BlockOperator bo_adjoint(const BlockOperator& a);
/// Largest entry magnitude; optionally reports where it occurs.
double bo_max_abs(const BlockOperator& a, std::string* where = nullptr);
/// Largest entry of a - b.
double bo_diff_max(const BlockOperator& a, const BlockOperator& b,
                   std::string* where = nullptr);
/// Largest entry of a - b over blocks whose source level is <= src_n_cap
/// (no cap when src_n_cap < 0).
double bo_diff_max(const Lattice& lat, const BlockOperator& a,
                   const BlockOperator& b, int src_n_cap,
                   std::string* where = nullptr);
Eigen::MatrixXcd bo_dense(const Lattice& lat, const BlockOperator& a);

/// Standard ladder representation on one interval: J = [z_min, z_max] with
/// z_max - z_min = dim * eps and equal curve heights at both ends.
struct StandardRep {
  RepInterval J;
  int dim = 0;
  double eps = 0.0;
  Alg kind = Alg::kLadderN;
  bool r_compatible = false;  // the radius constant equals z_min
  std::vector<double> x0_diag;
  double n0_value = 0.0;
  std::vector<double> xp_coeff;  // X+ |m> = xp_coeff[m] |m+1>
  std::vector<double> xm_coeff;  // X- |m> = xm_coeff[m-1] |m-1>
  Lattice lat;                   // single-space view for represent()
  BlockOperator Xp, Xm, X0, N0;
};

/// kind picks the coefficient family the interval will represent:
/// kLadderFree / kLadderN / kLadderR. For kLadderR the radius constant must
/// equal z_min.
StandardRep standard_rep(const ProfileCurve& prof, const RepInterval& J,
                         double eps, Alg kind = Alg::kLadderN,
                         std::optional<double> R = std::nullopt);

/// The lattice of all level windows of a single-well curve: spaces V_n,
/// n = 1..n_max, with J_n = [omega(eps n), omega(eps n) + eps n], over- and
/// under-hopping operators, the embedded ladder operators, and diagonals.
struct TrivialLattice {
  Lattice lat;
  int n_max = 0;
  BlockOperator ap, am, bp, bm;      // over-hops
  BlockOperator apu, amu, bpu, bmu;  // under-hops
  BlockOperator Xp, Xm, X0, N0;
};

TrivialLattice trivial_lattice(const ProfileCurve& prof,
                               const TrivialProfileData& triv, double eps,
                               int n_max);

/// Generator assignment used when representing words on a lattice.
using GenOps = std::map<Gen, const BlockOperator*>;

/// Represent a normal form: each term is the generator product applied
/// after the diagonal right coefficient, evaluated at the source state.
/// Columns that the generator product annihilates are skipped before the
/// coefficient is evaluated there.
BlockOperator represent(const NormalForm& nf, const Lattice& lat,
                        const GenOps& gens);

/// Convenience dispatch: ladder families act through the embedded ladder
/// operators, hop families through the over-hops.
BlockOperator represent(const NormalForm& nf, const TrivialLattice& tl);
/// Ladder families on a single standard interval. A radius-reduced element
/// requires the rep to have been built with R == z_min.
BlockOperator represent(const NormalForm& nf, const StandardRep& rep);

struct RelationCheck {
  std::string relation;
  double max_abs_deviation = 0.0;
  std::string location;
};

struct RelationReport {
  std::vector<RelationCheck> checks;
  double worst = 0.0;
  bool all_below(double tol) const;
};

/// Check every defining relation of the hop family on the lattice: the four
/// opposite-hop products, the four exchange relations, diagonal
/// commutativity, adjoint pairing, both ladder compositions, the
/// per-interval restriction to the standard rep, and the spectral
/// reconstruction of the diagonals from a+a- and b+b-.
RelationReport verify_relations(const TrivialLattice& tl);

/// Lattice-point coordinates (x, y) = (X0 eigenvalue, curve height of the
/// N0 eigenvalue) of |n, m>.
std::pair<double, double> coords(const TrivialLattice& tl, int n, int m);

/// Evaluate a coefficient identity on every basis state of trivial lattices
/// at each listed eps; true iff it vanishes everywhere within tol.
bool faithfulness_scan(const ProfileCurve& prof, const TrivialProfileData& triv,
                       const CE& f, const std::vector<double>& eps_list,
                       int n_max, double tol = 1e-9);

}  // namespace ncsr
