#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncsr/representation.hpp"

namespace ncsr {

/// Boundary compromise carried by a multi-window lattice. The lattice of all
/// representation windows of a branched curve cannot satisfy both hopping
/// conventions at window boundaries; each compromise trades a different
/// property away and pins down which hop family stays meaningful.
enum class Compromise { kNone, kMerge, kSplit, kRemove, kAdd };

/// Which scalar window a hop reads its coefficient from: over-hops use the
/// window at the lower level, under-hops the window one level above.
enum class HopMode { kOver, kUnder };

const char* to_string(Compromise c);
const char* to_string(HopMode m);
Compromise compromise_from_string(const std::string& s);
HopMode hop_mode_from_string(const std::string& s);

/// One ladder of the lattice with its placement data. Levels grow with
/// window width (the widest chain window sits on top); columns are global,
/// so a state is addressed as |n, m> with m = m_min + local index.
struct MultiSpace {
  int s = 0;             // index into MultiLattice::spaces
  int interval_id = -1;  // source representation window (-1: inserted)
  int topo = -1;         // owning branch of the curve (-1: inserted)
  int n = 1;             // level label (smallest window anchored at 1)
  int m_min = 0;         // global column of the first state
  int dim = 0;
  double z_min = 0.0;
  int parent = -1;  // space index of the parent ladder (-1: the root)
  bool above_ceiling = false;
  bool added = false;  // inserted by the add compromise

  int m_max() const { return m_min + dim - 1; }
};

/// A lattice of representation windows: the ladders, their square-root
/// height tables, compromise bookkeeping, and an embedded Lattice mirror
/// so the block-operator helpers apply directly.
struct MultiLattice {
  const ProfileCurve* prof = nullptr;  // null for table-built lattices
  double eps = 0.0;
  double y_max = 0.0;
  Compromise compromise = Compromise::kNone;
  std::vector<MultiSpace> spaces;

  /// Per-space tables: D[s] is the minimum height on the window, S[s][r]
  /// the signed square root of (height - D) at relative column r = 0..dim
  /// (positive strictly left of the leftmost minimizer), and
  /// C[s] = S[s][0]; the top entry S[s][dim] is synthesized as -C[s]
  /// because both window endpoints sit at the same level by construction.
  std::vector<double> D, C;
  std::vector<std::vector<double>> S;

  std::vector<std::pair<int, int>> merge_pairs;  // adjacent sibling spaces
  std::vector<std::pair<int, int>> split_slots;  // (parent space, column)
  std::vector<int> removed_intervals;            // interval ids dropped
  std::vector<int> added_spaces;                 // inserted space indices
  std::vector<std::string> annotations;

  Lattice lat;                         // SpaceInfo mirror of `spaces`
  std::map<std::pair<int, int>, int> index;  // (n, m) -> space

  int total_dim() const { return lat.total_dim(); }
  /// Space holding state |n, m>, or -1 when absent.
  int space_of(int n, int m) const;
  /// Table lookup by global column m (m_min <= m <= m_max + 1).
  double Sval(int s, int m) const { return S[s][m - spaces[s].m_min]; }
};

/// Hopping operators of a lattice in one mode. In kUnder the four hop slots
/// hold the primed family. Xp/Xm are the direct in-space ladder entries;
/// the seam-sensitive composites are formed with bo_compose by callers.
struct MultiHops {
  HopMode mode = HopMode::kOver;
  BlockOperator ap, am, bp, bm;
  BlockOperator Xp, Xm;
  BlockOperator X0, N0;
  std::vector<std::string> truncation_notes;
};

/// Window-dimension fit of one parent ladder against its children.
struct ParentFit {
  int parent = -1;
  std::vector<int> children;  // space indices in column order
  int dim = 0;
  int child_dim_sum = 0;
  bool over_ok = true;   // dim >= sum of (child dim + 1)
  bool under_ok = true;  // dim == child dim sum + 1
};

/// Fit of every parent with children; childless spaces are vacuous. The two
/// conditions are not mutually exclusive: a single-child chain meets both.
struct ViolationReport {
  std::vector<ParentFit> fits;
  std::vector<int> over_violations;   // parent space indices
  std::vector<int> under_violations;

  bool over_ok() const { return over_violations.empty(); }
  bool under_ok() const { return under_violations.empty(); }
};

struct ANDefect {
  int s = -1;  // source space
  int m = 0;   // global column
  std::string check;
  double deviation = 0.0;
};

/// Result of auditing the composed ladder operators against the tables.
struct ANReport {
  bool is_AN = false;
  double tol = 1e-10;
  double worst = 0.0;
  std::vector<ANDefect> defects;
  std::vector<unsigned char> space_ok;  // per space
};

/// Whether the lattice forest mirrors the branch forest of the curve.
struct ReflectsReport {
  bool reflects = false;
  std::vector<std::string> witnesses;
  std::vector<std::string> failures;
};

/// Intertwiners between a parent window and the stack of its children,
/// built from the over-hop tables. Ap/Bp have one positive entry per
/// column, so Ap^T Ap = diag(Da) exactly and the four maps below are exact
/// ring morphisms / round trips.
struct TopologyChangeMaps {
  int parent = -1;
  std::vector<int> children;      // space indices in column order
  std::vector<int> child_offset;  // start of each child in the stack
  int child_total = 0;
  int parent_dim = 0;
  Eigen::MatrixXd Ap, Bp;  // parent_dim x child_total
  Eigen::VectorXd Da, Db;  // strictly positive

  /// Child-side operator to parent side and back, raising family.
  Eigen::MatrixXcd A_plus(const Eigen::MatrixXcd& F) const;
  Eigen::MatrixXcd A_minus(const Eigen::MatrixXcd& F) const;
  /// Column-preserving family.
  Eigen::MatrixXcd B_plus(const Eigen::MatrixXcd& F) const;
  Eigen::MatrixXcd B_minus(const Eigen::MatrixXcd& F) const;
};

/// Hand-specified ladder for a table-built lattice.
struct GmtlSpace {
  int n = 1;
  int m_min = 0;
  int m_max = 0;
  double C = 0.0;
  std::vector<double> S;  // dim + 1 signed entries
  std::optional<double> z_min;
};

struct GmtlSpec {
  double eps = 0.0;
  std::vector<GmtlSpace> spaces;
};

/// Assemble the lattice of all representation windows of `prof` up to level
/// y_max: levels anchored so the smallest window sits at n = 1, columns by
/// flooring left-endpoint offsets to steps. Throws when two spaces collide
/// on a (level, column) label or no window exists.
MultiLattice build_G0(const ProfileCurve& prof, double eps, double y_max);

/// Window-dimension fit of every parent against its children.
ViolationReport check_violations(const MultiLattice& G);

/// Apply one boundary compromise to a fresh lattice (returns a copy):
/// merge flags adjacent sibling pairs, split flags uncovered interior
/// columns, add inserts one-state pseudo-spaces into those columns, and
/// remove deletes parents whose children cannot be placed, re-anchoring
/// levels and columns.
MultiLattice apply_compromise(const MultiLattice& G, Compromise kind);

/// Hopping operators in the requested mode. Merge/remove lattices carry
/// over-hops only, split/add under-hops only; a mismatch throws.
MultiHops hopping_operators(const MultiLattice& G, HopMode mode);

/// Audit the composed ladder operators against the height tables: products,
/// level commutation, step shift, and end annihilation per state. Over mode
/// skips states at the top level (their up-hops are truncated by the
/// enumeration ceiling); under mode checks every state.
ANReport is_AN_representation(const MultiLattice& G, HopMode mode,
                              double tol = 1e-10);

/// Three checks against the branch forest of the curve, ignoring inserted
/// spaces: every branch hosts a window, parent links stay within a branch
/// or cross exactly one birth, and each non-root branch is crossed exactly
/// once.
ReflectsReport reflects_topology(const MultiLattice& G,
                                 const ProfileCurve& prof);

/// Intertwiners between space `parent` and its children.
TopologyChangeMaps topo_change_maps(const MultiLattice& G, int parent);

/// Build a lattice directly from ladder tables (no curve attached).
/// Validates |S[0]| = |S[dim]| = C and |S| <= C per space, naming the
/// offending space and column.
MultiLattice build_gmtl(const GmtlSpec& spec);

/// Export the tables of a lattice for build_gmtl round trips.
GmtlSpec export_gmtl(const MultiLattice& G);

}  // namespace ncsr
