#include "ncsr/multitop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ncsr/coeff_expr.hpp"
#include "ncsr/par.hpp"

namespace ncsr {

namespace {

double checked_sqrt(double r, const char* what) {
  if (r < -1e-12) {
    std::ostringstream os;
    os << "negative square-root argument (" << r << ") while building " << what;
    throw ProfileError(os.str());
  }
  return r > 0.0 ? std::sqrt(r) : 0.0;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string space_name(const MultiSpace& sp) {
  std::ostringstream os;
  os << "V" << sp.s << " (level " << sp.n << ", columns " << sp.m_min << ".."
     << sp.m_max() << ")";
  return os.str();
}

/// Sort spaces by (level, first column), reassign indices, remap parents,
/// and rebuild the SpaceInfo mirror and the (n, m) -> space index. Tables
/// must be aligned with `spaces` on entry; they are permuted along. Throws
/// when two spaces claim the same (level, column) label.
void finalize_spaces(MultiLattice& G) {
  const int n_sp = static_cast<int>(G.spaces.size());
  std::vector<int> order(n_sp);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& A = G.spaces[a];
    const auto& B = G.spaces[b];
    if (A.n != B.n) return A.n < B.n;
    if (A.m_min != B.m_min) return A.m_min < B.m_min;
    return A.z_min < B.z_min;
  });
  std::vector<int> old2new(n_sp, -1);
  for (int i = 0; i < n_sp; ++i) old2new[order[i]] = i;

  std::vector<MultiSpace> spaces(n_sp);
  std::vector<double> D(n_sp, 0.0), C(n_sp, 0.0);
  std::vector<std::vector<double>> S(n_sp);
  for (int i = 0; i < n_sp; ++i) {
    spaces[i] = G.spaces[order[i]];
    spaces[i].s = i;
    spaces[i].parent =
        spaces[i].parent < 0 ? -1 : old2new[spaces[i].parent];
    D[i] = G.D[order[i]];
    C[i] = G.C[order[i]];
    S[i] = G.S[order[i]];
  }
  G.spaces = std::move(spaces);
  G.D = std::move(D);
  G.C = std::move(C);
  G.S = std::move(S);
  for (auto& pr : G.merge_pairs) {
    pr.first = old2new[pr.first];
    pr.second = old2new[pr.second];
  }
  for (auto& sl : G.split_slots) sl.first = old2new[sl.first];
  for (auto& a : G.added_spaces) a = old2new[a];

  G.lat.spaces.clear();
  G.index.clear();
  std::vector<std::string> collisions;
  for (const auto& sp : G.spaces) {
    SpaceInfo si;
    si.s = sp.s;
    si.n = sp.n;
    si.m_min = sp.m_min;
    si.dim = sp.dim;
    si.z_min = sp.z_min;
    G.lat.spaces.push_back(si);
    for (int j = 0; j < sp.dim; ++j) {
      auto key = std::make_pair(sp.n, sp.m_min + j);
      auto [it, fresh] = G.index.emplace(key, sp.s);
      if (!fresh) {
        std::ostringstream os;
        os << "state |" << key.first << ", " << key.second
           << "> claimed by both " << space_name(G.spaces[it->second])
           << " and " << space_name(sp);
        collisions.push_back(os.str());
      }
    }
  }
  if (!collisions.empty()) {
    throw ProfileError("lattice label collision", collisions);
  }
}

/// Height tables of one window of the curve: D = minimum of the height on
/// [z_min, z_max], S = signed square roots sampled on the step grid. The
/// sign flips at the leftmost minimizer; the top entry is synthesized as
/// -S[0] since both endpoints share a level by construction.
void window_tables(const ProfileCurve& prof, double z_min, int dim, double eps,
                   double& D_out, double& C_out, std::vector<double>& S_out) {
  const double z_max = z_min + eps * dim;
  double dmin = std::min(prof.rho(z_min), prof.rho(z_max));
  for (const auto& cp : prof.critical_points()) {
    if (cp.z > z_min + 1e-12 && cp.z < z_max - 1e-12) {
      dmin = std::min(dmin, cp.value);
    }
  }
  double zstar = z_max;
  const double vtol = 1e-9 * std::max(1.0, std::abs(dmin));
  for (const auto& cp : prof.critical_points()) {
    if (cp.z > z_min + 1e-12 && cp.z < z_max - 1e-12 &&
        cp.value <= dmin + vtol) {
      zstar = cp.z;
      break;  // critical points come in ascending z order
    }
  }
  S_out.assign(static_cast<size_t>(dim) + 1, 0.0);
  for (int r = 0; r <= dim; ++r) {
    const double z = z_min + eps * r;
    const double v = checked_sqrt(prof.rho(z) - dmin, "height tables");
    S_out[static_cast<size_t>(r)] = (z < zstar - 1e-12) ? v : -v;
  }
  S_out[static_cast<size_t>(dim)] = -S_out[0];
  C_out = S_out[0];
  D_out = dmin;
}

void add_entry(BlockOperator& op, const MultiLattice& G, int ss, int sj,
               int ts, int tj, double c) {
  if (c == 0.0) return;
  auto key = std::make_pair(ss, ts);
  auto it = op.blocks.find(key);
  if (it == op.blocks.end()) {
    it = op.blocks
             .emplace(key, Eigen::MatrixXcd::Zero(G.spaces[ts].dim,
                                                  G.spaces[ss].dim))
             .first;
  }
  it->second(tj, sj) = c;
}

/// Children of each space, in ascending column order.
std::vector<std::vector<int>> children_of(const MultiLattice& G) {
  std::vector<std::vector<int>> kids(G.spaces.size());
  for (const auto& sp : G.spaces) {
    if (sp.parent >= 0) kids[static_cast<size_t>(sp.parent)].push_back(sp.s);
  }
  for (auto& k : kids) {
    std::sort(k.begin(), k.end(), [&](int a, int b) {
      return G.spaces[a].m_min < G.spaces[b].m_min;
    });
  }
  return kids;
}

/// Largest entry magnitude in column `sj` of the blocks leaving space `ss`,
/// excluding position (ts, tj) when ts >= 0.
double col_off_max(const BlockOperator& A, int ss, int sj, int ts, int tj) {
  double m = 0.0;
  for (const auto& [key, mat] : A.blocks) {
    if (key.first != ss) continue;
    for (int r = 0; r < mat.rows(); ++r) {
      if (key.second == ts && r == tj) continue;
      m = std::max(m, std::abs(mat(r, sj)));
    }
  }
  return m;
}

std::complex<double> entry_at(const BlockOperator& A, int ss, int sj, int ts,
                              int tj) {
  auto it = A.blocks.find(std::make_pair(ss, ts));
  if (it == A.blocks.end()) return 0.0;
  return it->second(tj, sj);
}

}  // namespace

const char* to_string(Compromise c) {
  switch (c) {
    case Compromise::kNone: return "none";
    case Compromise::kMerge: return "merge";
    case Compromise::kSplit: return "split";
    case Compromise::kRemove: return "remove";
    case Compromise::kAdd: return "add";
  }
  return "none";
}

const char* to_string(HopMode m) {
  return m == HopMode::kOver ? "over" : "under";
}

Compromise compromise_from_string(const std::string& s) {
  if (s == "none") return Compromise::kNone;
  if (s == "merge") return Compromise::kMerge;
  if (s == "split") return Compromise::kSplit;
  if (s == "remove") return Compromise::kRemove;
  if (s == "add") return Compromise::kAdd;
  throw std::invalid_argument("unknown compromise: " + s);
}

HopMode hop_mode_from_string(const std::string& s) {
  if (s == "over") return HopMode::kOver;
  if (s == "under") return HopMode::kUnder;
  throw std::invalid_argument("unknown hop mode: " + s);
}

int MultiLattice::space_of(int n, int m) const {
  auto it = index.find(std::make_pair(n, m));
  return it == index.end() ? -1 : it->second;
}

MultiLattice build_G0(const ProfileCurve& prof, double eps, double y_max) {
  const auto ivs = enumerate_rep_intervals(prof, eps, y_max);
  if (ivs.empty()) {
    throw ProfileError("no representation intervals found");
  }
  const int n_iv = static_cast<int>(ivs.size());
  // Parents are strictly wider, so they sort after their children; walking
  // ids downward meets every parent before its children.
  std::vector<int> prov(n_iv, 0), mmin(n_iv, 0);
  for (int i = n_iv - 1; i >= 0; --i) {
    const int p = ivs[static_cast<size_t>(i)].parent;
    prov[static_cast<size_t>(i)] = p < 0 ? 0 : prov[static_cast<size_t>(p)] - 1;
  }
  const int shift = 1 - *std::min_element(prov.begin(), prov.end());
  for (int i = n_iv - 1; i >= 0; --i) {
    const auto& iv = ivs[static_cast<size_t>(i)];
    if (iv.parent < 0) {
      mmin[static_cast<size_t>(i)] = 0;
    } else {
      const auto& pv = ivs[static_cast<size_t>(iv.parent)];
      mmin[static_cast<size_t>(i)] =
          static_cast<int>(std::floor((iv.z_min - pv.z_min) / eps + 1e-9)) +
          mmin[static_cast<size_t>(iv.parent)];
    }
  }

  MultiLattice G;
  G.prof = &prof;
  G.eps = eps;
  G.y_max = y_max;
  G.lat.prof = &prof;
  G.lat.eps = eps;
  G.spaces.reserve(static_cast<size_t>(n_iv));
  G.D.resize(static_cast<size_t>(n_iv));
  G.C.resize(static_cast<size_t>(n_iv));
  G.S.resize(static_cast<size_t>(n_iv));
  for (int i = 0; i < n_iv; ++i) {
    const auto& iv = ivs[static_cast<size_t>(i)];
    MultiSpace sp;
    sp.s = i;
    sp.interval_id = iv.id;
    sp.topo = iv.topo;
    sp.n = prov[static_cast<size_t>(i)] + shift;
    sp.m_min = mmin[static_cast<size_t>(i)];
    sp.dim = iv.n;
    sp.z_min = iv.z_min;
    sp.parent = iv.parent;  // interval ids equal positions here
    sp.above_ceiling = iv.above_ceiling;
    G.spaces.push_back(sp);
    window_tables(prof, iv.z_min, iv.n, eps, G.D[static_cast<size_t>(i)],
                  G.C[static_cast<size_t>(i)], G.S[static_cast<size_t>(i)]);
  }
  finalize_spaces(G);
  return G;
}

ViolationReport check_violations(const MultiLattice& G) {
  ViolationReport rep;
  const auto kids = children_of(G);
  for (const auto& sp : G.spaces) {
    const auto& ch = kids[static_cast<size_t>(sp.s)];
    if (ch.empty()) continue;
    ParentFit fit;
    fit.parent = sp.s;
    fit.children = ch;
    fit.dim = sp.dim;
    int sum = 0;
    for (int c : ch) sum += G.spaces[static_cast<size_t>(c)].dim;
    fit.child_dim_sum = sum;
    fit.over_ok = sp.dim >= sum + static_cast<int>(ch.size());
    fit.under_ok = sp.dim == sum + 1;
    if (!fit.over_ok) rep.over_violations.push_back(sp.s);
    if (!fit.under_ok) rep.under_violations.push_back(sp.s);
    rep.fits.push_back(std::move(fit));
  }
  return rep;
}

namespace {

/// Interior columns of `p` not covered by any child, in ascending order.
/// The top column m_max is excluded: no hop needs a state there.
std::vector<int> uncovered_slots(const MultiLattice& G,
                                 const std::vector<int>& children, int p) {
  const auto& sp = G.spaces[static_cast<size_t>(p)];
  std::set<int> covered;
  for (int c : children) {
    const auto& cs = G.spaces[static_cast<size_t>(c)];
    for (int m = cs.m_min; m <= cs.m_max(); ++m) covered.insert(m);
  }
  std::vector<int> slots;
  for (int m = sp.m_min; m <= sp.m_max() - 1; ++m) {
    if (!covered.count(m)) slots.push_back(m);
  }
  return slots;
}

MultiLattice apply_merge(const MultiLattice& G) {
  MultiLattice out = G;
  out.compromise = Compromise::kMerge;
  const auto kids = children_of(out);
  for (const auto& sp : out.spaces) {
    const auto& ch = kids[static_cast<size_t>(sp.s)];
    for (size_t i = 0; i + 1 < ch.size(); ++i) {
      const auto& a = out.spaces[static_cast<size_t>(ch[i])];
      const auto& b = out.spaces[static_cast<size_t>(ch[i + 1])];
      if (b.m_min == a.m_max() + 1) {
        out.merge_pairs.emplace_back(a.s, b.s);
        std::ostringstream os;
        os << "merge seam between " << space_name(a) << " and "
           << space_name(b);
        out.annotations.push_back(os.str());
      }
    }
  }
  return out;
}

MultiLattice apply_split(const MultiLattice& G) {
  MultiLattice out = G;
  out.compromise = Compromise::kSplit;
  const auto kids = children_of(out);
  for (const auto& sp : out.spaces) {
    const auto& ch = kids[static_cast<size_t>(sp.s)];
    if (ch.empty()) continue;
    for (int m : uncovered_slots(out, ch, sp.s)) {
      out.split_slots.emplace_back(sp.s, m);
      std::ostringstream os;
      os << "split slot at column " << m << " of " << space_name(sp);
      out.annotations.push_back(os.str());
    }
  }
  return out;
}

MultiLattice apply_add(const MultiLattice& G) {
  MultiLattice out = G;
  out.compromise = Compromise::kAdd;
  const auto kids = children_of(out);
  const int old_count = static_cast<int>(out.spaces.size());
  for (int p = 0; p < old_count; ++p) {
    const auto& ch = kids[static_cast<size_t>(p)];
    if (ch.empty()) continue;
    const auto sp = out.spaces[static_cast<size_t>(p)];
    for (int m : uncovered_slots(out, ch, p)) {
      MultiSpace u;
      u.s = static_cast<int>(out.spaces.size());
      u.interval_id = -1;
      u.topo = -1;
      u.n = sp.n - 1;
      u.m_min = m;
      u.dim = 1;
      u.z_min = sp.z_min + out.eps * (m - sp.m_min);
      u.parent = p;
      u.added = true;
      out.spaces.push_back(u);
      out.D.push_back(out.prof ? out.prof->rho(u.z_min) : 0.0);
      out.C.push_back(0.0);
      out.S.push_back({0.0, 0.0});
      out.added_spaces.push_back(u.s);
      std::ostringstream os;
      os << "added one-state space at |" << u.n << ", " << m
         << "> filling a slot of " << space_name(sp);
      out.annotations.push_back(os.str());
    }
  }
  finalize_spaces(out);
  return out;
}

MultiLattice apply_remove(const MultiLattice& G) {
  if (!G.prof) {
    throw std::invalid_argument(
        "apply_compromise: remove needs a curve-built lattice");
  }
  const auto ivs = enumerate_rep_intervals(*G.prof, G.eps, G.y_max);
  const int n_sp = static_cast<int>(G.spaces.size());
  std::vector<bool> alive(static_cast<size_t>(n_sp), true);
  std::vector<int> parent_cur(static_cast<size_t>(n_sp), -1);
  for (int i = 0; i < n_sp; ++i) {
    parent_cur[static_cast<size_t>(i)] = G.spaces[static_cast<size_t>(i)].parent;
  }
  auto inherited = [&](int c) {
    const int p = parent_cur[static_cast<size_t>(c)];
    if (p < 0) return false;
    const int iv = G.spaces[static_cast<size_t>(c)].interval_id;
    return ivs[static_cast<size_t>(iv)].parent !=
           G.spaces[static_cast<size_t>(p)].interval_id;
  };

  std::vector<int> order;
  std::vector<int> m_cur(static_cast<size_t>(n_sp), 0);
  while (true) {
    order.clear();
    for (int i = 0; i < n_sp; ++i) {
      if (alive[static_cast<size_t>(i)]) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return G.spaces[static_cast<size_t>(a)].dim >
             G.spaces[static_cast<size_t>(b)].dim;
    });
    // Column placement, parents first: floors of the endpoint offsets, and
    // for sibling groups holding re-parented children a one-column gap is
    // forced between adjacent child blocks. Orphaned subtrees (several
    // roots) are placed the same way against the leftmost root so their
    // label spans stay disjoint.
    std::vector<std::vector<int>> kids(static_cast<size_t>(n_sp));
    std::vector<int> roots;
    for (int i : order) {
      const int p = parent_cur[static_cast<size_t>(i)];
      if (p >= 0) kids[static_cast<size_t>(p)].push_back(i);
      else roots.push_back(i);
    }
    std::sort(roots.begin(), roots.end(), [&](int a, int b) {
      return G.spaces[static_cast<size_t>(a)].z_min <
             G.spaces[static_cast<size_t>(b)].z_min;
    });
    {
      int prev_end = std::numeric_limits<int>::min();
      for (int r : roots) {
        int m = 0;
        if (prev_end != std::numeric_limits<int>::min()) {
          const double off = G.spaces[static_cast<size_t>(r)].z_min -
                             G.spaces[static_cast<size_t>(roots[0])].z_min;
          m = std::max(static_cast<int>(std::floor(off / G.eps + 1e-9)),
                       prev_end + 2);
        }
        m_cur[static_cast<size_t>(r)] = m;
        prev_end = m + G.spaces[static_cast<size_t>(r)].dim - 1;
      }
    }
    for (auto& k : kids) {
      std::sort(k.begin(), k.end(), [&](int a, int b) {
        return G.spaces[static_cast<size_t>(a)].z_min <
               G.spaces[static_cast<size_t>(b)].z_min;
      });
    }
    for (int p : order) {
      const auto& ch = kids[static_cast<size_t>(p)];
      if (ch.empty()) continue;
      bool grp_inh = false;
      for (int c : ch) grp_inh = grp_inh || inherited(c);
      int prev_end = std::numeric_limits<int>::min();
      for (int c : ch) {
        const double off = G.spaces[static_cast<size_t>(c)].z_min -
                           G.spaces[static_cast<size_t>(p)].z_min;
        int m = static_cast<int>(std::floor(off / G.eps + 1e-9)) +
                m_cur[static_cast<size_t>(p)];
        if (grp_inh && prev_end != std::numeric_limits<int>::min()) {
          m = std::max(m, prev_end + 2);
        }
        m_cur[static_cast<size_t>(c)] = m;
        prev_end = m + G.spaces[static_cast<size_t>(c)].dim - 1;
      }
    }
    // Deletion conditions: child footprints do not fit by dimension, or the
    // placed blocks overflow past the parent's top column.
    std::vector<int> bad;
    for (int p : order) {
      const auto& ch = kids[static_cast<size_t>(p)];
      if (ch.empty()) continue;
      int sum = 0, last_end = std::numeric_limits<int>::min();
      for (int c : ch) {
        sum += G.spaces[static_cast<size_t>(c)].dim;
        last_end = std::max(
            last_end, m_cur[static_cast<size_t>(c)] +
                          G.spaces[static_cast<size_t>(c)].dim - 1);
      }
      const auto& sp = G.spaces[static_cast<size_t>(p)];
      const bool dim_ok = sp.dim >= sum + static_cast<int>(ch.size());
      const bool fit_ok =
          last_end + 1 <= m_cur[static_cast<size_t>(p)] + sp.dim - 1;
      if (!dim_ok || !fit_ok) bad.push_back(p);
    }
    if (bad.empty()) break;
    for (int p : bad) alive[static_cast<size_t>(p)] = false;
    for (int i = 0; i < n_sp; ++i) {
      if (!alive[static_cast<size_t>(i)]) continue;
      int q = parent_cur[static_cast<size_t>(i)];
      while (q >= 0 && !alive[static_cast<size_t>(q)]) {
        q = parent_cur[static_cast<size_t>(q)];
      }
      parent_cur[static_cast<size_t>(i)] = q;
    }
  }

  MultiLattice out;
  out.prof = G.prof;
  out.eps = G.eps;
  out.y_max = G.y_max;
  out.compromise = Compromise::kRemove;
  out.lat.prof = G.lat.prof;
  out.lat.eps = G.eps;
  std::vector<int> keep;
  for (int i = 0; i < n_sp; ++i) {
    if (alive[static_cast<size_t>(i)]) keep.push_back(i);
    else out.removed_intervals.push_back(
        G.spaces[static_cast<size_t>(i)].interval_id);
  }
  // Levels: parents first in descending width, children one below, then
  // re-anchor the minimum at 1.
  std::sort(keep.begin(), keep.end(), [&](int a, int b) {
    return G.spaces[static_cast<size_t>(a)].dim >
           G.spaces[static_cast<size_t>(b)].dim;
  });
  std::vector<int> prov(static_cast<size_t>(n_sp), 0);
  for (int i : keep) {
    const int p = parent_cur[static_cast<size_t>(i)];
    prov[static_cast<size_t>(i)] = p < 0 ? 0 : prov[static_cast<size_t>(p)] - 1;
  }
  int minn = 0;
  for (int i : keep) minn = std::min(minn, prov[static_cast<size_t>(i)]);
  std::vector<int> old2new(static_cast<size_t>(n_sp), -1);
  for (int i : keep) {
    const auto& g = G.spaces[static_cast<size_t>(i)];
    MultiSpace sp = g;
    sp.s = static_cast<int>(out.spaces.size());
    sp.n = prov[static_cast<size_t>(i)] + 1 - minn;
    sp.m_min = m_cur[static_cast<size_t>(i)];
    sp.parent = parent_cur[static_cast<size_t>(i)];  // remapped below
    old2new[static_cast<size_t>(i)] = sp.s;
    out.spaces.push_back(sp);
    out.D.push_back(G.D[static_cast<size_t>(i)]);
    out.C.push_back(G.C[static_cast<size_t>(i)]);
    out.S.push_back(G.S[static_cast<size_t>(i)]);
    if (parent_cur[static_cast<size_t>(i)] >= 0 && inherited(i)) {
      const auto& pp =
          G.spaces[static_cast<size_t>(parent_cur[static_cast<size_t>(i)])];
      const double delta =
          (g.z_min - pp.z_min) -
          G.eps * (m_cur[static_cast<size_t>(i)] -
                   m_cur[static_cast<size_t>(pp.s)]);
      if (std::abs(delta) > 1e-12) {
        std::ostringstream os;
        os << "position-X0 residue: re-parented window of width " << g.dim
           << " sits " << fmt(delta)
           << " off the step grid of its new parent (width " << pp.dim << ")";
        out.annotations.push_back(os.str());
      }
    }
  }
  int n_roots = 0;
  for (auto& sp : out.spaces) {
    if (sp.parent >= 0) sp.parent = old2new[static_cast<size_t>(sp.parent)];
    else ++n_roots;
  }
  if (n_roots > 1) {
    std::ostringstream os;
    os << "removal left " << n_roots
       << " disconnected components; their root windows are re-anchored "
          "with a one-column gap";
    out.annotations.push_back(os.str());
  }
  finalize_spaces(out);
  return out;
}

}  // namespace

MultiLattice apply_compromise(const MultiLattice& G, Compromise kind) {
  if (kind == Compromise::kNone) return G;
  if (G.compromise != Compromise::kNone) {
    throw std::invalid_argument(
        "apply_compromise: lattice already carries a compromise");
  }
  switch (kind) {
    case Compromise::kMerge: return apply_merge(G);
    case Compromise::kSplit: return apply_split(G);
    case Compromise::kAdd: return apply_add(G);
    case Compromise::kRemove: return apply_remove(G);
    case Compromise::kNone: break;
  }
  return G;
}

MultiHops hopping_operators(const MultiLattice& G, HopMode mode) {
  const bool over = mode == HopMode::kOver;
  if ((G.compromise == Compromise::kMerge ||
       G.compromise == Compromise::kRemove) &&
      !over) {
    throw std::invalid_argument(
        std::string("hopping_operators: a ") + to_string(G.compromise) +
        " lattice carries over-hops only");
  }
  if ((G.compromise == Compromise::kSplit ||
       G.compromise == Compromise::kAdd) &&
      over) {
    throw std::invalid_argument(
        std::string("hopping_operators: a ") + to_string(G.compromise) +
        " lattice carries under-hops only");
  }

  MultiHops H;
  H.mode = mode;
  H.ap = bo_zero(over ? "a+" : "a+'");
  H.am = bo_zero(over ? "a-" : "a-'");
  H.bp = bo_zero(over ? "b+" : "b+'");
  H.bm = bo_zero(over ? "b-" : "b-'");
  H.Xp = bo_zero("X+");
  H.Xm = bo_zero("X-");

  int top = 0;
  for (const auto& sp : G.spaces) top = std::max(top, sp.n);

  for (const auto& sp : G.spaces) {
    const int s = sp.s;
    const int n = sp.n;
    if (over && n == top) {
      std::ostringstream os;
      os << "up-hops from " << space_name(sp)
         << " truncated at the enumeration ceiling";
      H.truncation_notes.push_back(os.str());
    }
    if (!over && sp.parent < 0) {
      std::ostringstream os;
      os << "up-hops from the root " << space_name(sp)
         << " are zero rows (no window above)";
      H.truncation_notes.push_back(os.str());
    }
    for (int j = 0; j < sp.dim; ++j) {
      const int m = sp.m_min + j;
      if (over) {
        int t = G.space_of(n + 1, m + 1);
        if (t >= 0) {
          add_entry(H.ap, G, s, j, t, m + 1 - G.spaces[static_cast<size_t>(t)].m_min,
                    checked_sqrt(G.C[static_cast<size_t>(s)] - G.Sval(s, m + 1), "a+"));
        }
        t = G.space_of(n + 1, m);
        if (t >= 0) {
          add_entry(H.bp, G, s, j, t, m - G.spaces[static_cast<size_t>(t)].m_min,
                    checked_sqrt(G.C[static_cast<size_t>(s)] + G.Sval(s, m), "b+"));
        }
        t = G.space_of(n - 1, m - 1);
        if (t >= 0) {
          add_entry(H.am, G, s, j, t, m - 1 - G.spaces[static_cast<size_t>(t)].m_min,
                    checked_sqrt(G.C[static_cast<size_t>(t)] - G.Sval(t, m), "a-"));
        }
        t = G.space_of(n - 1, m);
        if (t >= 0) {
          add_entry(H.bm, G, s, j, t, m - G.spaces[static_cast<size_t>(t)].m_min,
                    checked_sqrt(G.C[static_cast<size_t>(t)] + G.Sval(t, m), "b-"));
        }
      } else {
        const int p = sp.parent;
        if (p >= 0) {
          // Up-hops read the parent window's table. Entries into inserted
          // one-state spaces are skipped: their zero table cannot return
          // the value, which would break the adjoint pairing.
          int t = G.space_of(n + 1, m + 1);
          if (t >= 0 && !G.spaces[static_cast<size_t>(t)].added) {
            add_entry(H.ap, G, s, j, t, m + 1 - G.spaces[static_cast<size_t>(t)].m_min,
                      checked_sqrt(G.C[static_cast<size_t>(p)] - G.Sval(p, m + 1), "a+'"));
          }
          t = G.space_of(n + 1, m);
          if (t >= 0 && !G.spaces[static_cast<size_t>(t)].added) {
            add_entry(H.bp, G, s, j, t, m - G.spaces[static_cast<size_t>(t)].m_min,
                      checked_sqrt(G.C[static_cast<size_t>(p)] + G.Sval(p, m + 1), "b+'"));
          }
        }
        if (!sp.added) {
          int t = G.space_of(n - 1, m - 1);
          if (t >= 0) {
            add_entry(H.am, G, s, j, t, m - 1 - G.spaces[static_cast<size_t>(t)].m_min,
                      checked_sqrt(G.C[static_cast<size_t>(s)] - G.Sval(s, m), "a-'"));
          }
          t = G.space_of(n - 1, m);
          if (t >= 0) {
            add_entry(H.bm, G, s, j, t, m - G.spaces[static_cast<size_t>(t)].m_min,
                      checked_sqrt(G.C[static_cast<size_t>(s)] + G.Sval(s, m + 1), "b-'"));
          }
        }
      }
      if (j + 1 < sp.dim) {
        const double c2 = G.C[static_cast<size_t>(s)] * G.C[static_cast<size_t>(s)] -
                          G.Sval(s, m + 1) * G.Sval(s, m + 1);
        const double c = checked_sqrt(c2, "X+");
        add_entry(H.Xp, G, s, j, s, j + 1, c);
        add_entry(H.Xm, G, s, j + 1, s, j, c);
      }
    }
  }
  H.X0 = bo_diag(G.lat, ce_x0());
  H.X0.name = "X0";
  H.N0 = bo_diag(G.lat, ce_n0());
  H.N0.name = "N0";
  return H;
}

ANReport is_AN_representation(const MultiLattice& G, HopMode mode,
                              double tol) {
  const MultiHops H = hopping_operators(G, mode);
  const bool over = mode == HopMode::kOver;
  const BlockOperator Xp =
      over ? bo_compose(H.bm, H.ap) : bo_compose(H.ap, H.bm);
  const BlockOperator Xm =
      over ? bo_compose(H.am, H.bp) : bo_compose(H.bp, H.am);
  const BlockOperator Pmp = bo_compose(Xm, Xp);
  const BlockOperator Ppm = bo_compose(Xp, Xm);
  const BlockOperator Qn =
      bo_sub(bo_compose(H.N0, Xp), bo_compose(Xp, H.N0));
  const BlockOperator Rs = bo_sub(
      bo_sub(bo_compose(H.X0, Xp), bo_compose(Xp, H.X0)),
      bo_scale(Xp, G.eps));

  int top = 0;
  for (const auto& sp : G.spaces) top = std::max(top, sp.n);

  const int n_sp = static_cast<int>(G.spaces.size());
  std::vector<std::vector<ANDefect>> defects(static_cast<size_t>(n_sp));
  std::vector<double> worst(static_cast<size_t>(n_sp), 0.0);

  par::parallel_for(n_sp, [&](int s) {
    const auto& sp = G.spaces[static_cast<size_t>(s)];
    if (over && sp.n == top) return;  // up-hops truncated by the ceiling
    auto note = [&](int m, const char* check, double dev) {
      worst[static_cast<size_t>(s)] = std::max(worst[static_cast<size_t>(s)], dev);
      if (dev > tol) {
        defects[static_cast<size_t>(s)].push_back(ANDefect{s, m, check, dev});
      }
    };
    const double C = G.C[static_cast<size_t>(s)];
    for (int j = 0; j < sp.dim; ++j) {
      const int m = sp.m_min + j;
      {
        const double expect = C * C - G.Sval(s, m + 1) * G.Sval(s, m + 1);
        const double dev =
            std::max(std::abs(entry_at(Pmp, s, j, s, j) - expect),
                     col_off_max(Pmp, s, j, s, j));
        note(m, "X- X+ product", dev);
      }
      {
        const double expect = C * C - G.Sval(s, m) * G.Sval(s, m);
        const double dev =
            std::max(std::abs(entry_at(Ppm, s, j, s, j) - expect),
                     col_off_max(Ppm, s, j, s, j));
        note(m, "X+ X- product", dev);
      }
      note(m, "[N0, X+] = 0", col_off_max(Qn, s, j, -1, -1));
      note(m, "X0 step shift on X+", col_off_max(Rs, s, j, -1, -1));
      if (j == sp.dim - 1) {
        note(m, "X+ end annihilation", col_off_max(Xp, s, j, -1, -1));
      }
      if (j == 0) {
        note(m, "X- end annihilation", col_off_max(Xm, s, j, -1, -1));
      }
    }
  });

  ANReport rep;
  rep.tol = tol;
  rep.space_ok.assign(static_cast<size_t>(n_sp), 1);
  for (int s = 0; s < n_sp; ++s) {
    rep.worst = std::max(rep.worst, worst[static_cast<size_t>(s)]);
    if (!defects[static_cast<size_t>(s)].empty()) {
      rep.space_ok[static_cast<size_t>(s)] = 0;
      for (auto& d : defects[static_cast<size_t>(s)]) {
        rep.defects.push_back(std::move(d));
      }
    }
  }
  rep.is_AN = rep.defects.empty();
  return rep;
}

ReflectsReport reflects_topology(const MultiLattice& G,
                                 const ProfileCurve& prof) {
  ReflectsReport rep;
  const auto& topo = prof.topology_intervals();
  // Bullet 1: every branch hosts a window. A window kept above the
  // enumeration ceiling exists only to coordinate columns and does not
  // count as hosting.
  for (const auto& t : topo) {
    int host = -1;
    bool ceiling_only = false;
    for (const auto& sp : G.spaces) {
      if (sp.added || sp.topo != t.id) continue;
      if (sp.above_ceiling) {
        ceiling_only = true;
        continue;
      }
      host = sp.s;
      break;
    }
    if (host >= 0) {
      std::ostringstream os;
      os << "branch " << t.id << " hosts " << space_name(G.spaces[static_cast<size_t>(host)]);
      rep.witnesses.push_back(os.str());
    } else {
      std::ostringstream os;
      os << "branch " << t.id
         << (ceiling_only ? " hosts only a window above the enumeration ceiling"
                          : " hosts no window");
      rep.failures.push_back(os.str());
    }
  }
  // Bullet 2: parent links stay within a branch or cross one birth.
  for (const auto& sp : G.spaces) {
    if (sp.added || sp.parent < 0) continue;
    const auto& pp = G.spaces[static_cast<size_t>(sp.parent)];
    if (pp.added) continue;
    const int t = sp.topo;
    const int pt = topo[static_cast<size_t>(t)].parent;
    if (pp.topo != t && pp.topo != pt) {
      std::ostringstream os;
      os << space_name(sp) << " of branch " << t << " hangs under "
         << space_name(pp) << " of branch " << pp.topo
         << ", which is neither its branch nor that branch's parent";
      rep.failures.push_back(os.str());
    }
  }
  // Bullet 3: each non-root branch is crossed exactly once.
  for (const auto& t : topo) {
    if (t.parent < 0) continue;
    std::vector<int> crossers;
    for (const auto& sp : G.spaces) {
      if (sp.added || sp.parent < 0 || sp.topo != t.id) continue;
      const auto& pp = G.spaces[static_cast<size_t>(sp.parent)];
      if (!pp.added && pp.topo == t.parent) crossers.push_back(sp.s);
    }
    if (crossers.size() == 1) {
      std::ostringstream os;
      os << "branch " << t.id << " crosses into branch " << t.parent
         << " at " << space_name(G.spaces[static_cast<size_t>(crossers[0])]);
      rep.witnesses.push_back(os.str());
    } else {
      std::ostringstream os;
      os << "branch " << t.id << " crosses into branch " << t.parent << " "
         << crossers.size() << " times (expected exactly once)";
      rep.failures.push_back(os.str());
    }
  }
  rep.reflects = rep.failures.empty();
  return rep;
}

TopologyChangeMaps topo_change_maps(const MultiLattice& G, int parent) {
  if (parent < 0 || parent >= static_cast<int>(G.spaces.size())) {
    throw std::invalid_argument("topo_change_maps: no such space");
  }
  const auto kids = children_of(G);
  const auto& ch = kids[static_cast<size_t>(parent)];
  if (ch.empty()) {
    throw std::invalid_argument("topo_change_maps: space has no children");
  }
  TopologyChangeMaps M;
  M.parent = parent;
  M.children = ch;
  M.parent_dim = G.spaces[static_cast<size_t>(parent)].dim;
  int total = 0;
  for (int c : ch) {
    M.child_offset.push_back(total);
    total += G.spaces[static_cast<size_t>(c)].dim;
  }
  M.child_total = total;
  M.Ap = Eigen::MatrixXd::Zero(M.parent_dim, total);
  M.Bp = Eigen::MatrixXd::Zero(M.parent_dim, total);
  M.Da = Eigen::VectorXd::Zero(total);
  M.Db = Eigen::VectorXd::Zero(total);
  const int pm = G.spaces[static_cast<size_t>(parent)].m_min;
  for (size_t ci = 0; ci < ch.size(); ++ci) {
    const auto& cs = G.spaces[static_cast<size_t>(ch[ci])];
    const double Cc = G.C[static_cast<size_t>(cs.s)];
    for (int j = 0; j < cs.dim; ++j) {
      const int m = cs.m_min + j;
      const int col = M.child_offset[ci] + j;
      const double da = Cc - G.Sval(cs.s, m + 1);
      const double db = Cc + G.Sval(cs.s, m);
      M.Da(col) = da;
      M.Db(col) = db;
      M.Ap(m + 1 - pm, col) = checked_sqrt(da, "raising intertwiner");
      M.Bp(m - pm, col) = checked_sqrt(db, "column intertwiner");
    }
  }
  return M;
}

Eigen::MatrixXcd TopologyChangeMaps::A_plus(const Eigen::MatrixXcd& F) const {
  const Eigen::MatrixXcd A = Ap.cast<std::complex<double>>();
  const Eigen::VectorXcd dinv = Da.cwiseInverse().cast<std::complex<double>>();
  return A * dinv.asDiagonal() * F * A.adjoint();
}

Eigen::MatrixXcd TopologyChangeMaps::A_minus(const Eigen::MatrixXcd& F) const {
  const Eigen::MatrixXcd A = Ap.cast<std::complex<double>>();
  const Eigen::VectorXcd dinv = Da.cwiseInverse().cast<std::complex<double>>();
  return A.adjoint() * F * A * dinv.asDiagonal();
}

Eigen::MatrixXcd TopologyChangeMaps::B_plus(const Eigen::MatrixXcd& F) const {
  const Eigen::MatrixXcd B = Bp.cast<std::complex<double>>();
  const Eigen::VectorXcd dinv = Db.cwiseInverse().cast<std::complex<double>>();
  return B * dinv.asDiagonal() * F * B.adjoint();
}

Eigen::MatrixXcd TopologyChangeMaps::B_minus(const Eigen::MatrixXcd& F) const {
  const Eigen::MatrixXcd B = Bp.cast<std::complex<double>>();
  const Eigen::VectorXcd dinv = Db.cwiseInverse().cast<std::complex<double>>();
  return B.adjoint() * F * B * dinv.asDiagonal();
}

MultiLattice build_gmtl(const GmtlSpec& spec) {
  std::vector<std::string> violations;
  for (size_t i = 0; i < spec.spaces.size(); ++i) {
    const auto& g = spec.spaces[i];
    const int dim = g.m_max - g.m_min + 1;
    if (g.n < 1 || dim < 1) {
      violations.push_back("space " + std::to_string(i) +
                           ": level must be >= 1 and m_max >= m_min");
      continue;
    }
    if (static_cast<int>(g.S.size()) != dim + 1) {
      violations.push_back("space " + std::to_string(i) + ": expected " +
                           std::to_string(dim + 1) + " table entries, got " +
                           std::to_string(g.S.size()));
      continue;
    }
    if (std::abs(std::abs(g.S.front()) - g.C) > 1e-9) {
      violations.push_back("space " + std::to_string(i) + ", column " +
                           std::to_string(g.m_min) +
                           ": |S| differs from C (" + fmt(g.S.front()) +
                           " vs " + fmt(g.C) + ")");
    }
    if (std::abs(std::abs(g.S.back()) - g.C) > 1e-9) {
      violations.push_back("space " + std::to_string(i) + ", column " +
                           std::to_string(g.m_max + 1) +
                           ": |S| differs from C (" + fmt(g.S.back()) +
                           " vs " + fmt(g.C) + ")");
    }
    for (int r = 0; r <= dim; ++r) {
      if (std::abs(g.S[static_cast<size_t>(r)]) > g.C + 1e-12) {
        violations.push_back("space " + std::to_string(i) + ", column " +
                             std::to_string(g.m_min + r) +
                             ": |S| exceeds C, no real hop coefficient");
      }
    }
  }
  if (!violations.empty()) {
    throw ProfileError("table lattice validation failed", violations);
  }

  MultiLattice G;
  G.eps = spec.eps;
  G.lat.eps = spec.eps;
  for (size_t i = 0; i < spec.spaces.size(); ++i) {
    const auto& g = spec.spaces[i];
    MultiSpace sp;
    sp.s = static_cast<int>(i);
    sp.n = g.n;
    sp.m_min = g.m_min;
    sp.dim = g.m_max - g.m_min + 1;
    sp.z_min = g.z_min.value_or(spec.eps * g.m_min);
    G.spaces.push_back(sp);
    G.D.push_back(0.0);
    G.C.push_back(g.C);
    G.S.push_back(g.S);
  }
  // Parents by containment one level up (used by under-hops and fits).
  for (auto& sp : G.spaces) {
    for (const auto& q : G.spaces) {
      if (q.n == sp.n + 1 && q.m_min <= sp.m_min && sp.m_max() <= q.m_max()) {
        sp.parent = q.s;
        break;
      }
    }
  }
  finalize_spaces(G);
  return G;
}

GmtlSpec export_gmtl(const MultiLattice& G) {
  GmtlSpec spec;
  spec.eps = G.eps;
  for (const auto& sp : G.spaces) {
    GmtlSpace g;
    g.n = sp.n;
    g.m_min = sp.m_min;
    g.m_max = sp.m_max();
    g.C = G.C[static_cast<size_t>(sp.s)];
    g.S = G.S[static_cast<size_t>(sp.s)];
    g.z_min = sp.z_min;
    spec.spaces.push_back(std::move(g));
  }
  return spec;
}

}  // namespace ncsr
