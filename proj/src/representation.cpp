#include "ncsr/representation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ncsr {

namespace {

/// Square root with the shared clamp for radicands that are zero up to
/// floating error; genuinely negative values indicate inconsistent data.
double checked_sqrt(double r, const char* what) {
  if (r < -1e-12) {
    std::ostringstream os;
    os << "negative square-root argument (" << r << ") while building " << what;
    throw ProfileError(os.str());
  }
  return r > 0.0 ? std::sqrt(r) : 0.0;
}

void bo_accumulate(BlockOperator& out, std::pair<int, int> key,
                   const Eigen::MatrixXcd& m) {
  auto it = out.blocks.find(key);
  if (it == out.blocks.end()) {
    out.blocks.emplace(key, m);
  } else {
    it->second += m;
  }
}

}  // namespace

int Lattice::total_dim() const {
  int t = 0;
  for (const auto& s : spaces) t += s.dim;
  return t;
}

int Lattice::space_at_level(int n) const {
  int found = -1;
  for (const auto& s : spaces) {
    if (s.n == n) {
      if (found >= 0) return -1;  // ambiguous
      found = s.s;
    }
  }
  return found;
}

EvalCtx Lattice::eval_ctx() const {
  EvalCtx e;
  e.prof = prof;
  e.triv = triv;
  e.R = R.value_or(std::numeric_limits<double>::quiet_NaN());
  e.eps = eps;
  return e;
}

const Eigen::MatrixXcd* BlockOperator::block(int src, int dst) const {
  auto it = blocks.find({src, dst});
  return it == blocks.end() ? nullptr : &it->second;
}

BlockOperator bo_zero(std::string name) {
  BlockOperator b;
  b.name = std::move(name);
  return b;
}

BlockOperator bo_identity(const Lattice& lat) {
  BlockOperator b = bo_zero("1");
  for (const auto& s : lat.spaces) {
    b.blocks.emplace(std::make_pair(s.s, s.s),
                     Eigen::MatrixXcd::Identity(s.dim, s.dim));
  }
  return b;
}

BlockOperator bo_diag(const Lattice& lat, const CE& f) {
  BlockOperator b = bo_zero("diag");
  EvalCtx ectx = lat.eval_ctx();
  for (const auto& s : lat.spaces) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(s.dim, s.dim);
    for (int j = 0; j < s.dim; ++j) {
      m(j, j) = ce_eval(f, lat.x0(s.s, j), lat.n0(s.s), ectx);
    }
    b.blocks.emplace(std::make_pair(s.s, s.s), std::move(m));
  }
  return b;
}

BlockOperator bo_compose(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator out = bo_zero(a.name + "*" + b.name);
  for (const auto& [kb, mb] : b.blocks) {
    const auto [src, mid] = kb;
    for (const auto& [ka, ma] : a.blocks) {
      if (ka.first != mid) continue;
      bo_accumulate(out, {src, ka.second}, ma * mb);
    }
  }
  return out;
}

BlockOperator bo_add(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator out = a;
  for (const auto& [k, m] : b.blocks) bo_accumulate(out, k, m);
  return out;
}

BlockOperator bo_sub(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator out = a;
  for (const auto& [k, m] : b.blocks) bo_accumulate(out, k, -m);
  return out;
}

BlockOperator bo_scale(const BlockOperator& a, std::complex<double> s) {
  BlockOperator out = a;
  for (auto& [k, m] : out.blocks) m *= s;
  return out;
}

BlockOperator bo_adjoint(const BlockOperator& a) {
  BlockOperator out = bo_zero(a.name + "^+");
  for (const auto& [k, m] : a.blocks) {
    out.blocks.emplace(std::make_pair(k.second, k.first), m.adjoint().eval());
  }
  return out;
}

double bo_max_abs(const BlockOperator& a, std::string* where) {
  double best = 0.0;
  for (const auto& [k, m] : a.blocks) {
    for (int c = 0; c < m.cols(); ++c) {
      for (int r = 0; r < m.rows(); ++r) {
        double v = std::abs(m(r, c));
        if (v > best) {
          best = v;
          if (where != nullptr) {
            std::ostringstream os;
            os << "block (" << k.first << "->" << k.second << ") entry (" << r
               << "," << c << ")";
            *where = os.str();
          }
        }
      }
    }
  }
  return best;
}

double bo_diff_max(const BlockOperator& a, const BlockOperator& b,
                   std::string* where) {
  BlockOperator d = bo_sub(a, b);
  return bo_max_abs(d, where);
}

double bo_diff_max(const Lattice& lat, const BlockOperator& a,
                   const BlockOperator& b, int src_n_cap, std::string* where) {
  BlockOperator d = bo_sub(a, b);
  if (src_n_cap >= 0) {
    for (auto it = d.blocks.begin(); it != d.blocks.end();) {
      int src_n = lat.spaces[static_cast<size_t>(it->first.first)].n;
      if (src_n > src_n_cap) {
        it = d.blocks.erase(it);
      } else {
        ++it;
      }
    }
  }
  return bo_max_abs(d, where);
}

Eigen::MatrixXcd bo_dense(const Lattice& lat, const BlockOperator& a) {
  std::vector<int> off(lat.spaces.size() + 1, 0);
  for (size_t i = 0; i < lat.spaces.size(); ++i) {
    off[i + 1] = off[i] + lat.spaces[i].dim;
  }
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(off.back(), off.back());
  for (const auto& [k, blk] : a.blocks) {
    m.block(off[static_cast<size_t>(k.second)], off[static_cast<size_t>(k.first)],
            blk.rows(), blk.cols()) += blk;
  }
  return m;
}

StandardRep standard_rep(const ProfileCurve& prof, const RepInterval& J,
                         double eps, Alg kind, std::optional<double> R) {
  if (J.n < 1) throw ProfileError("standard_rep: interval must hold at least one state");
  if (std::abs((J.z_max - J.z_min) - J.n * eps) > 1e-9) {
    throw ProfileError("standard_rep: interval width is not an integer number of steps");
  }
  double scale = std::max({1.0, std::abs(prof.rho(J.z_min)), std::abs(prof.rho(J.z_max))});
  if (std::abs(prof.rho(J.z_min) - prof.rho(J.z_max)) > 1e-9 * scale) {
    throw ProfileError("standard_rep: endpoint heights differ");
  }
  if (kind == Alg::kLadderR) {
    if (!R.has_value() || std::abs(*R - J.z_min) > 1e-9) {
      throw ProfileError("no standard representation exists: radius constant must equal z_min");
    }
  }

  StandardRep rep;
  rep.J = J;
  rep.dim = J.n;
  rep.eps = eps;
  rep.kind = kind;
  rep.r_compatible = R.has_value() && std::abs(*R - J.z_min) <= 1e-9;
  rep.n0_value = J.z_min;
  double top = prof.rho(J.z_min);
  for (int m = 0; m < rep.dim; ++m) {
    rep.x0_diag.push_back(J.z_min + eps * m);
  }
  for (int m = 0; m + 1 < rep.dim; ++m) {
    double c = checked_sqrt(top - prof.rho(J.z_min + eps * (m + 1)), "ladder coefficients");
    rep.xp_coeff.push_back(c);
  }
  rep.xm_coeff = rep.xp_coeff;

  rep.lat.prof = &prof;
  rep.lat.eps = eps;
  rep.lat.R = R;
  SpaceInfo s;
  s.s = 0;
  s.n = J.n;
  s.m_min = 0;
  s.dim = rep.dim;
  s.z_min = J.z_min;
  rep.lat.spaces.push_back(s);

  rep.Xp = bo_zero("X+");
  rep.Xm = bo_zero("X-");
  Eigen::MatrixXcd up = Eigen::MatrixXcd::Zero(rep.dim, rep.dim);
  for (int m = 0; m + 1 < rep.dim; ++m) up(m + 1, m) = rep.xp_coeff[static_cast<size_t>(m)];
  rep.Xp.blocks.emplace(std::make_pair(0, 0), up);
  rep.Xm.blocks.emplace(std::make_pair(0, 0), up.adjoint().eval());
  rep.X0 = bo_diag(rep.lat, ce_x0());
  rep.N0 = bo_diag(rep.lat, ce_n0());
  return rep;
}

namespace {

/// Fills one hopping operator of a trivial lattice.
///  dn: level shift; dm: column shift; coeff(n, m): amplitude on |n,m>.
template <typename F>
BlockOperator make_hop(int n_max, int dn, int dm, F coeff,
                       const char* name) {
  BlockOperator op = bo_zero(name);
  for (int n = 1; n <= n_max; ++n) {
    int tn = n + dn;
    if (tn < 1 || tn > n_max) continue;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(tn, n);
    bool any = false;
    for (int j = 0; j < n; ++j) {
      int tj = j + dm;
      if (tj < 0 || tj >= tn) continue;
      double c = coeff(n, j);
      m(tj, j) = c;
      any = true;
    }
    if (any) op.blocks.emplace(std::make_pair(n - 1, tn - 1), std::move(m));
  }
  return op;
}

}  // namespace

TrivialLattice trivial_lattice(const ProfileCurve& prof,
                               const TrivialProfileData& triv, double eps,
                               int n_max) {
  if (n_max < 1) throw ProfileError("trivial_lattice: n_max must be at least 1");
  TrivialLattice tl;
  tl.n_max = n_max;
  tl.lat.prof = &prof;
  tl.lat.triv = &triv;
  tl.lat.eps = eps;
  for (int n = 1; n <= n_max; ++n) {
    SpaceInfo s;
    s.s = n - 1;
    s.n = n;
    s.m_min = 0;
    s.dim = n;
    s.z_min = triv.omega(eps * n);
    tl.lat.spaces.push_back(s);
  }
  auto w = [&](int n) { return triv.omega(eps * n); };
  auto tau = [&](double z) { return triv.tau(z); };

  tl.ap = make_hop(n_max, +1, +1, [&](int n, int m) {
    return checked_sqrt(tau(w(n)) - tau(w(n) + eps * (m + 1)), "a+");
  }, "a+");
  tl.am = make_hop(n_max, -1, -1, [&](int n, int m) {
    return checked_sqrt(tau(w(n - 1)) - tau(w(n - 1) + eps * m), "a-");
  }, "a-");
  tl.bp = make_hop(n_max, +1, 0, [&](int n, int m) {
    return checked_sqrt(tau(w(n)) + tau(w(n) + eps * m), "b+");
  }, "b+");
  tl.bm = make_hop(n_max, -1, 0, [&](int n, int m) {
    return checked_sqrt(tau(w(n - 1)) + tau(w(n - 1) + eps * m), "b-");
  }, "b-");

  tl.apu = make_hop(n_max, +1, +1, [&](int n, int m) {
    return checked_sqrt(tau(w(n + 1)) - tau(w(n + 1) + eps * (m + 1)), "a+'");
  }, "a+'");
  tl.amu = make_hop(n_max, -1, -1, [&](int n, int m) {
    return checked_sqrt(tau(w(n)) - tau(w(n) + eps * m), "a-'");
  }, "a-'");
  tl.bpu = make_hop(n_max, +1, 0, [&](int n, int m) {
    return checked_sqrt(tau(w(n + 1)) + tau(w(n + 1) + eps * (m + 1)), "b+'");
  }, "b+'");
  tl.bmu = make_hop(n_max, -1, 0, [&](int n, int m) {
    return checked_sqrt(tau(w(n)) + tau(w(n) + eps * (m + 1)), "b-'");
  }, "b-'");

  tl.Xp = make_hop(n_max, 0, +1, [&](int n, int m) {
    return checked_sqrt(prof.rho(w(n)) - prof.rho(w(n) + eps * (m + 1)), "X+");
  }, "X+");
  tl.Xm = make_hop(n_max, 0, -1, [&](int n, int m) {
    return checked_sqrt(prof.rho(w(n)) - prof.rho(w(n) + eps * m), "X-");
  }, "X-");
  tl.X0 = bo_diag(tl.lat, ce_x0());
  tl.X0.name = "X0";
  tl.N0 = bo_diag(tl.lat, ce_n0());
  tl.N0.name = "N0";
  return tl;
}

BlockOperator represent(const NormalForm& nf, const Lattice& lat,
                        const GenOps& gens) {
  BlockOperator out = bo_zero("rep");
  EvalCtx ectx = lat.eval_ctx();
  for (const auto& [sig, coeff] : nf.terms) {
    Word w = term_to_word(nf.alg, sig, coeff);
    // Left fold over the generator prefix of the word.
    BlockOperator G = bo_identity(lat);
    for (const Factor& f : w) {
      if (!f.is_gen) continue;
      auto it = gens.find(f.g);
      if (it == gens.end() || it->second == nullptr) {
        throw ProfileError("represent: generator not available on this lattice");
      }
      G = bo_compose(G, *it->second);
    }
    // Apply the right coefficient at each source state, skipping columns
    // the generator product annihilates (their coefficient value is never
    // needed and may be singular there).
    for (const auto& [key, m] : G.blocks) {
      int src = key.first;
      Eigen::MatrixXcd scaled = m;
      for (int j = 0; j < scaled.cols(); ++j) {
        if (scaled.col(j).isZero(0.0)) continue;
        scaled.col(j) *= ce_eval(coeff, lat.x0(src, j), lat.n0(src), ectx);
      }
      bo_accumulate(out, key, scaled);
    }
  }
  return out;
}

BlockOperator represent(const NormalForm& nf, const TrivialLattice& tl) {
  GenOps gens;
  switch (nf.alg) {
    case Alg::kLadderFree:
    case Alg::kLadderN:
    case Alg::kLadderNFree:
      gens = {{Gen::Xp, &tl.Xp}, {Gen::Xm, &tl.Xm}};
      break;
    case Alg::kHop:
      gens = {{Gen::ap, &tl.ap}, {Gen::am, &tl.am},
              {Gen::bp, &tl.bp}, {Gen::bm, &tl.bm}};
      break;
    case Alg::kHopR:
      if (!tl.lat.R.has_value()) {
        throw ProfileError(
            "represent: radius-reduced element needs the lattice radius set");
      }
      gens = {{Gen::ap, &tl.ap}, {Gen::am, &tl.am},
              {Gen::bp, &tl.bp}, {Gen::bm, &tl.bm}};
      break;
    default:
      throw ProfileError("represent: family not defined on the whole lattice");
  }
  return represent(nf, tl.lat, gens);
}

BlockOperator represent(const NormalForm& nf, const StandardRep& rep) {
  if (nf.alg == Alg::kHop || nf.alg == Alg::kHopR) {
    throw ProfileError("represent: hop words need a multi-level lattice");
  }
  if (nf.alg == Alg::kLadderR && !rep.r_compatible) {
    throw ProfileError("represent: radius constant differs from z_min here");
  }
  GenOps gens{{Gen::Xp, &rep.Xp}, {Gen::Xm, &rep.Xm}};
  return represent(nf, rep.lat, gens);
}

bool RelationReport::all_below(double tol) const {
  for (const auto& c : checks) {
    if (!(c.max_abs_deviation <= tol)) return false;
  }
  return true;
}

namespace {

void add_check(RelationReport& rep, std::string name, double dev,
               std::string where) {
  rep.checks.push_back({std::move(name), dev, std::move(where)});
  rep.worst = std::max(rep.worst, dev);
}

}  // namespace

RelationReport verify_relations(const TrivialLattice& tl) {
  RelationReport report;
  const Lattice& lat = tl.lat;
  AlgebraCtx actx = make_algebra_ctx(*lat.prof, lat.triv, lat.eps, lat.R);
  const int top = tl.n_max;

  auto rep_of = [&](std::initializer_list<Gen> gs) {
    return represent(normalize(actx, Alg::kHop, word_gen(gs)), tl);
  };
  auto hop_op = [&](Gen g) -> const BlockOperator& {
    switch (g) {
      case Gen::ap: return tl.ap;
      case Gen::am: return tl.am;
      case Gen::bp: return tl.bp;
      default: return tl.bm;
    }
  };
  auto pair_check = [&](const char* name, Gen g1, Gen g2, int cap) {
    std::string where;
    BlockOperator lhs = bo_compose(hop_op(g1), hop_op(g2));
    BlockOperator rhs = rep_of({g1, g2});
    double dev = bo_diff_max(lat, lhs, rhs, cap, &where);
    add_check(report, name, dev, where);
  };

  // Opposite-hop products against their diagonal normal forms.
  pair_check("a- a+ product", Gen::am, Gen::ap, top - 1);
  pair_check("a+ a- product", Gen::ap, Gen::am, -1);
  pair_check("b- b+ product", Gen::bm, Gen::bp, top - 1);
  pair_check("b+ b- product", Gen::bp, Gen::bm, -1);
  // Exchange relations between the two hop kinds.
  pair_check("b+ a+ exchange", Gen::bp, Gen::ap, top - 2);
  pair_check("b- a- exchange", Gen::bm, Gen::am, -1);
  pair_check("b- a+ exchange", Gen::bm, Gen::ap, top - 1);
  pair_check("b+ a- exchange", Gen::bp, Gen::am, top - 1);

  {
    std::string where;
    double dev = bo_diff_max(bo_compose(tl.X0, tl.N0), bo_compose(tl.N0, tl.X0),
                             &where);
    add_check(report, "[X0, N0] = 0", dev, where);
  }
  // Adjoint pairing is exact by construction; confirm blockwise.
  {
    std::string where;
    add_check(report, "a+ adjoint is a-",
              bo_diff_max(bo_adjoint(tl.ap), tl.am, &where), where);
    add_check(report, "b+ adjoint is b-",
              bo_diff_max(bo_adjoint(tl.bp), tl.bm, &where), where);
    add_check(report, "a+' adjoint is a-'",
              bo_diff_max(bo_adjoint(tl.apu), tl.amu, &where), where);
    add_check(report, "b+' adjoint is b-'",
              bo_diff_max(bo_adjoint(tl.bpu), tl.bmu, &where), where);
    add_check(report, "X+ adjoint is X-",
              bo_diff_max(bo_adjoint(tl.Xp), tl.Xm, &where), where);
  }
  // The ladder operators factor through both hop compositions.
  {
    std::string where;
    add_check(report, "X+ = b- a+",
              bo_diff_max(lat, tl.Xp, bo_compose(tl.bm, tl.ap), top - 1, &where), where);
    add_check(report, "X- = a- b+",
              bo_diff_max(lat, tl.Xm, bo_compose(tl.am, tl.bp), top - 1, &where), where);
    add_check(report, "X+ = a+' b-'",
              bo_diff_max(tl.Xp, bo_compose(tl.apu, tl.bmu), &where), where);
    add_check(report, "X- = b+' a-'",
              bo_diff_max(tl.Xm, bo_compose(tl.bpu, tl.amu), &where), where);
  }
  // Restriction of the ladder triple to each interval's standard rep.
  {
    double dev = 0.0;
    std::string where;
    for (const auto& s : lat.spaces) {
      RepInterval J;
      J.n = s.n;
      J.z_min = s.z_min;
      J.z_max = s.z_min + lat.eps * s.n;
      J.level = lat.prof->rho(s.z_min);
      StandardRep sr = standard_rep(*lat.prof, J, lat.eps, Alg::kLadderN);
      const Eigen::MatrixXcd* xp = tl.Xp.block(s.s, s.s);
      const Eigen::MatrixXcd* x0 = tl.X0.block(s.s, s.s);
      Eigen::MatrixXcd sxp = *sr.Xp.block(0, 0);
      Eigen::MatrixXcd sx0 = *sr.X0.block(0, 0);
      double d1 = xp ? (*xp - sxp).cwiseAbs().maxCoeff() : sxp.cwiseAbs().maxCoeff();
      double d2 = x0 ? (*x0 - sx0).cwiseAbs().maxCoeff() : sx0.cwiseAbs().maxCoeff();
      double d = std::max(d1, d2);
      if (d > dev) {
        dev = d;
        where = "level " + std::to_string(s.n);
      }
    }
    add_check(report, "per-level restriction is the standard rep", dev, where);
  }
  // Spectral reconstruction of the diagonals from a+a- and b+b-.
  {
    const TrivialProfileData& triv = *lat.triv;
    BlockOperator da = bo_compose(tl.ap, tl.am);
    BlockOperator db = bo_compose(tl.bp, tl.bm);
    double dev = 0.0;
    std::string where;
    for (const auto& s : lat.spaces) {
      const Eigen::MatrixXcd* ma = da.block(s.s, s.s);
      const Eigen::MatrixXcd* mb = db.block(s.s, s.s);
      for (int j = 0; j < s.dim; ++j) {
        double va = ma ? (*ma)(j, j).real() : 0.0;
        double vb = mb ? (*mb)(j, j).real() : 0.0;
        double prev_n = triv.tau_inv(0.5 * (vb + va));
        double prev_x = triv.tau_inv(0.5 * (vb - va));
        double rec_n0 = triv.omega(triv.omega_inv(prev_n) + lat.eps);
        double rec_x0 = prev_x - prev_n + rec_n0;
        double d = std::max(std::abs(rec_n0 - lat.n0(s.s)),
                            std::abs(rec_x0 - lat.x0(s.s, j)));
        if (d > dev) {
          dev = d;
          where = "|" + std::to_string(s.n) + "," + std::to_string(j) + ">";
        }
      }
    }
    add_check(report, "diagonals recovered from a+a- and b+b-", dev, where);
  }
  return report;
}

std::pair<double, double> coords(const TrivialLattice& tl, int n, int m) {
  if (n < 1 || n > tl.n_max || m < 0 || m >= n) {
    throw ProfileError("coords: unknown basis label");
  }
  double x = tl.lat.x0(n - 1, m);
  double y = tl.lat.prof->rho(tl.lat.n0(n - 1));
  return {x, y};
}

bool faithfulness_scan(const ProfileCurve& prof, const TrivialProfileData& triv,
                       const CE& f, const std::vector<double>& eps_list,
                       int n_max, double tol) {
  for (double eps : eps_list) {
    EvalCtx ectx;
    ectx.prof = &prof;
    ectx.triv = &triv;
    ectx.eps = eps;
    ectx.R = std::numeric_limits<double>::quiet_NaN();
    for (int n = 1; n <= n_max; ++n) {
      double zmin = triv.omega(eps * n);
      for (int m = 0; m < n; ++m) {
        std::complex<double> v = ce_eval(f, zmin + eps * m, zmin, ectx);
        if (!(std::abs(v) <= tol)) return false;
      }
    }
  }
  return true;
}

}  // namespace ncsr
