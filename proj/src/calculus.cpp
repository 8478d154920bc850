#include "ncsr/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "ncsr/profile.hpp"

namespace ncsr {

namespace {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Structural simplification of shift differences
// ---------------------------------------------------------------------------

bool ce_same(const CE& x, const CE& y) {
  if (x.get() == y.get()) return true;
  if (!x || !y) return !x && !y;
  if (x->op != y->op || x->k != y->k) return false;
  if (x->op == CeOp::kConst && x->cval != y->cval) return false;
  if ((x->a == nullptr) != (y->a == nullptr)) return false;
  if ((x->b == nullptr) != (y->b == nullptr)) return false;
  if (x->a && !ce_same(x->a, y->a)) return false;
  if (x->b && !ce_same(x->b, y->b)) return false;
  return true;
}

// Sees through an explicit negation: neg(u), mul(-1, u) or mul(u, -1).
CE as_negation(const CE& e) {
  if (e->op == CeOp::kNeg) return e->a;
  if (e->op == CeOp::kMul) {
    if (e->a->op == CeOp::kConst && e->a->cval == cd(-1.0, 0.0)) return e->b;
    if (e->b->op == CeOp::kConst && e->b->cval == cd(-1.0, 0.0)) return e->a;
  }
  return nullptr;
}

// Collapses L - R when one side is the other plus or minus a summand, so
// that ((x0 + eps) - x0) becomes the step leaf instead of a rounding
// residue. Returns nullptr when no pattern applies.
CE cancel_pair(const CE& L, const CE& R) {
  if (ce_same(L, R)) return ce_const(0.0);
  if (L->op == CeOp::kAdd) {
    if (ce_same(L->a, R)) return L->b;
    if (ce_same(L->b, R)) return L->a;
  }
  if (L->op == CeOp::kSub && ce_same(L->a, R)) return ce_neg(L->b);
  if (R->op == CeOp::kAdd) {
    if (ce_same(R->a, L)) return ce_neg(R->b);
    if (ce_same(R->b, L)) return ce_neg(R->a);
  }
  if (R->op == CeOp::kSub && ce_same(R->a, L)) return R->b;
  return nullptr;
}

CE rebuild(CeOp op, CE a, CE b, int k, cd cval) {
  switch (op) {
    case CeOp::kAdd: return ce_add(std::move(a), std::move(b));
    case CeOp::kSub: return ce_sub(std::move(a), std::move(b));
    case CeOp::kMul: return ce_mul(std::move(a), std::move(b));
    case CeOp::kDiv: return ce_div(std::move(a), std::move(b));
    case CeOp::kNeg: return ce_neg(std::move(a));
    case CeOp::kSqrt: return ce_sqrt(std::move(a));
    case CeOp::kPow: return ce_pow(std::move(a), k);
    case CeOp::kConj: return ce_conj(std::move(a));
    case CeOp::kRhoK: return ce_rho_k(std::move(a), k);
    case CeOp::kTau: return ce_tau(std::move(a));
    case CeOp::kTauInv: return ce_tau_inv(std::move(a));
    case CeOp::kOmega: return ce_omega(std::move(a));
    case CeOp::kOmegaInv: return ce_omega_inv(std::move(a));
    case CeOp::kConst: return ce_const(cval);
    default: break;
  }
  return nullptr;  // leaves handled by the caller
}

CE cancel_rec(const CE& e, std::unordered_map<const CoeffExpr*, CE>& memo) {
  if (!e->a && !e->b) return e;
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  CE a = e->a ? cancel_rec(e->a, memo) : nullptr;
  CE b = e->b ? cancel_rec(e->b, memo) : nullptr;
  CE out;
  if (e->op == CeOp::kSub) {
    out = cancel_pair(a, b);
  } else if (e->op == CeOp::kAdd) {
    if (CE n = as_negation(b)) out = cancel_pair(a, n);
    if (!out) {
      if (CE n = as_negation(a)) out = cancel_pair(b, n);
    }
  } else if (e->op == CeOp::kDiv && ce_same(a, b)) {
    out = ce_const(1.0);
  }
  if (!out) {
    out = (a == e->a && b == e->b)
              ? e
              : rebuild(e->op, std::move(a), std::move(b), e->k, e->cval);
  }
  memo.emplace(e.get(), out);
  return out;
}

CE ce_cancel_shifts(const CE& e) {
  std::unordered_map<const CoeffExpr*, CE> memo;
  return cancel_rec(e, memo);
}

NormalForm nf_cancel_shifts(const AlgebraCtx& ctx, NormalForm nf) {
  for (auto& [sig, c] : nf.terms) c = ce_cancel_shifts(c);
  return nf_add(ctx, nf, nf_zero(nf.alg));  // reuses the probe pruning
}

// ---------------------------------------------------------------------------
// Shared coefficient fragments
// ---------------------------------------------------------------------------

CE x_shift(int k) {
  if (k == 0) return ce_x0();
  return ce_add(ce_x0(), ce_mul(ce_const(double(k)), ce_eps()));
}

CE rho_at(int k) { return ce_rho(x_shift(k)); }

// rho(R) - rho(x0 + k * eps)
CE q_at(int k) { return ce_sub(ce_rho(ce_R()), rho_at(k)); }

CE shift_coeff(const CE& c, int k) {
  if (k == 0) return c;
  return ce_subst(c, x_shift(k), ce_n0());
}

CE half_over_eps() { return ce_div(ce_const(0.5), ce_eps()); }

void acc_term(NormalForm& nf, int r, const CE& c) {
  Sig sig{r, 0};
  auto it = nf.terms.find(sig);
  if (it == nf.terms.end()) {
    nf.terms.emplace(sig, c);
  } else {
    it->second = ce_add(it->second, c);
  }
}

bool is_const_zero(const CE& c) {
  return c->op == CeOp::kConst && c->cval == cd(0.0, 0.0);
}

void gf_put(GradedFunction& f, int r, CE c) {
  if (is_const_zero(c)) return;
  auto it = f.find(r);
  if (it == f.end()) {
    f.emplace(r, std::move(c));
  } else {
    it->second = ce_add(it->second, std::move(c));
    if (is_const_zero(it->second)) f.erase(it);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Graded functions
// ---------------------------------------------------------------------------

GradedFunction gf_add(const GradedFunction& f, const GradedFunction& h) {
  GradedFunction out = f;
  for (const auto& [r, c] : h) gf_put(out, r, c);
  return out;
}

GradedFunction gf_sub(const GradedFunction& f, const GradedFunction& h) {
  GradedFunction out = f;
  for (const auto& [r, c] : h) gf_put(out, r, ce_neg(c));
  return out;
}

GradedFunction gf_scale(std::complex<double> s, const GradedFunction& f) {
  GradedFunction out;
  for (const auto& [r, c] : f) gf_put(out, r, ce_mul(ce_const(s), c));
  return out;
}

GradedFunction gf_mul_ce(const CE& c, const GradedFunction& f) {
  GradedFunction out;
  for (const auto& [r, v] : f) gf_put(out, r, ce_mul(c, v));
  return out;
}

GradedFunction gf_mul(const GradedFunction& f, const GradedFunction& h) {
  GradedFunction out;
  for (const auto& [r, a] : f) {
    for (const auto& [s, b] : h) gf_put(out, r + s, ce_mul(a, b));
  }
  return out;
}

std::complex<double> gf_eval(const GradedFunction& f, double z, double phi,
                             const EvalCtx& ctx) {
  cd v(0.0, 0.0);
  for (const auto& [r, c] : f) {
    v += ce_eval(c, z, ctx.R, ctx) * std::exp(cd(0.0, r * phi));
  }
  return v;
}

double gf_max_abs(const GradedFunction& f, const std::vector<double>& zs,
                  const EvalCtx& ctx) {
  double worst = 0.0;
  for (const auto& [r, c] : f) {
    for (double z : zs) {
      worst = std::max(worst, std::abs(ce_eval(c, z, ctx.R, ctx)));
    }
  }
  return worst;
}

std::vector<double> chebyshev_samples(double z_lo, double z_hi, int count) {
  std::vector<double> zs;
  zs.reserve(static_cast<size_t>(std::max(count, 0)));
  double mid = 0.5 * (z_lo + z_hi);
  double half = 0.5 * (z_hi - z_lo);
  for (int k = 0; k < count; ++k) {
    zs.push_back(mid + half * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * count)));
  }
  return zs;
}

GradedFunction classical_image(const NormalForm& f) {
  if (f.alg != Alg::kLadderR) {
    throw std::invalid_argument(
        "classical_image: needs a radius-reduced ladder element");
  }
  GradedFunction out;
  for (const auto& [sig, c] : f.terms) {
    int r = sig.first;
    if (r == 0) {
      gf_put(out, 0, c);
      continue;
    }
    int half_pairs = std::abs(r) / 2;
    CE qr = q_at(0);
    CE fac = ce_pow(qr, half_pairs);
    if (std::abs(r) % 2 == 1) fac = ce_mul(fac, ce_sqrt(qr));
    gf_put(out, r, ce_mul(fac, c));
  }
  return out;
}

GradedFunction classical_x0() { return {{0, ce_x0()}}; }
GradedFunction classical_xp() { return {{1, ce_sqrt(q_at(0))}}; }
GradedFunction classical_xm() { return {{-1, ce_sqrt(q_at(0))}}; }

GradedFunction poisson(const GradedFunction& f, const GradedFunction& h) {
  GradedFunction out;
  for (const auto& [r, fr] : f) {
    for (const auto& [s, hs] : h) {
      CE t = ce_sub(ce_mul(ce_const(double(s)), ce_mul(ce_diff_x0(fr), hs)),
                    ce_mul(ce_const(double(r)), ce_mul(ce_diff_x0(hs), fr)));
      gf_put(out, r + s, t);
    }
  }
  return out;
}

CE metric_normalizer() {
  CE rho1 = ce_rho_k(ce_x0(), 1);
  return ce_add(ce_mul(rho1, rho1), ce_mul(ce_const(4.0), q_at(0)));
}

GradedFunction metric_pair(const GradedFunction& f, const GradedFunction& h) {
  GradedFunction pp_f = poisson(classical_xp(), f);
  GradedFunction pm_f = poisson(classical_xm(), f);
  GradedFunction p0_f = poisson(classical_x0(), f);
  GradedFunction pp_h = poisson(classical_xp(), h);
  GradedFunction pm_h = poisson(classical_xm(), h);
  GradedFunction p0_h = poisson(classical_x0(), h);
  GradedFunction sum = gf_add(gf_add(gf_mul(pp_f, pm_h), gf_mul(pm_f, pp_h)),
                              gf_scale(2.0, gf_mul(p0_f, p0_h)));
  return gf_mul_ce(ce_div(ce_const(-2.0), metric_normalizer()), sum);
}

HodgeCoefficients hodge_df(const GradedFunction& f) {
  CE fac = ce_div(ce_const(cd(0.0, 2.0)), ce_sqrt(metric_normalizer()));
  HodgeCoefficients out;
  out.minus = gf_mul_ce(fac, poisson(f, classical_xp()));
  out.plus = gf_mul_ce(fac, poisson(f, classical_xm()));
  out.zero = gf_mul_ce(fac, gf_scale(2.0, poisson(f, classical_x0())));
  return out;
}

GradedFunction laplacian(const GradedFunction& f) {
  GradedFunction xp = classical_xp();
  GradedFunction xm = classical_xm();
  GradedFunction x0 = classical_x0();
  CE c = metric_normalizer();
  GradedFunction first = gf_mul_ce(
      ce_div(ce_const(-2.0), c),
      gf_add(gf_add(poisson(xm, poisson(xp, f)), poisson(xp, poisson(xm, f))),
             gf_scale(2.0, poisson(x0, poisson(x0, f)))));
  CE rho1 = ce_rho_k(ce_x0(), 1);
  CE rho2 = ce_rho_k(ce_x0(), 2);
  CE pref = ce_div(ce_mul(ce_mul(ce_const(2.0), rho1),
                          ce_sub(rho2, ce_const(2.0))),
                   ce_mul(c, c));
  GradedFunction second = gf_mul_ce(
      pref, gf_sub(gf_mul(xm, poisson(xp, f)), gf_mul(xp, poisson(xm, f))));
  return gf_add(first, second);
}

// ---------------------------------------------------------------------------
// Bracket scaling limit
// ---------------------------------------------------------------------------

PbLimitReport pb_limit_check(const ProfileCurve& prof, double z_lo,
                             double z_hi, const NormalForm& f,
                             const NormalForm& h,
                             const std::vector<double>& eps_list) {
  if (f.alg != Alg::kLadderR || h.alg != Alg::kLadderR) {
    throw std::invalid_argument(
        "pb_limit_check: needs radius-reduced ladder elements");
  }
  GradedFunction pb = poisson(classical_image(f), classical_image(h));
  PbLimitReport report;
  for (double e : eps_list) {
    AlgebraCtx ctx = make_algebra_ctx(prof, nullptr, e, z_lo);
    NormalForm comm = nf_commutator(ctx, f, h);
    comm = nf_cancel_shifts(ctx, comm);

    RepInterval J;
    J.z_min = z_lo;
    J.z_max = z_hi;
    J.n = static_cast<int>(std::lround((z_hi - z_lo) / e));
    StandardRep srep = standard_rep(prof, J, e, Alg::kLadderR, z_lo);
    BlockOperator M = represent(comm, srep);
    const Eigen::MatrixXcd* blk = nullptr;
    auto bit = M.blocks.find({0, 0});
    if (bit != M.blocks.end()) blk = &bit->second;
    EvalCtx ectx = srep.lat.eval_ctx();

    std::set<int> grades;
    for (const auto& [sig, c] : comm.terms) grades.insert(sig.first);
    for (const auto& [r, c] : pb) grades.insert(r);

    double worst = 0.0;
    for (int r : grades) {
      auto git = pb.find(r);
      for (int m = 0; m < srep.dim; ++m) {
        int t = m + r;
        if (t < 0 || t >= srep.dim) continue;
        cd q = blk ? (*blk)(t, m) : cd(0.0, 0.0);
        cd cl(0.0, 0.0);
        if (git != pb.end()) {
          double x_up = srep.lat.x0(0, m + std::max(r, 0));
          cl = e * ce_eval(git->second, x_up, z_lo, ectx);
        }
        worst = std::max(worst, std::abs(q - cl));
      }
    }
    report.points.push_back({e, worst / e});
  }

  report.all_zero = true;
  std::vector<std::pair<double, double>> logs;
  for (const auto& p : report.points) {
    if (p.defect > 0.0) {
      report.all_zero = false;
      logs.emplace_back(std::log(p.eps), std::log(p.defect));
    } else if (report.points.size() > 1) {
      // an exactly vanishing point contributes no slope information
    }
  }
  if (!report.all_zero && logs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : logs) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double n = double(logs.size());
    report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Derivative one-form
// ---------------------------------------------------------------------------

namespace {

NormalForm g_plus_component(const AlgebraCtx& ctx, const NormalForm& f) {
  NormalForm out = nf_zero(Alg::kLadderR);
  for (const auto& [sig, c] : f.terms) {
    int r = sig.first;
    if (r == 0) continue;
    CE t = ce_mul(ce_const(double(r)), c);
    if (r < 0) t = ce_div(t, q_at(r));
    acc_term(out, r - 1, t);
  }
  return nf_add(ctx, out, nf_zero(Alg::kLadderR));
}

NormalForm g_zero_component(const AlgebraCtx& ctx, const NormalForm& f,
                            DncVariant variant) {
  NormalForm out = nf_zero(Alg::kLadderR);
  for (const auto& [sig, c] : f.terms) {
    int r = sig.first;
    CE cp = shift_coeff(c, +1);

    // First-order difference transported through the ladder step.
    CE a;
    if (r >= 0) {
      a = ce_div(ce_sub(cp, c), ce_eps());
    } else {
      a = ce_div(ce_sub(ce_div(ce_mul(q_at(1), cp), q_at(1 + r)), c),
                 ce_eps());
    }
    acc_term(out, r, a);

    // Second-order term; the variants differ only in its bracket content.
    CE content;
    switch (variant) {
      case DncVariant::kCommutatorSecondOrder:
        if (r == 0 || r == 1) continue;  // vanishes identically
        content = ce_sub(ce_sub(rho_at(r + 1), rho_at(1)),
                         ce_mul(ce_const(double(r)),
                                ce_sub(rho_at(2), rho_at(1))));
        break;
      case DncVariant::kLeftDifference:
        if (r == 0) continue;  // vanishes identically
        content = ce_sub(ce_sub(rho_at(r + 1), rho_at(1)),
                         ce_mul(ce_const(double(r)),
                                ce_sub(rho_at(r + 2), rho_at(r + 1))));
        break;
      case DncVariant::kScalarSecondOrder:
        content = ce_add(ce_sub(rho_at(r + 1), rho_at(1)),
                         ce_div(ce_sub(rho_at(r + 1), rho_at(r)), ce_eps()));
        break;
    }
    CE transported;
    if (r >= 1) {
      transported = ce_div(ce_mul(q_at(r), content), q_at(r + 1));
    } else if (r == 0) {
      transported = ce_div(content, q_at(1));
    } else {
      transported = ce_div(content, q_at(1 + r));
    }
    acc_term(out, r - 1,
             ce_neg(ce_mul(half_over_eps(), ce_mul(transported, c))));
  }
  return nf_add(ctx, out, nf_zero(Alg::kLadderR));
}

}  // namespace

OneForm d_nc(const AlgebraCtx& ctx, const NormalForm& f, DncVariant variant) {
  if (f.alg != Alg::kLadderR) {
    throw std::invalid_argument("d_nc: needs a radius-reduced ladder element");
  }
  OneForm w;
  w.plus = nf_cancel_shifts(ctx, g_plus_component(ctx, f));
  w.zero = nf_cancel_shifts(ctx, g_zero_component(ctx, f, variant));
  return w;
}

OneFormAlt d_nc_alt(const AlgebraCtx& ctx, const NormalForm& f) {
  OneForm w = d_nc(ctx, f);
  OneFormAlt comps = xi_plus_components(ctx);
  OneFormAlt out;
  out.minus = nf_mul(ctx, comps.minus, w.plus);
  out.zero = nf_add(ctx, w.zero, nf_mul(ctx, comps.zero, w.plus));
  return out;
}

NormalForm xi_plus(const AlgebraCtx& ctx) {
  return normalize(ctx, Alg::kHopR, Word{fgen(Gen::am), fgen(Gen::am)});
}

NormalForm xi_minus(const AlgebraCtx& ctx) {
  return normalize(ctx, Alg::kHopR, Word{fgen(Gen::bm), fgen(Gen::bm)});
}

NormalForm xi_zero(const AlgebraCtx& ctx) {
  // Normalising factor that turns the transported difference into a unit
  // step: its inverse multiplies the contraction word from the right.
  CE cinv = ce_div(ce_mul(ce_mul(ce_const(2.0), ce_eps()), q_at(1)),
                   ce_sub(rho_at(2), rho_at(0)));
  CE tail = ce_div(cinv, q_at(0));
  Word w1{fgen(Gen::am), fgen(Gen::am), fgen(Gen::am), fgen(Gen::bp),
          fcoeff(ce_neg(tail))};
  Word w2{fgen(Gen::bm), fgen(Gen::bm),
          fcoeff(ce_neg(ce_div(ce_const(1.0), q_at(0)))),
          fgen(Gen::bm), fgen(Gen::ap), fgen(Gen::bm), fgen(Gen::ap),
          fgen(Gen::am), fgen(Gen::bp), fcoeff(tail)};
  return normalize(ctx, Alg::kHopR, std::vector<Word>{w1, w2});
}

OneForm xi_minus_components(const AlgebraCtx& ctx) {
  (void)ctx;
  OneForm out;
  out.plus.terms.emplace(Sig{-2, 0},
                         ce_neg(ce_div(ce_const(1.0), q_at(-1))));
  out.zero.terms.emplace(
      Sig{-1, 0},
      ce_neg(ce_mul(half_over_eps(),
                    ce_div(ce_sub(rho_at(1), rho_at(-1)), q_at(0)))));
  return out;
}

OneFormAlt xi_plus_components(const AlgebraCtx& ctx) {
  (void)ctx;
  OneFormAlt out;
  out.minus.terms.emplace(Sig{2, 0},
                          ce_neg(ce_div(ce_const(1.0), q_at(2))));
  out.zero.terms.emplace(
      Sig{1, 0},
      ce_neg(ce_mul(half_over_eps(),
                    ce_div(ce_sub(rho_at(3), rho_at(1)), q_at(2)))));
  return out;
}

// ---------------------------------------------------------------------------
// Masked window representations
// ---------------------------------------------------------------------------

namespace {

void accumulate_block(BlockOperator& out, std::pair<int, int> key,
                      const Eigen::MatrixXcd& m) {
  auto it = out.blocks.find(key);
  if (it == out.blocks.end()) {
    out.blocks.emplace(key, m);
  } else {
    it->second += m;
  }
}

bool finite(const cd& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

// A coefficient whose denominator vanishes exactly at a lattice state can
// round to a huge finite value instead of infinity; treat magnitudes beyond
// this cut as non-invertible so those states are masked, not poisoned.
constexpr double kSingularCut = 1e8;

bool representable(const cd& v) { return finite(v) && std::abs(v) < kSingularCut; }

}  // namespace

MaskedOp masked_represent(const NormalForm& nf, const Lattice& lat,
                          const GenOps& gens, int src_lo, int src_hi) {
  MaskedOp mo;
  mo.op = bo_zero("rep");
  EvalCtx ectx = lat.eval_ctx();
  BlockOperator seed = bo_identity(lat);
  if (src_lo >= 0 && src_lo <= src_hi) {
    for (auto it = seed.blocks.begin(); it != seed.blocks.end();) {
      if (it->first.first < src_lo || it->first.first > src_hi) {
        it = seed.blocks.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const auto& [sig, coeff] : nf.terms) {
    Word w = term_to_word(nf.alg, sig, coeff);
    // Fold from the source side so the seed's source restriction propagates
    // through the chain (the last word factor acts first).
    BlockOperator G = seed;
    for (auto fit = w.rbegin(); fit != w.rend(); ++fit) {
      if (!fit->is_gen) continue;
      auto it = gens.find(fit->g);
      if (it == gens.end() || it->second == nullptr) {
        throw std::invalid_argument(
            "masked_represent: generator not available on this lattice");
      }
      G = bo_compose(*it->second, G);
    }
    for (const auto& [key, m] : G.blocks) {
      int src = key.first;
      Eigen::MatrixXcd scaled = m;
      for (int j = 0; j < scaled.cols(); ++j) {
        // Evaluate the diagonal coefficient before the dead-column check:
        // a singular value on a column the generator chain annihilates is a
        // 0*inf indeterminacy, not a zero, and the state must be excluded.
        cd v = ce_eval(coeff, lat.x0(src, j), lat.n0(src), ectx);
        if (!representable(v)) {
          scaled.col(j).setZero();
          if (mo.excluded.insert({src, j}).second) {
            mo.notes.push_back("coefficient singular at space " +
                               std::to_string(src) + ", state " +
                               std::to_string(j) + "; column masked");
          }
        } else if (scaled.col(j).isZero(0.0)) {
          continue;
        } else {
          scaled.col(j) *= v;
        }
      }
      accumulate_block(mo.op, key, scaled);
    }
  }
  return mo;
}

MaskedOp mo_compose(const MaskedOp& a, const MaskedOp& b) {
  MaskedOp out;
  out.op = bo_compose(a.op, b.op);
  out.excluded = b.excluded;
  // A source column of b that feeds a masked input state of a is itself
  // not trustworthy in the composite.
  if (!a.excluded.empty()) {
    for (const auto& [key, m] : b.op.blocks) {
      for (int j = 0; j < m.cols(); ++j) {
        bool bad = false;
        for (int i = 0; i < m.rows() && !bad; ++i) {
          if (m(i, j) != cd(0.0, 0.0) && a.excluded.count({key.second, i})) {
            bad = true;
          }
        }
        if (bad) out.excluded.insert({key.first, j});
      }
    }
  }
  out.notes = a.notes;
  out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
  return out;
}

MaskedOp mo_add(const MaskedOp& a, const MaskedOp& b) {
  MaskedOp out;
  out.op = bo_add(a.op, b.op);
  out.excluded = a.excluded;
  out.excluded.insert(b.excluded.begin(), b.excluded.end());
  out.notes = a.notes;
  out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
  return out;
}

namespace {

double masked_scan(const MaskedOp& a, const MaskedOp* b, int src_space,
                   const std::set<int>* skip_states = nullptr) {
  std::set<std::pair<int, int>> keys;
  for (const auto& [key, m] : a.op.blocks) {
    if (key.first == src_space) keys.insert(key);
  }
  if (b) {
    for (const auto& [key, m] : b->op.blocks) {
      if (key.first == src_space) keys.insert(key);
    }
  }
  double worst = 0.0;
  for (const auto& key : keys) {
    const Eigen::MatrixXcd* ma = nullptr;
    const Eigen::MatrixXcd* mb = nullptr;
    auto ia = a.op.blocks.find(key);
    if (ia != a.op.blocks.end()) ma = &ia->second;
    if (b) {
      auto ib = b->op.blocks.find(key);
      if (ib != b->op.blocks.end()) mb = &ib->second;
    }
    int rows = ma ? int(ma->rows()) : int(mb->rows());
    int cols = ma ? int(ma->cols()) : int(mb->cols());
    for (int j = 0; j < cols; ++j) {
      std::pair<int, int> state{src_space, j};
      if (a.excluded.count(state)) continue;
      if (b && b->excluded.count(state)) continue;
      if (skip_states && skip_states->count(j)) continue;
      for (int i = 0; i < rows; ++i) {
        cd va = ma ? (*ma)(i, j) : cd(0.0, 0.0);
        cd vb = mb ? (*mb)(i, j) : cd(0.0, 0.0);
        worst = std::max(worst, std::abs(va - vb));
      }
    }
  }
  return worst;
}

}  // namespace

double mo_diff_max(const MaskedOp& a, const MaskedOp& b, int src_space) {
  return masked_scan(a, &b, src_space);
}

double mo_diff_max(const MaskedOp& a, const MaskedOp& b, int src_space,
                   const std::set<int>& skip_states) {
  return masked_scan(a, &b, src_space, &skip_states);
}

double mo_max_abs(const MaskedOp& a, int src_space) {
  return masked_scan(a, nullptr, src_space);
}

std::set<int> degenerate_expansion_states(const AlgebraCtx& ctx,
                                          const TrivialLattice& tl, int n_star,
                                          double floor_ratio) {
  if (n_star < 1 || n_star > tl.n_max) {
    throw std::invalid_argument(
        "degenerate_expansion_states: window out of range");
  }
  std::set<int> out;
  if (floor_ratio <= 0.0) return out;
  const int src = n_star - 1;
  const double eps = ctx.eps;
  const double R =
      ctx.R.value_or(tl.lat.spaces[static_cast<size_t>(src)].z_min);
  const double rho_R = ctx.prof->rho(R);
  // Magnitude of every value each denominator divides by, per state.
  constexpr int kDen = 4;
  std::vector<std::array<double, kDen>> den(static_cast<size_t>(n_star));
  std::array<double, kDen> peak{};
  for (int m = 0; m < n_star; ++m) {
    const double x = tl.lat.x0(src, m);
    den[static_cast<size_t>(m)] = {
        std::abs(rho_R - ctx.prof->rho(x)),
        std::abs(rho_R - ctx.prof->rho(x + eps)),
        std::abs(rho_R - ctx.prof->rho(x - eps)),
        std::abs(ctx.prof->rho(x + 2 * eps) - ctx.prof->rho(x))};
    for (int k = 0; k < kDen; ++k) {
      peak[static_cast<size_t>(k)] = std::max(peak[static_cast<size_t>(k)],
                                              den[static_cast<size_t>(m)]
                                                 [static_cast<size_t>(k)]);
    }
  }
  for (int m = 0; m < n_star; ++m) {
    for (int k = 0; k < kDen; ++k) {
      if (den[static_cast<size_t>(m)][static_cast<size_t>(k)] <
          floor_ratio * peak[static_cast<size_t>(k)]) {
        out.insert(m);
        break;
      }
    }
  }
  return out;
}

MaskedOp one_form_rep(const AlgebraCtx& ctx, const TrivialLattice& tl,
                      int n_star, const OneForm& w) {
  if (n_star < 1 || n_star > tl.n_max) {
    throw std::invalid_argument("one_form_rep: window out of range");
  }
  if (!ctx.R.has_value() ||
      std::abs(*ctx.R - tl.lat.spaces[static_cast<size_t>(n_star - 1)].z_min) >
          1e-9) {
    throw std::invalid_argument(
        "one_form_rep: context radius must match the window's lowest "
        "position value");
  }
  Lattice lat = tl.lat;
  lat.R = ctx.R;
  GenOps hop_gens{{Gen::ap, &tl.ap},
                  {Gen::am, &tl.am},
                  {Gen::bp, &tl.bp},
                  {Gen::bm, &tl.bm}};
  GenOps lad_gens{{Gen::Xp, &tl.Xp}, {Gen::Xm, &tl.Xm}};
  // Entries are only contractual on source space n_star - 1; restricting the
  // represented sources there keeps the cost linear in the window count.
  const int s = n_star - 1;
  MaskedOp fp = masked_represent(xi_plus(ctx), lat, hop_gens, s, s);
  MaskedOp fz = masked_represent(xi_zero(ctx), lat, hop_gens, s, s);
  MaskedOp gp = masked_represent(w.plus, lat, lad_gens, s, s);
  MaskedOp g0 = masked_represent(w.zero, lat, lad_gens, s, s);
  return mo_add(mo_compose(fp, gp), mo_compose(fz, g0));
}

OneForm of_rmul(const AlgebraCtx& ctx, const OneForm& w, const NormalForm& h) {
  OneForm out;
  out.plus = nf_mul(ctx, w.plus, h);
  out.zero = nf_mul(ctx, w.zero, h);
  return out;
}

double leibniz_defect(const AlgebraCtx& ctx, const TrivialLattice& tl,
                      int n_star, const NormalForm& f, const NormalForm& h,
                      DncVariant variant, double floor_ratio) {
  if (f.alg != Alg::kLadderN || h.alg != Alg::kLadderN) {
    throw std::invalid_argument(
        "leibniz_defect: expects ladder elements with a central level "
        "constant");
  }
  NormalForm fR = q_n_to_r(ctx, f);
  NormalForm hR = q_n_to_r(ctx, h);

  OneForm d_fh = d_nc(ctx, nf_mul(ctx, fR, hR), variant);
  OneForm df_h = of_rmul(ctx, d_nc(ctx, fR, variant), hR);
  OneForm dh = d_nc(ctx, hR, variant);

  MaskedOp lhs = one_form_rep(ctx, tl, n_star, d_fh);
  MaskedOp rhs1 = one_form_rep(ctx, tl, n_star, df_h);

  // f acts from the left at the matrix level, through its level-aware hop
  // image, so the factor crossing the intermediate window keeps that
  // window's own level constant.
  Lattice lat = tl.lat;
  lat.R = ctx.R;
  GenOps hop_gens{{Gen::ap, &tl.ap},
                  {Gen::am, &tl.am},
                  {Gen::bp, &tl.bp},
                  {Gen::bm, &tl.bm}};
  // The one-form factor lands two spaces below the window, so the left
  // factor only ever acts from that narrow source band.
  MaskedOp f_rep =
      masked_represent(ladder_to_hop(ctx, f, Alg::kHop), lat, hop_gens,
                       std::max(0, n_star - 3), n_star - 1);
  MaskedOp rhs2 = mo_compose(f_rep, one_form_rep(ctx, tl, n_star, dh));

  std::set<int> skip = degenerate_expansion_states(ctx, tl, n_star, floor_ratio);
  return mo_diff_max(lhs, mo_add(rhs1, rhs2), n_star - 1, skip);
}

// ---------------------------------------------------------------------------
// Vector fields
// ---------------------------------------------------------------------------

NormalForm vector_apply(const AlgebraCtx& ctx, const NormalForm& xi,
                        const NormalForm& f) {
  if (xi.alg != Alg::kHopR) {
    throw std::invalid_argument(
        "vector_apply: the field must be a reduced hop element");
  }
  for (const auto& [g, part] : grade_decompose(xi)) {
    if (g != 2) {
      throw std::invalid_argument(
          "vector_apply: the field must be homogeneous of grade +2");
    }
  }
  OneForm w = d_nc(ctx, f);
  NormalForm omega =
      nf_add(ctx, mu(ctx, xi_plus(ctx), ladder_to_hop(ctx, w.plus, Alg::kHopR)),
             mu(ctx, xi_zero(ctx), ladder_to_hop(ctx, w.zero, Alg::kHopR)));
  NormalForm v = mu(ctx, xi, omega);
  auto lad = reduced_hop_to_ladder_r(ctx, v);
  if (!lad.has_value()) {
    throw std::invalid_argument(
        "vector_apply: the contraction did not close on the ladder family");
  }
  return *lad;
}

// ---------------------------------------------------------------------------
// Inner derivations
// ---------------------------------------------------------------------------

InnerResult derivation_to_inner(const StandardRep& rep,
                                const Eigen::MatrixXcd& xi_x0,
                                const Eigen::MatrixXcd& xi_xp,
                                const Eigen::MatrixXcd& xi_xm, double tol) {
  const int d = rep.dim;
  auto square = [d](const Eigen::MatrixXcd& m) {
    return m.rows() == d && m.cols() == d;
  };
  if (!square(xi_x0) || !square(xi_xp) || !square(xi_xm)) {
    throw std::invalid_argument("derivation_to_inner: size mismatch");
  }

  Eigen::MatrixXcd X0 = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m < d; ++m) X0(m, m) = rep.x0_diag[static_cast<size_t>(m)];
  Eigen::MatrixXcd Xp = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m + 1 < d; ++m) {
    Xp(m + 1, m) = rep.xp_coeff[static_cast<size_t>(m)];
  }
  Eigen::MatrixXcd Xm = Xp.adjoint();

  // Consistency of the input with the product rule on the two defining
  // relations. The image of rho(X0) is forced: on a diagonal operator with
  // simple spectrum the product rule pins the image of any function of X0
  // to the divided difference against the image of X0.
  const ProfileCurve& prof = *rep.lat.prof;
  Eigen::MatrixXcd xi_rho(d, d);
  for (int i = 0; i < d; ++i) {
    double xi = rep.x0_diag[static_cast<size_t>(i)];
    for (int j = 0; j < d; ++j) {
      double xj = rep.x0_diag[static_cast<size_t>(j)];
      double dd = (i == j) ? prof.rho_k(xi, 1)
                           : (prof.rho(xi) - prof.rho(xj)) / (xi - xj);
      xi_rho(i, j) = xi_x0(i, j) * dd;
    }
  }
  Eigen::MatrixXcd r1 = xi_x0 * Xp - Xp * xi_x0 + X0 * xi_xp - xi_xp * X0 -
                        rep.eps * xi_xp;
  Eigen::MatrixXcd r2 = xi_xp * Xm + Xp * xi_xm + xi_rho;
  double pre = std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
  double p0 = 0.0;
  for (int i = 0; i < d; ++i) p0 = std::max(p0, std::abs(xi_x0(i, i)));

  double scale = 1.0 + std::max({xi_x0.cwiseAbs().maxCoeff(),
                                 xi_xp.cwiseAbs().maxCoeff(),
                                 xi_xm.cwiseAbs().maxCoeff()});
  if (p0 > tol * scale || pre > tol * scale) {
    throw std::invalid_argument("derivation_to_inner: input is not a "
                                "derivation of this representation");
  }

  // Off-diagonal bands of the X0 image determine the candidate up to a
  // diagonal; the band at offset r is reproduced by -(eps r)^{-1} times
  // itself under [., X0].
  Eigen::MatrixXcd fhat = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      fhat(i, j) = -xi_x0(i, j) / (rep.eps * double(i - j));
    }
  }

  // The remaining diagonal telescopes along the first band of the X+ image.
  Eigen::MatrixXcd G = xi_xp - (fhat * Xp - Xp * fhat);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(d);
  for (int m = 0; m + 1 < d; ++m) {
    double c = rep.xp_coeff[static_cast<size_t>(m)];
    if (c == 0.0) {
      throw std::invalid_argument(
          "derivation_to_inner: the ladder degenerates inside the interval");
    }
    g(m + 1) = g(m) + G(m + 1, m) / c;
  }
  Eigen::MatrixXcd f = fhat;
  for (int m = 0; m < d; ++m) f(m, m) += g(m);

  auto comm_defect = [&](const Eigen::MatrixXcd& gen,
                         const Eigen::MatrixXcd& want) {
    return ((f * gen - gen * f) - want).cwiseAbs().maxCoeff();
  };
  InnerResult out;
  out.f = f;
  out.precondition_defect = std::max(pre, p0);
  out.roundtrip_defect = std::max({comm_defect(X0, xi_x0),
                                   comm_defect(Xp, xi_xp),
                                   comm_defect(Xm, xi_xm)});
  return out;
}

}  // namespace ncsr
