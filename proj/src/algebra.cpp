#include "ncsr/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ncsr {

namespace {

bool is_ladder(Alg a) {
  return a == Alg::kLadderFree || a == Alg::kLadderR || a == Alg::kLadderN ||
         a == Alg::kLadderNFree;
}

bool is_hop(Alg a) { return a == Alg::kHop || a == Alg::kHopR; }

bool ladder_contracts(Alg a) {
  return a == Alg::kLadderR || a == Alg::kLadderN;
}

/// x0 + k*eps as an expression.
CE x0_plus(int k) {
  if (k == 0) return ce_x0();
  CE step = std::abs(k) == 1
                ? ce_eps()
                : ce_mul(ce_const(static_cast<double>(std::abs(k))), ce_eps());
  return k > 0 ? ce_add(ce_x0(), step) : ce_sub(ce_x0(), step);
}

/// tau(xk(j) + d*eps), with xk(0) read as plain x0.
CE tau_xk(int j, int d) {
  CE base = (j == 0) ? x0_plus(d)
                     : (d == 0 ? ce_xk(j)
                               : (d > 0 ? ce_add(ce_xk(j), ce_eps())
                                        : ce_sub(ce_xk(j), ce_eps())));
  return ce_tau(base);
}

CE tau_nk(int j) { return ce_tau(j == 0 ? ce_n0() : ce_nk(j)); }

/// Contraction values for adjacent opposite hops.
CE hop_contraction(Gen u, Gen v) {
  if (u == Gen::am && v == Gen::ap) return ce_sub(tau_nk(0), tau_xk(0, 1));
  if (u == Gen::ap && v == Gen::am) return ce_sub(tau_nk(-1), tau_xk(-1, 0));
  if (u == Gen::bm && v == Gen::bp) return ce_add(tau_nk(0), tau_xk(0, 0));
  if (u == Gen::bp && v == Gen::bm) return ce_add(tau_nk(-1), tau_xk(-1, 0));
  throw std::logic_error("hop_contraction: not a contracting pair");
}

/// Exchange factor F in  b_x a_y = a_y b_x F.
CE hop_exchange(Gen b, Gen a) {
  CE num, den;
  if (b == Gen::bp && a == Gen::ap) {
    num = ce_mul(ce_sub(tau_nk(0), tau_xk(0, 1)), ce_add(tau_nk(1), tau_xk(1, 1)));
    den = ce_mul(ce_sub(tau_nk(1), tau_xk(1, 1)), ce_add(tau_nk(0), tau_xk(0, 0)));
  } else if (b == Gen::bm && a == Gen::am) {
    num = ce_mul(ce_sub(tau_nk(-1), tau_xk(-1, 0)),
                 ce_add(tau_nk(-2), tau_xk(-2, -1)));
    den = ce_mul(ce_sub(tau_nk(-2), tau_xk(-2, 0)),
                 ce_add(tau_nk(-1), tau_xk(-1, 0)));
  } else if (b == Gen::bm && a == Gen::ap) {
    num = ce_sub(ce_rho(ce_n0()), ce_rho(x0_plus(1)));
    den = ce_mul(ce_sub(tau_nk(-1), tau_xk(-1, 1)),
                 ce_add(tau_nk(-1), tau_xk(-1, 0)));
  } else if (b == Gen::bp && a == Gen::am) {
    num = ce_mul(ce_sub(tau_nk(-1), tau_xk(-1, 0)),
                 ce_add(tau_nk(-1), tau_xk(-1, -1)));
    den = ce_sub(ce_rho(ce_n0()), ce_rho(ce_x0()));
  } else {
    throw std::logic_error("hop_exchange: not an exchange pair");
  }
  return ce_sqrt(ce_div(num, den));
}

/// Transport a diagonal coefficient to the right of one generator.
CE shift_coeff(const CE& c, Gen g) {
  switch (g) {
    case Gen::Xp:
      return ce_subst(c, x0_plus(1), ce_n0());
    case Gen::Xm:
      return ce_subst(c, x0_plus(-1), ce_n0());
    case Gen::ap:
      return ce_subst(c, ce_add(ce_xk(1), ce_eps()), ce_nk(1));
    case Gen::am:
      return ce_subst(c, ce_sub(ce_xk(-1), ce_eps()), ce_nk(-1));
    case Gen::bp:
      return ce_subst(c, ce_xk(1), ce_nk(1));
    case Gen::bm:
      return ce_subst(c, ce_xk(-1), ce_nk(-1));
  }
  throw std::logic_error("shift_coeff: bad generator");
}

bool is_a_hop(Gen g) { return g == Gen::ap || g == Gen::am; }
bool is_b_hop(Gen g) { return g == Gen::bp || g == Gen::bm; }
bool opposite(Gen u, Gen v) {
  return (u == Gen::ap && v == Gen::am) || (u == Gen::am && v == Gen::ap) ||
         (u == Gen::bp && v == Gen::bm) || (u == Gen::bm && v == Gen::bp);
}

/// The product contraction for ladder families that reduce X+X- / X-X+.
CE ladder_contraction(Alg alg, bool plus_minus_order) {
  CE anchor = (alg == Alg::kLadderR) ? ce_R() : ce_n0();
  CE at = plus_minus_order ? ce_x0() : x0_plus(1);
  return ce_sub(ce_rho(anchor), ce_rho(at));
}

struct Extracted {
  Sig sig;
  CE coeff;
};

Extracted extract(Alg alg, const Word& w) {
  CE coeff = ce_const(1.0);
  int xp = 0, xm = 0, ap = 0, am = 0, bp = 0, bm = 0;
  for (const Factor& f : w) {
    if (!f.is_gen) {
      coeff = ce_mul(coeff, f.c);
      continue;
    }
    switch (f.g) {
      case Gen::Xp: ++xp; break;
      case Gen::Xm: ++xm; break;
      case Gen::ap: ++ap; break;
      case Gen::am: ++am; break;
      case Gen::bp: ++bp; break;
      case Gen::bm: ++bm; break;
    }
  }
  if (is_ladder(alg)) {
    if (ladder_contracts(alg)) return {{xp - xm, 0}, coeff};
    return {{xp, xm}, coeff};
  }
  return {{ap - am, bp - bm}, coeff};
}

void accumulate(NormalForm& out, const Extracted& ex) {
  auto it = out.terms.find(ex.sig);
  if (it == out.terms.end()) {
    out.terms.emplace(ex.sig, ex.coeff);
  } else {
    it->second = ce_add(it->second, ex.coeff);
  }
}

void prune(const AlgebraCtx& ctx, NormalForm& nf) {
  for (auto it = nf.terms.begin(); it != nf.terms.end();) {
    if (coeff_is_zero(ctx, it->second)) {
      it = nf.terms.erase(it);
    } else {
      ++it;
    }
  }
}

Gen dagger_gen(Gen g) {
  switch (g) {
    case Gen::Xp: return Gen::Xm;
    case Gen::Xm: return Gen::Xp;
    case Gen::ap: return Gen::am;
    case Gen::am: return Gen::ap;
    case Gen::bp: return Gen::bm;
    case Gen::bm: return Gen::bp;
  }
  throw std::logic_error("dagger_gen: bad generator");
}

const char* gen_name(Gen g) {
  switch (g) {
    case Gen::Xp: return "X+";
    case Gen::Xm: return "X-";
    case Gen::ap: return "a+";
    case Gen::am: return "a-";
    case Gen::bp: return "b+";
    case Gen::bm: return "b-";
  }
  return "?";
}

}  // namespace

Factor fgen(Gen g) {
  Factor f;
  f.is_gen = true;
  f.g = g;
  return f;
}

Factor fcoeff(CE c) {
  Factor f;
  f.is_gen = false;
  f.c = std::move(c);
  return f;
}

Word word_gen(std::initializer_list<Gen> gs) {
  Word w;
  w.reserve(gs.size());
  for (Gen g : gs) w.push_back(fgen(g));
  return w;
}

EvalCtx AlgebraCtx::eval_ctx() const {
  EvalCtx e;
  e.prof = prof;
  e.triv = triv;
  e.R = R.value_or(std::numeric_limits<double>::quiet_NaN());
  e.eps = eps;
  return e;
}

AlgebraCtx make_algebra_ctx(const ProfileCurve& prof,
                            const TrivialProfileData* triv, double eps,
                            std::optional<double> R) {
  AlgebraCtx ctx;
  ctx.prof = &prof;
  ctx.triv = triv;
  ctx.eps = eps;
  ctx.R = R;
  if (triv != nullptr) {
    // Probe points anchored to level windows so tau/omega chains stay real.
    double z0 = triv->z0();
    double wmax = 0.9 * std::min(z0 - prof.z_lo(), prof.z_hi() - z0);
    for (double t : {0.931, 0.717, 0.493, 0.288, 0.131}) {
      double w = t * wmax;
      double n0 = triv->omega(w);
      for (double s : {0.237, 0.804}) {
        ctx.probes.emplace_back(n0 + s * w, n0);
      }
    }
  } else {
    double lo = prof.z_lo(), hi = prof.z_hi();
    double span = hi - lo;
    const double ts[6] = {0.113, 0.270, 0.409, 0.551, 0.680, 0.842};
    for (int i = 0; i < 6; ++i) {
      ctx.probes.emplace_back(lo + ts[i] * span, lo + ts[(i + 2) % 6] * span);
    }
  }
  return ctx;
}

bool coeff_is_zero(const AlgebraCtx& ctx, const CE& c, double tol) {
  if (!c) return true;
  if (c->op == CeOp::kConst) return std::abs(c->cval) == 0.0;
  EvalCtx e = ctx.eval_ctx();
  for (const auto& [x0, n0] : ctx.probes) {
    std::complex<double> v = ce_eval(c, x0, n0, e);
    if (!(std::abs(v) < tol)) return false;  // NaN counts as nonzero
  }
  return true;
}

bool coeff_equal(const AlgebraCtx& ctx, const CE& a, const CE& b, double tol) {
  EvalCtx e = ctx.eval_ctx();
  CE ca = a ? a : ce_const(0.0);
  CE cb = b ? b : ce_const(0.0);
  for (const auto& [x0, n0] : ctx.probes) {
    std::complex<double> va = ce_eval(ca, x0, n0, e);
    std::complex<double> vb = ce_eval(cb, x0, n0, e);
    double scale = std::max({1.0, std::abs(va), std::abs(vb)});
    if (!(std::abs(va - vb) <= tol * scale)) return false;
  }
  return true;
}

NormalForm normalize(const AlgebraCtx& ctx, Alg alg, std::vector<Word> words) {
  NormalForm out;
  out.alg = alg;
  const bool hop = is_hop(alg);
  std::vector<Word> stack = std::move(words);
  while (!stack.empty()) {
    Word w = std::move(stack.back());
    stack.pop_back();
    bool rewrote = false;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      Factor& u = w[i];
      Factor& v = w[i + 1];
      if (!u.is_gen && !v.is_gen) {
        u.c = ce_mul(u.c, v.c);
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        rewrote = true;
        break;
      }
      if (!u.is_gen && v.is_gen) {
        CE moved = shift_coeff(u.c, v.g);
        Gen g = v.g;
        w[i] = fgen(g);
        w[i + 1] = fcoeff(moved);
        rewrote = true;
        break;
      }
      if (u.is_gen && v.is_gen) {
        if (!hop) {
          if (u.g == Gen::Xm && v.g == Gen::Xp) {
            if (ladder_contracts(alg)) {
              CE c = ladder_contraction(alg, /*plus_minus_order=*/false);
              w[i] = fcoeff(c);
              w.erase(w.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            } else {
              // X-X+ = X+X- + (rho(X0) - rho(X0+eps)); branch the sum.
              Word rest(w);
              rest[i] = fcoeff(ce_sub(ce_rho(ce_x0()), ce_rho(x0_plus(1))));
              rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i) + 1);
              stack.push_back(std::move(rest));
              w[i] = fgen(Gen::Xp);
              w[i + 1] = fgen(Gen::Xm);
            }
            rewrote = true;
            break;
          }
          if (u.g == Gen::Xp && v.g == Gen::Xm && ladder_contracts(alg)) {
            CE c = ladder_contraction(alg, /*plus_minus_order=*/true);
            w[i] = fcoeff(c);
            w.erase(w.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            rewrote = true;
            break;
          }
          continue;
        }
        // Hop rules.
        if (opposite(u.g, v.g)) {
          CE c = hop_contraction(u.g, v.g);
          w[i] = fcoeff(c);
          w.erase(w.begin() + static_cast<std::ptrdiff_t>(i) + 1);
          rewrote = true;
          break;
        }
        if (is_b_hop(u.g) && is_a_hop(v.g)) {
          CE frac = hop_exchange(u.g, v.g);
          Gen bg = u.g, ag = v.g;
          w[i] = fgen(ag);
          w[i + 1] = fgen(bg);
          w.insert(w.begin() + static_cast<std::ptrdiff_t>(i) + 2,
                   fcoeff(frac));
          rewrote = true;
          break;
        }
      }
    }
    if (rewrote) {
      stack.push_back(std::move(w));
      continue;
    }
    accumulate(out, extract(alg, w));
  }
  if (alg == Alg::kHopR) {
    for (auto& [sig, c] : out.terms) c = ce_subst(c, ce_x0(), ce_R());
  }
  prune(ctx, out);
  return out;
}

NormalForm normalize(const AlgebraCtx& ctx, Alg alg, Word word) {
  std::vector<Word> ws;
  ws.push_back(std::move(word));
  return normalize(ctx, alg, std::move(ws));
}

Word term_to_word(Alg alg, Sig sig, const CE& coeff) {
  Word w;
  if (is_ladder(alg)) {
    if (ladder_contracts(alg)) {
      Gen g = sig.first >= 0 ? Gen::Xp : Gen::Xm;
      for (int i = 0; i < std::abs(sig.first); ++i) w.push_back(fgen(g));
    } else {
      for (int i = 0; i < sig.first; ++i) w.push_back(fgen(Gen::Xp));
      for (int i = 0; i < sig.second; ++i) w.push_back(fgen(Gen::Xm));
    }
  } else {
    Gen ga = sig.first >= 0 ? Gen::ap : Gen::am;
    for (int i = 0; i < std::abs(sig.first); ++i) w.push_back(fgen(ga));
    Gen gb = sig.second >= 0 ? Gen::bp : Gen::bm;
    for (int i = 0; i < std::abs(sig.second); ++i) w.push_back(fgen(gb));
  }
  w.push_back(fcoeff(coeff));
  return w;
}

std::vector<Word> nf_to_words(const NormalForm& nf) {
  std::vector<Word> ws;
  ws.reserve(nf.terms.size());
  for (const auto& [sig, c] : nf.terms) ws.push_back(term_to_word(nf.alg, sig, c));
  return ws;
}

NormalForm nf_zero(Alg alg) {
  NormalForm nf;
  nf.alg = alg;
  return nf;
}

NormalForm nf_one(Alg alg) { return nf_coeff(alg, ce_const(1.0)); }

NormalForm nf_coeff(Alg alg, CE c) {
  NormalForm nf;
  nf.alg = alg;
  nf.terms.emplace(Sig{0, 0}, std::move(c));
  return nf;
}

NormalForm nf_gen(const AlgebraCtx& ctx, Alg alg, Gen g) {
  return normalize(ctx, alg, word_gen({g}));
}

NormalForm nf_add(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b) {
  NormalForm out = a;
  for (const auto& [sig, c] : b.terms) {
    auto it = out.terms.find(sig);
    if (it == out.terms.end()) {
      out.terms.emplace(sig, c);
    } else {
      it->second = ce_add(it->second, c);
    }
  }
  prune(ctx, out);
  return out;
}

NormalForm nf_sub(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b) {
  return nf_add(ctx, a, nf_scale(b, -1.0));
}

NormalForm nf_scale(const NormalForm& a, std::complex<double> s) {
  NormalForm out;
  out.alg = a.alg;
  for (const auto& [sig, c] : a.terms) {
    out.terms.emplace(sig, ce_mul(ce_const(s), c));
  }
  return out;
}

NormalForm nf_rmul_coeff(const AlgebraCtx& ctx, const NormalForm& a, CE c) {
  NormalForm out;
  out.alg = a.alg;
  CE cc = a.alg == Alg::kHopR ? ce_subst(c, ce_x0(), ce_R()) : c;
  for (const auto& [sig, f] : a.terms) {
    out.terms.emplace(sig, ce_mul(f, cc));
  }
  prune(ctx, out);
  return out;
}

NormalForm nf_lmul_coeff(const AlgebraCtx& ctx, CE c, const NormalForm& a) {
  std::vector<Word> ws = nf_to_words(a);
  for (Word& w : ws) w.insert(w.begin(), fcoeff(c));
  return normalize(ctx, a.alg, std::move(ws));
}

NormalForm nf_mul(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b) {
  if (a.alg != b.alg) throw std::logic_error("nf_mul: family mismatch");
  std::vector<Word> ws;
  for (const auto& [sa, ca] : a.terms) {
    Word wa = term_to_word(a.alg, sa, ca);
    for (const auto& [sb, cb] : b.terms) {
      Word w = wa;
      Word wb = term_to_word(b.alg, sb, cb);
      w.insert(w.end(), wb.begin(), wb.end());
      ws.push_back(std::move(w));
    }
  }
  return normalize(ctx, a.alg, std::move(ws));
}

NormalForm nf_commutator(const AlgebraCtx& ctx, const NormalForm& a,
                         const NormalForm& b) {
  return nf_sub(ctx, nf_mul(ctx, a, b), nf_mul(ctx, b, a));
}

NormalForm nf_dagger(const AlgebraCtx& ctx, const NormalForm& a) {
  std::vector<Word> ws;
  for (const auto& [sig, c] : a.terms) {
    Word w = term_to_word(a.alg, sig, c);
    Word r;
    r.reserve(w.size());
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      if (it->is_gen) {
        r.push_back(fgen(dagger_gen(it->g)));
      } else {
        r.push_back(fcoeff(ce_conj(it->c)));
      }
    }
    ws.push_back(std::move(r));
  }
  return normalize(ctx, a.alg, std::move(ws));
}

bool nf_is_zero(const AlgebraCtx& ctx, const NormalForm& a) {
  for (const auto& [sig, c] : a.terms) {
    if (!coeff_is_zero(ctx, c)) return false;
  }
  return true;
}

bool nf_equal(const AlgebraCtx& ctx, const NormalForm& a, const NormalForm& b,
              double tol) {
  if (a.alg != b.alg) return false;
  std::vector<Sig> sigs;
  for (const auto& [sig, c] : a.terms) sigs.push_back(sig);
  for (const auto& [sig, c] : b.terms) {
    if (a.terms.find(sig) == a.terms.end()) sigs.push_back(sig);
  }
  CE zero = ce_const(0.0);
  for (const Sig& s : sigs) {
    auto ia = a.terms.find(s);
    auto ib = b.terms.find(s);
    CE ca = ia == a.terms.end() ? zero : ia->second;
    CE cb = ib == b.terms.end() ? zero : ib->second;
    if (!coeff_equal(ctx, ca, cb, tol)) return false;
  }
  return true;
}

NormalForm q_free_to_n(const AlgebraCtx& ctx, const NormalForm& a) {
  if (a.alg != Alg::kLadderNFree && a.alg != Alg::kLadderFree) {
    throw std::logic_error("q_free_to_n: wrong source family");
  }
  std::vector<Word> ws = nf_to_words(a);
  return normalize(ctx, Alg::kLadderN, std::move(ws));
}

NormalForm q_n_to_r(const AlgebraCtx& ctx, const NormalForm& a) {
  if (a.alg != Alg::kLadderN) throw std::logic_error("q_n_to_r: wrong source family");
  NormalForm out;
  out.alg = Alg::kLadderR;
  for (const auto& [sig, c] : a.terms) {
    out.terms.emplace(sig, ce_subst(c, ce_x0(), ce_R()));
  }
  prune(ctx, out);
  return out;
}

NormalForm q_free_to_r(const AlgebraCtx& ctx, const NormalForm& a) {
  return q_n_to_r(ctx, q_free_to_n(ctx, a));
}

NormalForm q_hop_to_r(const AlgebraCtx& ctx, const NormalForm& a) {
  if (a.alg != Alg::kHop) throw std::logic_error("q_hop_to_r: wrong source family");
  NormalForm out;
  out.alg = Alg::kHopR;
  for (const auto& [sig, c] : a.terms) {
    out.terms.emplace(sig, ce_subst(c, ce_x0(), ce_R()));
  }
  prune(ctx, out);
  return out;
}

std::map<int, NormalForm> grade_decompose(const NormalForm& a) {
  std::map<int, NormalForm> out;
  for (const auto& [sig, c] : a.terms) {
    int grade = is_hop(a.alg) ? sig.first + sig.second : 0;
    auto it = out.find(grade);
    if (it == out.end()) {
      NormalForm nf;
      nf.alg = a.alg;
      nf.terms.emplace(sig, c);
      out.emplace(grade, std::move(nf));
    } else {
      it->second.terms.emplace(sig, c);
    }
  }
  return out;
}

NormalForm mu(const AlgebraCtx& ctx, const NormalForm& a, const NormalForm& b) {
  if (a.alg != Alg::kHopR || b.alg != Alg::kHopR) {
    throw std::logic_error("mu: expects reduced hop elements");
  }
  std::vector<Word> ws;
  for (const auto& [sa, ca] : a.terms) {
    Word wa = term_to_word(Alg::kHopR, sa, ca);
    for (const auto& [sb, cb] : b.terms) {
      Word w = wa;
      Word wb = term_to_word(Alg::kHopR, sb, cb);
      w.insert(w.end(), wb.begin(), wb.end());
      ws.push_back(std::move(w));
    }
  }
  return normalize(ctx, Alg::kHopR, std::move(ws));
}

NormalForm ladder_to_hop(const AlgebraCtx& ctx, const NormalForm& a,
                         Alg target) {
  if (!is_hop(target)) throw std::logic_error("ladder_to_hop: bad target");
  if (!ladder_contracts(a.alg)) {
    throw std::logic_error("ladder_to_hop: source must be a contracting family");
  }
  std::vector<Word> ws;
  for (const auto& [sig, c] : a.terms) {
    Word w;
    if (sig.first >= 0) {
      for (int i = 0; i < sig.first; ++i) {
        w.push_back(fgen(Gen::bm));
        w.push_back(fgen(Gen::ap));
      }
    } else {
      for (int i = 0; i < -sig.first; ++i) {
        w.push_back(fgen(Gen::am));
        w.push_back(fgen(Gen::bp));
      }
    }
    w.push_back(fcoeff(c));
    ws.push_back(std::move(w));
  }
  return normalize(ctx, target, std::move(ws));
}

bool hop_has_ladder_shape(const NormalForm& a) {
  for (const auto& [sig, c] : a.terms) {
    if (sig.first + sig.second != 0) return false;
  }
  return true;
}

std::optional<NormalForm> hop_to_ladder(const AlgebraCtx& ctx,
                                        const NormalForm& a) {
  if (!is_hop(a.alg)) throw std::logic_error("hop_to_ladder: bad source");
  if (!hop_has_ladder_shape(a)) return std::nullopt;
  NormalForm out;
  out.alg = Alg::kLadderN;
  for (const auto& [sig, c] : a.terms) {
    int r = sig.first;
    if (r == 0) {
      accumulate(out, {{0, 0}, c});
      continue;
    }
    // (b- a+)^r = a+^r b-^r h_r  (and mirrored for r < 0): divide off h_r.
    Word w;
    for (int i = 0; i < std::abs(r); ++i) {
      if (r > 0) {
        w.push_back(fgen(Gen::bm));
        w.push_back(fgen(Gen::ap));
      } else {
        w.push_back(fgen(Gen::am));
        w.push_back(fgen(Gen::bp));
      }
    }
    NormalForm pow = normalize(ctx, Alg::kHop, std::move(w));
    auto it = pow.terms.find(sig);
    if (it == pow.terms.end()) return std::nullopt;
    accumulate(out, {{r, 0}, ce_div(c, it->second)});
  }
  prune(ctx, out);
  return out;
}

std::optional<NormalForm> reduced_hop_to_ladder_r(const AlgebraCtx& ctx,
                                                  const NormalForm& a) {
  if (a.alg != Alg::kHopR) {
    throw std::logic_error("reduced_hop_to_ladder_r: bad source");
  }
  NormalForm as_hop = a;
  as_hop.alg = Alg::kHop;  // coefficients are N0-free, so this is a lift
  auto ladder = hop_to_ladder(ctx, as_hop);
  if (!ladder) return std::nullopt;
  NormalForm out = q_n_to_r(ctx, *ladder);
  return out;
}

std::string nf_to_string(const NormalForm& a) {
  if (a.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [sig, c] : a.terms) {
    if (!first) os << " + ";
    first = false;
    Word w = term_to_word(a.alg, sig, ce_const(1.0));
    for (const Factor& f : w) {
      if (f.is_gen) os << gen_name(f.g) << " ";
    }
    os << "[" << ce_to_string(c) << "]";
  }
  return os.str();
}

}  // namespace ncsr
