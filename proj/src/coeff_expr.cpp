#include "ncsr/coeff_expr.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

// json included via header

namespace ncsr {

namespace {

CE node(CeOp op, CE a = nullptr, CE b = nullptr, int k = 0,
        std::complex<double> v = {}) {
  auto e = std::make_shared<CoeffExpr>();
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  e->k = k;
  e->cval = v;
  return e;
}

bool is_const(const CE& e, std::complex<double>* v = nullptr) {
  if (e->op != CeOp::kConst) return false;
  if (v) *v = e->cval;
  return true;
}

bool is_zero(const CE& e) {
  return e->op == CeOp::kConst && e->cval == std::complex<double>(0.0, 0.0);
}
bool is_one(const CE& e) {
  return e->op == CeOp::kConst && e->cval == std::complex<double>(1.0, 0.0);
}

}  // namespace

CE ce_const(std::complex<double> v) { return node(CeOp::kConst, nullptr, nullptr, 0, v); }
CE ce_const(double v) { return ce_const(std::complex<double>(v, 0.0)); }
CE ce_x0() { return node(CeOp::kX0); }
CE ce_n0() { return node(CeOp::kN0); }
CE ce_R() { return node(CeOp::kR); }
CE ce_eps() { return node(CeOp::kEps); }

CE ce_add(CE a, CE b) {
  std::complex<double> va, vb;
  if (is_const(a, &va) && is_const(b, &vb)) return ce_const(va + vb);
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  return node(CeOp::kAdd, std::move(a), std::move(b));
}

CE ce_sub(CE a, CE b) {
  std::complex<double> va, vb;
  if (is_const(a, &va) && is_const(b, &vb)) return ce_const(va - vb);
  if (is_zero(b)) return a;
  if (is_zero(a)) return ce_neg(std::move(b));
  return node(CeOp::kSub, std::move(a), std::move(b));
}

CE ce_mul(CE a, CE b) {
  std::complex<double> va, vb;
  if (is_const(a, &va) && is_const(b, &vb)) return ce_const(va * vb);
  if (is_zero(a) || is_zero(b)) return ce_const(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  return node(CeOp::kMul, std::move(a), std::move(b));
}

CE ce_div(CE a, CE b) {
  std::complex<double> vb;
  if (is_const(b, &vb) && vb != std::complex<double>(0.0, 0.0)) {
    std::complex<double> va;
    if (is_const(a, &va)) return ce_const(va / vb);
    if (vb == std::complex<double>(1.0, 0.0)) return a;
    // 0 / (nonzero constant) folds; a general 0/expr is kept so that the
    // removable-singularity guard still sees the quotient.
    if (is_zero(a)) return ce_const(0.0);
  }
  return node(CeOp::kDiv, std::move(a), std::move(b));
}

CE ce_neg(CE a) {
  std::complex<double> v;
  if (is_const(a, &v)) return ce_const(-v);
  return node(CeOp::kNeg, std::move(a));
}

CE ce_sqrt(CE a) { return node(CeOp::kSqrt, std::move(a)); }
CE ce_pow(CE a, int k) {
  if (k == 1) return a;
  if (k == 0) return ce_const(1.0);
  return node(CeOp::kPow, std::move(a), nullptr, k);
}
CE ce_conj(CE a) {
  std::complex<double> v;
  if (is_const(a, &v)) return ce_const(std::conj(v));
  return node(CeOp::kConj, std::move(a));
}
CE ce_rho(CE a) { return node(CeOp::kRhoK, std::move(a), nullptr, 0); }
CE ce_rho_k(CE a, int k) { return node(CeOp::kRhoK, std::move(a), nullptr, k); }
CE ce_tau(CE a) { return node(CeOp::kTau, std::move(a)); }
CE ce_tau_inv(CE a) { return node(CeOp::kTauInv, std::move(a)); }
CE ce_omega(CE a) { return node(CeOp::kOmega, std::move(a)); }
CE ce_omega_inv(CE a) { return node(CeOp::kOmegaInv, std::move(a)); }

CE ce_nk(int j) {
  if (j == 0) return ce_n0();
  return ce_omega(ce_add(ce_omega_inv(ce_n0()), ce_mul(ce_const(double(j)), ce_eps())));
}

CE ce_xk(int j) {
  if (j == 0) return ce_x0();
  return ce_add(ce_sub(ce_nk(j), ce_n0()), ce_x0());
}

namespace {

// Pointer-keyed memo keeps substitution linear in the number of distinct
// nodes and preserves subtree sharing in the result.
CE subst_rec(const CE& e, const CE& for_x0, const CE& for_n0,
             std::unordered_map<const CoeffExpr*, CE>& memo) {
  switch (e->op) {
    case CeOp::kX0: return for_x0;
    case CeOp::kN0: return for_n0;
    case CeOp::kConst:
    case CeOp::kR:
    case CeOp::kEps: return e;
    default: break;
  }
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  CE a = e->a ? subst_rec(e->a, for_x0, for_n0, memo) : nullptr;
  CE b = e->b ? subst_rec(e->b, for_x0, for_n0, memo) : nullptr;
  CE out = (a == e->a && b == e->b)
               ? e
               : node(e->op, std::move(a), std::move(b), e->k, e->cval);
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace

CE ce_subst(const CE& e, const CE& for_x0, const CE& for_n0) {
  std::unordered_map<const CoeffExpr*, CE> memo;
  return subst_rec(e, for_x0, for_n0, memo);
}

namespace {

using EvalMemo = std::unordered_map<const CoeffExpr*, std::complex<double>>;

std::complex<double> eval_rec(const CE& e, double x0, double n0, const EvalCtx& ctx,
                              int guard_depth, EvalMemo& memo);

double as_real(const std::complex<double>& v, const char* where) {
  if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real()))) {
    throw ProfileError(std::string("complex argument where a real one is required: ") + where);
  }
  return v.real();
}

std::complex<double> guarded_sqrt(std::complex<double> v) {
  if (std::abs(v.imag()) <= 1e-14 * (1.0 + std::abs(v.real()))) {
    double r = v.real();
    if (r < 0.0 && r >= -1e-12) r = 0.0;
    if (r >= 0.0) return {std::sqrt(r), 0.0};
  }
  return std::sqrt(v);
}

std::complex<double> eval_node(const CE& e, double x0, double n0, const EvalCtx& ctx,
                               int guard_depth, EvalMemo& memo) {
  switch (e->op) {
    case CeOp::kConst: return e->cval;
    case CeOp::kX0: return {x0, 0.0};
    case CeOp::kN0: return {n0, 0.0};
    case CeOp::kR: return {ctx.R, 0.0};
    case CeOp::kEps: return {ctx.eps, 0.0};
    case CeOp::kAdd: return eval_rec(e->a, x0, n0, ctx, guard_depth, memo) +
                            eval_rec(e->b, x0, n0, ctx, guard_depth, memo);
    case CeOp::kSub: return eval_rec(e->a, x0, n0, ctx, guard_depth, memo) -
                            eval_rec(e->b, x0, n0, ctx, guard_depth, memo);
    case CeOp::kMul: return eval_rec(e->a, x0, n0, ctx, guard_depth, memo) *
                            eval_rec(e->b, x0, n0, ctx, guard_depth, memo);
    case CeOp::kDiv: {
      auto num = eval_rec(e->a, x0, n0, ctx, guard_depth, memo);
      auto den = eval_rec(e->b, x0, n0, ctx, guard_depth, memo);
      if (std::abs(num) < 1e-8 && std::abs(den) < 1e-8 && guard_depth < 2) {
        // Removable singularity: average the two nearby evaluations
        // (fresh memos -- the shifted point invalidates cached values).
        EvalMemo mlo, mhi;
        auto lo = eval_rec(e, x0 - 1e-6, n0, ctx, guard_depth + 1, mlo);
        auto hi = eval_rec(e, x0 + 1e-6, n0, ctx, guard_depth + 1, mhi);
        return 0.5 * (lo + hi);
      }
      return num / den;
    }
    case CeOp::kNeg: return -eval_rec(e->a, x0, n0, ctx, guard_depth, memo);
    case CeOp::kSqrt:
      return guarded_sqrt(eval_rec(e->a, x0, n0, ctx, guard_depth, memo));
    case CeOp::kPow: {
      auto base = eval_rec(e->a, x0, n0, ctx, guard_depth, memo);
      int k = e->k;
      bool inv = k < 0;
      if (inv) k = -k;
      std::complex<double> acc{1.0, 0.0};
      for (int i = 0; i < k; ++i) acc *= base;
      return inv ? 1.0 / acc : acc;
    }
    case CeOp::kConj:
      return std::conj(eval_rec(e->a, x0, n0, ctx, guard_depth, memo));
    case CeOp::kRhoK: {
      double z = as_real(eval_rec(e->a, x0, n0, ctx, guard_depth, memo), "rho");
      if (!ctx.prof) throw ProfileError("curve data required to evaluate rho");
      return {ctx.prof->rho_k(z, e->k), 0.0};
    }
    case CeOp::kTau:
    case CeOp::kTauInv:
    case CeOp::kOmega:
    case CeOp::kOmegaInv: {
      if (!ctx.triv) throw ProfileError("single-well curve data required (tau/omega)");
      double z = as_real(eval_rec(e->a, x0, n0, ctx, guard_depth, memo), "tau/omega");
      switch (e->op) {
        case CeOp::kTau: return {ctx.triv->tau(z), 0.0};
        case CeOp::kTauInv: return {ctx.triv->tau_inv(z), 0.0};
        case CeOp::kOmega: return {ctx.triv->omega(z), 0.0};
        default: return {ctx.triv->omega_inv(z), 0.0};
      }
    }
  }
  throw ProfileError("unhandled expression node");
}

std::complex<double> eval_rec(const CE& e, double x0, double n0, const EvalCtx& ctx,
                              int guard_depth, EvalMemo& memo) {
  // Leaves are cheaper to recompute than to cache.
  if (!e->a) return eval_node(e, x0, n0, ctx, guard_depth, memo);
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  auto v = eval_node(e, x0, n0, ctx, guard_depth, memo);
  memo.emplace(e.get(), v);
  return v;
}

}  // namespace

std::complex<double> ce_eval(const CE& e, double x0, double n0, const EvalCtx& ctx) {
  EvalMemo memo;
  return eval_rec(e, x0, n0, ctx, 0, memo);
}

namespace {

const char* op_name(CeOp op) {
  switch (op) {
    case CeOp::kConst: return "const";
    case CeOp::kX0: return "x0";
    case CeOp::kN0: return "n0";
    case CeOp::kR: return "R";
    case CeOp::kEps: return "eps";
    case CeOp::kAdd: return "add";
    case CeOp::kSub: return "sub";
    case CeOp::kMul: return "mul";
    case CeOp::kDiv: return "div";
    case CeOp::kNeg: return "neg";
    case CeOp::kSqrt: return "sqrt";
    case CeOp::kPow: return "pow";
    case CeOp::kConj: return "conj";
    case CeOp::kRhoK: return "rho_k";
    case CeOp::kTau: return "tau";
    case CeOp::kTauInv: return "tau_inv";
    case CeOp::kOmega: return "omega";
    case CeOp::kOmegaInv: return "omega_inv";
  }
  return "?";
}

}  // namespace

std::string ce_to_string(const CE& e) {
  std::ostringstream os;
  switch (e->op) {
    case CeOp::kConst:
      if (e->cval.imag() == 0.0) {
        os << e->cval.real();
      } else {
        os << "(" << e->cval.real() << (e->cval.imag() < 0 ? "-" : "+")
           << std::abs(e->cval.imag()) << "i)";
      }
      return os.str();
    case CeOp::kX0: return "x0";
    case CeOp::kN0: return "n0";
    case CeOp::kR: return "R";
    case CeOp::kEps: return "eps";
    case CeOp::kAdd: return "(" + ce_to_string(e->a) + " + " + ce_to_string(e->b) + ")";
    case CeOp::kSub: return "(" + ce_to_string(e->a) + " - " + ce_to_string(e->b) + ")";
    case CeOp::kMul: return "(" + ce_to_string(e->a) + " * " + ce_to_string(e->b) + ")";
    case CeOp::kDiv: return "(" + ce_to_string(e->a) + " / " + ce_to_string(e->b) + ")";
    case CeOp::kNeg: return "-" + ce_to_string(e->a);
    case CeOp::kSqrt: return "sqrt(" + ce_to_string(e->a) + ")";
    case CeOp::kPow:
      return "pow(" + ce_to_string(e->a) + ", " + std::to_string(e->k) + ")";
    case CeOp::kConj: return "conj(" + ce_to_string(e->a) + ")";
    case CeOp::kRhoK:
      if (e->k == 0) return "rho(" + ce_to_string(e->a) + ")";
      return "rho^(" + std::to_string(e->k) + ")(" + ce_to_string(e->a) + ")";
    case CeOp::kTau: return "tau(" + ce_to_string(e->a) + ")";
    case CeOp::kTauInv: return "tau_inv(" + ce_to_string(e->a) + ")";
    case CeOp::kOmega: return "omega(" + ce_to_string(e->a) + ")";
    case CeOp::kOmegaInv: return "omega_inv(" + ce_to_string(e->a) + ")";
  }
  return "?";
}

nlohmann::json ce_to_json(const CE& e) {
  nlohmann::json j;
  j["op"] = op_name(e->op);
  if (e->op == CeOp::kConst) {
    j["re"] = e->cval.real();
    if (e->cval.imag() != 0.0) j["im"] = e->cval.imag();
  }
  if (e->op == CeOp::kPow || e->op == CeOp::kRhoK) j["k"] = e->k;
  if (e->a) j["a"] = ce_to_json(e->a);
  if (e->b) j["b"] = ce_to_json(e->b);
  return j;
}

CE ce_from_json(const nlohmann::json& j) {
  std::string op = j.at("op").get<std::string>();
  auto get_a = [&] { return ce_from_json(j.at("a")); };
  auto get_b = [&] { return ce_from_json(j.at("b")); };
  if (op == "const") {
    double re = j.at("re").get<double>();
    double im = j.value("im", 0.0);
    return ce_const(std::complex<double>(re, im));
  }
  if (op == "x0") return ce_x0();
  if (op == "n0") return ce_n0();
  if (op == "R") return ce_R();
  if (op == "eps") return ce_eps();
  if (op == "add") return node(CeOp::kAdd, get_a(), get_b());
  if (op == "sub") return node(CeOp::kSub, get_a(), get_b());
  if (op == "mul") return node(CeOp::kMul, get_a(), get_b());
  if (op == "div") return node(CeOp::kDiv, get_a(), get_b());
  if (op == "neg") return node(CeOp::kNeg, get_a());
  if (op == "sqrt") return node(CeOp::kSqrt, get_a());
  if (op == "pow") return node(CeOp::kPow, get_a(), nullptr, j.at("k").get<int>());
  if (op == "conj") return node(CeOp::kConj, get_a());
  if (op == "rho_k") return node(CeOp::kRhoK, get_a(), nullptr, j.at("k").get<int>());
  if (op == "tau") return node(CeOp::kTau, get_a());
  if (op == "tau_inv") return node(CeOp::kTauInv, get_a());
  if (op == "omega") return node(CeOp::kOmega, get_a());
  if (op == "omega_inv") return node(CeOp::kOmegaInv, get_a());
  throw ProfileError("unknown expression op in JSON: " + op);
}

CE ce_diff_x0(const CE& e) {
  switch (e->op) {
    case CeOp::kConst:
    case CeOp::kN0:
    case CeOp::kR:
    case CeOp::kEps: return ce_const(0.0);
    case CeOp::kX0: return ce_const(1.0);
    case CeOp::kAdd: return ce_add(ce_diff_x0(e->a), ce_diff_x0(e->b));
    case CeOp::kSub: return ce_sub(ce_diff_x0(e->a), ce_diff_x0(e->b));
    case CeOp::kMul:
      return ce_add(ce_mul(ce_diff_x0(e->a), e->b), ce_mul(e->a, ce_diff_x0(e->b)));
    case CeOp::kDiv:
      return ce_div(ce_sub(ce_mul(ce_diff_x0(e->a), e->b), ce_mul(e->a, ce_diff_x0(e->b))),
                    ce_pow(e->b, 2));
    case CeOp::kNeg: return ce_neg(ce_diff_x0(e->a));
    case CeOp::kSqrt:
      return ce_div(ce_diff_x0(e->a), ce_mul(ce_const(2.0), ce_sqrt(e->a)));
    case CeOp::kPow:
      return ce_mul(ce_mul(ce_const(double(e->k)), ce_pow(e->a, e->k - 1)),
                    ce_diff_x0(e->a));
    case CeOp::kConj: return ce_conj(ce_diff_x0(e->a));
    case CeOp::kRhoK: return ce_mul(ce_rho_k(e->a, e->k + 1), ce_diff_x0(e->a));
    case CeOp::kTau:
      // tau' = rho' / (2 tau).
      return ce_mul(ce_div(ce_rho_k(e->a, 1), ce_mul(ce_const(2.0), ce_tau(e->a))),
                    ce_diff_x0(e->a));
    case CeOp::kTauInv:
      // (tau_inv)'(v) = 2 v / rho'(tau_inv(v)).
      return ce_mul(ce_div(ce_mul(ce_const(2.0), e->a), ce_rho_k(ce_tau_inv(e->a), 1)),
                    ce_diff_x0(e->a));
    case CeOp::kOmega: {
      // omega' = rho'(omega + x) / (rho'(omega) - rho'(omega + x)).
      CE om = ce_omega(e->a);
      CE right = ce_add(om, e->a);
      CE num = ce_rho_k(right, 1);
      CE den = ce_sub(ce_rho_k(om, 1), ce_rho_k(right, 1));
      return ce_mul(ce_div(num, den), ce_diff_x0(e->a));
    }
    case CeOp::kOmegaInv: {
      // omega_inv(y) = tau_inv(-tau(y)) - y; derivative
      // rho'(y)/rho'(partner(y)) - 1 with partner = tau_inv(-tau(y)).
      CE partner = ce_tau_inv(ce_neg(ce_tau(e->a)));
      CE d = ce_sub(ce_div(ce_rho_k(e->a, 1), ce_rho_k(partner, 1)), ce_const(1.0));
      return ce_mul(d, ce_diff_x0(e->a));
    }
  }
  throw ProfileError("unhandled expression node in derivative");
}

}  // namespace ncsr
