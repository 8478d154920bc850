#pragma once

#include <complex>
#include <memory>
#include <string>

#include <json.hpp>

#include "ncsr/profile.hpp"

namespace ncsr {

/// Immutable expression DAG for operator coefficients: functions of the two
/// commuting diagonal generators (and the radius constant), closed under the
/// curve data (rho and its derivatives, the signed root tau, the level-window
/// map omega and their inverses).
struct CoeffExpr;
using CE = std::shared_ptr<const CoeffExpr>;

enum class CeOp {
  kConst,
  kX0,
  kN0,
  kR,
  kEps,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSqrt,
  kPow,   // integer exponent in `k`
  kConj,
  kRhoK,  // k-th derivative of the height curve, k >= 0
  kTau,
  kTauInv,
  kOmega,
  kOmegaInv,
};

struct CoeffExpr {
  CeOp op = CeOp::kConst;
  std::complex<double> cval{0.0, 0.0};
  int k = 0;
  CE a, b;
};

// Leaf and node constructors (with light constant folding).
CE ce_const(std::complex<double> v);
CE ce_const(double v);
CE ce_x0();
CE ce_n0();
CE ce_R();
CE ce_eps();
CE ce_add(CE a, CE b);
CE ce_sub(CE a, CE b);
CE ce_mul(CE a, CE b);
CE ce_div(CE a, CE b);
CE ce_neg(CE a);
CE ce_sqrt(CE a);
CE ce_pow(CE a, int k);
CE ce_conj(CE a);
CE ce_rho(CE a);
CE ce_rho_k(CE a, int k);
CE ce_tau(CE a);
CE ce_tau_inv(CE a);
CE ce_omega(CE a);
CE ce_omega_inv(CE a);

/// Level-window companions: nk(j) is the first diagonal generator transported
/// j sites along the window chain, xk(j) the second one transported with it.
CE ce_nk(int j);  // omega(omega_inv(N0) + j*eps)
CE ce_xk(int j);  // nk(j) - N0 + X0

/// Structural substitution of the X0 / N0 leaves.
CE ce_subst(const CE& e, const CE& for_x0, const CE& for_n0);

struct EvalCtx {
  const ProfileCurve* prof = nullptr;
  const TrivialProfileData* triv = nullptr;  // required by tau/omega nodes
  double R = 0.0;
  double eps = 0.0;
};

/// Evaluate at (x0, n0). Guards: square-root radicands are clamped to zero
/// down to -1e-12 (below that the principal complex root is taken, keeping
/// identities testable); removable 0/0 quotients (|num|, |den| < 1e-8) are
/// re-evaluated at x0 +- 1e-6 and averaged.
std::complex<double> ce_eval(const CE& e, double x0, double n0, const EvalCtx& ctx);

std::string ce_to_string(const CE& e);

/// JSON AST, vocabulary version 1. See README for the node list.
nlohmann::json ce_to_json(const CE& e);
CE ce_from_json(const nlohmann::json& j);

/// Derivative with respect to the X0 leaf (classical one-variable use; the
/// N0/R/Eps leaves are treated as constants). tau/omega nodes differentiate
/// via their defining identities.
CE ce_diff_x0(const CE& e);

}  // namespace ncsr
