#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ncsr/algebra.hpp"
#include "ncsr/representation.hpp"

namespace ncsr {

// ---------------------------------------------------------------------------
// Commutative side: graded functions on a level circle bundle
// ---------------------------------------------------------------------------

/// Function on the classical surface written in circular harmonics: the value
/// at grade r is the coefficient of the r-th harmonic, a function of the
/// axial coordinate (the x0 leaf; the radius constant enters through the R
/// leaf). Real-valued functions satisfy f[-r] == conj(f[r]).
using GradedFunction = std::map<int, CE>;

GradedFunction gf_add(const GradedFunction& f, const GradedFunction& h);
GradedFunction gf_sub(const GradedFunction& f, const GradedFunction& h);
GradedFunction gf_scale(std::complex<double> s, const GradedFunction& f);
/// Multiplies every component by the same axial function.
GradedFunction gf_mul_ce(const CE& c, const GradedFunction& f);
/// Product of two graded functions (convolution over the grade).
GradedFunction gf_mul(const GradedFunction& f, const GradedFunction& h);

/// Value at axial position z and angle phi.
std::complex<double> gf_eval(const GradedFunction& f, double z, double phi,
                             const EvalCtx& ctx);
/// Largest component magnitude over the given axial sample points.
double gf_max_abs(const GradedFunction& f, const std::vector<double>& zs,
                  const EvalCtx& ctx);

/// `count` Chebyshev nodes strictly inside (z_lo, z_hi); the open endpoints
/// keep evaluation away from the poles that sit on the interval boundary.
std::vector<double> chebyshev_samples(double z_lo, double z_hi, int count);

/// Commutative image of a radius-reduced normal form: grade r keeps the
/// diagonal coefficient times (rho(R) - rho(z))^{|r|/2}, so that products of
/// normal forms map to products of graded functions in the small-step limit.
GradedFunction classical_image(const NormalForm& f);

/// Images of the three coordinate generators.
GradedFunction classical_x0();
GradedFunction classical_xp();
GradedFunction classical_xm();

/// Bracket on graded functions. Component t collects, over r + s = t,
///   s * f_r'(z) h_s(z) - r * h_s'(z) f_r(z).
GradedFunction poisson(const GradedFunction& f, const GradedFunction& h);

/// rho'(z)^2 + 4 (rho(R) - rho(z)): the normalising factor of the induced
/// metric in the bracket frame. Constant 4 on the round sphere.
CE metric_normalizer();

/// Metric pairing of the differentials of two graded functions.
GradedFunction metric_pair(const GradedFunction& f, const GradedFunction& h);

/// Coefficients of the dual of df on the coordinate differential frame.
struct HodgeCoefficients {
  GradedFunction minus;  // multiplies the X- differential
  GradedFunction plus;   // multiplies the X+ differential
  GradedFunction zero;   // multiplies the X0 differential
};
HodgeCoefficients hodge_df(const GradedFunction& f);

/// Laplace operator on graded functions (divergence of the dual of df).
GradedFunction laplacian(const GradedFunction& f);

// ---------------------------------------------------------------------------
// Bracket scaling limit
// ---------------------------------------------------------------------------

struct PbLimitPoint {
  double eps = 0.0;
  /// Largest entry of rep([f, h]) - eps * (classical bracket), divided
  /// by eps. A structural cancellation pass keeps defects that vanish
  /// identically at exact floating-point zero.
  double defect = 0.0;
};

struct PbLimitReport {
  std::vector<PbLimitPoint> points;
  bool all_zero = false;  // every measured defect was exactly zero
  double slope = 0.0;     // log-log least-squares slope; 0 when all_zero
};

/// Compares the finite-step commutator of two radius-reduced elements
/// against the step-scaled bracket of their commutative images, entry by
/// entry, on the single-interval representation over [z_lo, z_hi] (the
/// radius constant is z_lo). One measurement per requested step size.
PbLimitReport pb_limit_check(const ProfileCurve& prof, double z_lo,
                             double z_hi, const NormalForm& f,
                             const NormalForm& h,
                             const std::vector<double>& eps_list);

// ---------------------------------------------------------------------------
// Derivative one-form on the radius-reduced ladder family
// ---------------------------------------------------------------------------

/// One-form written on the frame (xi_plus, xi_zero); both components are
/// radius-reduced normal forms multiplying the frame element from the right.
struct OneForm {
  NormalForm plus = nf_zero(Alg::kLadderR);
  NormalForm zero = nf_zero(Alg::kLadderR);
};

/// The same data on the opposite frame (xi_minus, xi_zero).
struct OneFormAlt {
  NormalForm minus = nf_zero(Alg::kLadderR);
  NormalForm zero = nf_zero(Alg::kLadderR);
};

/// Choice of the second-order term of the derivative.
enum class DncVariant {
  /// Commutator-corrected second-order term: exact on constants and on the
  /// coordinate generators.
  kCommutatorSecondOrder,
  /// Keeps the raw bracket plus a scalar offset instead of the corrected
  /// commutator; fails d(1) = 0 and diverges as the step shrinks. Kept for
  /// defect measurements.
  kScalarSecondOrder,
  /// Difference factor attached on the wrong side; d(1) = 0 still holds but
  /// the coordinate generator images acquire an O(eps) error.
  kLeftDifference,
};

/// Derivative of a radius-reduced element as a one-form on the
/// (xi_plus, xi_zero) frame.
OneForm d_nc(const AlgebraCtx& ctx, const NormalForm& f,
             DncVariant variant = DncVariant::kCommutatorSecondOrder);

/// The same derivative on the (xi_minus, xi_zero) frame.
OneFormAlt d_nc_alt(const AlgebraCtx& ctx, const NormalForm& f);

/// Frame elements inside the reduced hop family (grade -2 words).
NormalForm xi_plus(const AlgebraCtx& ctx);
NormalForm xi_minus(const AlgebraCtx& ctx);
NormalForm xi_zero(const AlgebraCtx& ctx);

/// xi_minus written on the (xi_plus, xi_zero) frame; the expansion is an
/// exact identity of the reduced hop family.
OneForm xi_minus_components(const AlgebraCtx& ctx);
/// xi_plus written on the (xi_minus, xi_zero) frame.
OneFormAlt xi_plus_components(const AlgebraCtx& ctx);

// ---------------------------------------------------------------------------
// Masked window representations
// ---------------------------------------------------------------------------

/// Block operator together with the source states whose columns are not
/// trustworthy because a diagonal coefficient was singular there. Those
/// columns are zeroed and must be excluded from comparisons.
struct MaskedOp {
  BlockOperator op;
  std::set<std::pair<int, int>> excluded;  // (space, state) source labels
  std::vector<std::string> notes;
};

/// When 0 <= src_lo <= src_hi, only columns whose source space lies in
/// [src_lo, src_hi] are represented (intermediate and target spaces are
/// unrestricted); other blocks are dropped. Default: all source spaces.
MaskedOp masked_represent(const NormalForm& nf, const Lattice& lat,
                          const GenOps& gens, int src_lo = -1,
                          int src_hi = -1);
MaskedOp mo_compose(const MaskedOp& a, const MaskedOp& b);
MaskedOp mo_add(const MaskedOp& a, const MaskedOp& b);
/// Largest entry difference over blocks with the given source space,
/// skipping columns excluded on either side.
double mo_diff_max(const MaskedOp& a, const MaskedOp& b, int src_space);
/// Same, additionally skipping the given source states.
double mo_diff_max(const MaskedOp& a, const MaskedOp& b, int src_space,
                   const std::set<int>& skip_states);
/// Largest entry magnitude over blocks with the given source space,
/// skipping excluded columns.
double mo_max_abs(const MaskedOp& a, int src_space);

/// States of window n_star where the one-form expansion is ill-conditioned:
/// one of its construction denominators -- rho(R) - rho(x + k eps) for
/// k in {-1, 0, 1}, or the frame denominator rho(x + 2 eps) - rho(x) --
/// falls below `floor_ratio` times that denominator's largest magnitude over
/// the window. Dividing by such a value amplifies the O(eps) remainder of
/// the difference calculus past any fixed bound, so comparisons restricted
/// to the remaining states are the ones that converge under eps refinement.
std::set<int> degenerate_expansion_states(const AlgebraCtx& ctx,
                                          const TrivialLattice& tl, int n_star,
                                          double floor_ratio = 0.30);

/// Representation of a one-form on a window lattice: the frame elements act
/// through the hop operators, the components through the embedded ladder
/// operators. Entries are meaningful on source space n_star - 1, where the
/// radius constant of the algebra context matches the window; the context
/// radius must equal that window's lowest position value.
MaskedOp one_form_rep(const AlgebraCtx& ctx, const TrivialLattice& tl,
                      int n_star, const OneForm& w);

/// Right action of an element on a one-form (component-wise product).
OneForm of_rmul(const AlgebraCtx& ctx, const OneForm& w, const NormalForm& h);

/// Largest entry of rep(d(f h)) - rep(df) h - f rep(dh) over admissible
/// source states of window n_star. `f` and `h` are ladder elements with a
/// central level constant (their coefficients must not involve the radius
/// leaf); the derivative acts on their radius-reduced images. States flagged
/// by degenerate_expansion_states(..., floor_ratio) are skipped; pass 0 to
/// compare over every representable state.
double leibniz_defect(const AlgebraCtx& ctx, const TrivialLattice& tl,
                      int n_star, const NormalForm& f, const NormalForm& h,
                      DncVariant variant = DncVariant::kCommutatorSecondOrder,
                      double floor_ratio = 0.30);

// ---------------------------------------------------------------------------
// Vector fields and inner derivations
// ---------------------------------------------------------------------------

/// Applies the vector field of a grade +2 reduced hop element to a
/// radius-reduced function: the pairing of the element with the derivative
/// one-form through the hop product. Throws std::invalid_argument when xi is
/// not homogeneous of grade +2 or the contraction does not close on the
/// ladder family.
NormalForm vector_apply(const AlgebraCtx& ctx, const NormalForm& xi,
                        const NormalForm& f);

/// Result of writing a derivation of the single-interval representation as a
/// commutator.
struct InnerResult {
  Eigen::MatrixXcd f;          // [f, .] reproduces the derivation
  double precondition_defect;  // largest consistency residual of the input
  double roundtrip_defect;     // largest |[f, gen] - xi(gen)| afterwards
};

/// Writes the derivation determined by its values on the three generators as
/// a commutator with a single matrix. Throws std::invalid_argument when the
/// input fails the derivation consistency checks at tolerance `tol`.
InnerResult derivation_to_inner(const StandardRep& rep,
                                const Eigen::MatrixXcd& xi_x0,
                                const Eigen::MatrixXcd& xi_xp,
                                const Eigen::MatrixXcd& xi_xm,
                                double tol = 1e-8);

}  // namespace ncsr
