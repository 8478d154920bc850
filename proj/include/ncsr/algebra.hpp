#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ncsr/coeff_expr.hpp"

namespace ncsr {

/// Operator families sharing one rewrite engine.
///
///   kLadderFree   X+, X- with the two-sided ladder commutator only.
///   kLadderR      ladder products contract through the fixed radius constant.
///   kLadderN      ladder products contract through the central generator N0.
///   kLadderNFree  N0-valued coefficients, but only the ladder commutator.
///   kHop          the four lattice hops a+, a-, b+, b- over window chains.
///   kHopR         hop words reduced modulo the right ideal generated by
///                 (N0 - R); products here are the non-associative pairing.
enum class Alg { kLadderFree, kLadderR, kLadderN, kLadderNFree, kHop, kHopR };

enum class Gen { Xp, Xm, ap, am, bp, bm };

/// One multiplicative factor: either a generator or a diagonal coefficient.
struct Factor {
  bool is_gen = false;
  Gen g = Gen::Xp;
  CE c;
};

Factor fgen(Gen g);
Factor fcoeff(CE c);

using Word = std::vector<Factor>;

Word word_gen(std::initializer_list<Gen> gs);

/// Signature of a normally ordered monomial.
///  - ladder families: (r, s) = powers of X+ then X-; the contracting
///    families always have s == 0 and use the sign of r for the direction.
///  - hop families: (p, q) = signed a-power then signed b-power.
using Sig = std::pair<int, int>;

struct NormalForm {
  Alg alg = Alg::kLadderFree;
  std::map<Sig, CE> terms;  // signature -> right coefficient
};

/// Shared evaluation context: curve data plus a set of generic (x0, n0)
/// probe points used for numeric zero tests and coefficient comparison.
struct AlgebraCtx {
  const ProfileCurve* prof = nullptr;
  const TrivialProfileData* triv = nullptr;  // required for hop families
  double eps = 0.0;
  std::optional<double> R;
  std::vector<std::pair<double, double>> probes;

  EvalCtx eval_ctx() const;
};

AlgebraCtx make_algebra_ctx(const ProfileCurve& prof,
                            const TrivialProfileData* triv, double eps,
                            std::optional<double> R);

/// Numeric coefficient predicates over the context's probe set.
bool coeff_is_zero(const AlgebraCtx& ctx, const CE& c, double tol = 1e-11);
bool coeff_equal(const AlgebraCtx& ctx, const CE& a, const CE& b,
                 double tol = 1e-9);

/// Rewrite a sum of words into normal form. Terms whose coefficient vanishes
/// on the probe set are dropped.
NormalForm normalize(const AlgebraCtx& ctx, Alg alg, std::vector<Word> words);
NormalForm normalize(const AlgebraCtx& ctx, Alg alg, Word word);

/// The word realizing one normal-form term (generator run + coefficient).
Word term_to_word(Alg alg, Sig sig, const CE& coeff);
std::vector<Word> nf_to_words(const NormalForm& nf);

NormalForm nf_zero(Alg alg);
NormalForm nf_one(Alg alg);
NormalForm nf_coeff(Alg alg, CE c);
NormalForm nf_gen(const AlgebraCtx& ctx, Alg alg, Gen g);

NormalForm nf_add(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b);
NormalForm nf_sub(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b);
/// Multiply every coefficient by a central scalar.
NormalForm nf_scale(const NormalForm& a, std::complex<double> s);
/// Right-multiply by a diagonal coefficient (no reordering needed).
NormalForm nf_rmul_coeff(const AlgebraCtx& ctx, const NormalForm& a, CE c);
/// Left-multiply by a diagonal coefficient (re-normalizes).
NormalForm nf_lmul_coeff(const AlgebraCtx& ctx, CE c, const NormalForm& a);
NormalForm nf_mul(const AlgebraCtx& ctx, const NormalForm& a,
                  const NormalForm& b);
NormalForm nf_commutator(const AlgebraCtx& ctx, const NormalForm& a,
                         const NormalForm& b);
/// Hermitian adjoint: reverse words, conjugate coefficients, swap +/- hops.
NormalForm nf_dagger(const AlgebraCtx& ctx, const NormalForm& a);

bool nf_is_zero(const AlgebraCtx& ctx, const NormalForm& a);
bool nf_equal(const AlgebraCtx& ctx, const NormalForm& a, const NormalForm& b,
              double tol = 1e-9);

/// Quotient maps between the families.
NormalForm q_free_to_n(const AlgebraCtx& ctx, const NormalForm& a);   // kLadderNFree -> kLadderN
NormalForm q_n_to_r(const AlgebraCtx& ctx, const NormalForm& a);      // kLadderN -> kLadderR
NormalForm q_free_to_r(const AlgebraCtx& ctx, const NormalForm& a);   // composition
NormalForm q_hop_to_r(const AlgebraCtx& ctx, const NormalForm& a);    // kHop -> kHopR

/// Level-shift grading of hop monomials: grade(a^p b^q) = p + q.
std::map<int, NormalForm> grade_decompose(const NormalForm& a);

/// Non-associative pairing on the reduced hop family: normalize the
/// concatenation, then reduce modulo (N0 - R).
NormalForm mu(const AlgebraCtx& ctx, const NormalForm& a, const NormalForm& b);

/// Ladder embedding X+ -> b- a+, X- -> a- b+ and its partial inverse.
/// hop_to_ladder succeeds iff every signature satisfies p + q == 0.
NormalForm ladder_to_hop(const AlgebraCtx& ctx, const NormalForm& a,
                         Alg target = Alg::kHop);
bool hop_has_ladder_shape(const NormalForm& a);
std::optional<NormalForm> hop_to_ladder(const AlgebraCtx& ctx,
                                        const NormalForm& a);

/// Reduced hop element of pure level-grade zero, rewritten as a ladder
/// element over the radius constant.
std::optional<NormalForm> reduced_hop_to_ladder_r(const AlgebraCtx& ctx,
                                                  const NormalForm& a);

std::string nf_to_string(const NormalForm& a);

}  // namespace ncsr
