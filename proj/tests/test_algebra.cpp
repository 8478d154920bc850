#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "common_profiles.hpp"
#include "ncsr/algebra.hpp"

using namespace ncsr;
using namespace ncsr_test;

namespace {

struct Fix {
  ProfileCurve prof = parabola();
  TrivialProfileData triv{prof};
  AlgebraCtx ctx = make_algebra_ctx(prof, &triv, 0.5, -1.5);
};

CE x0_plus_eps() { return ce_add(ce_x0(), ce_eps()); }

/// Small pool of coefficient expressions for randomized words.
CE random_coeff(std::mt19937& rng, bool allow_n0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  switch (rng() % (allow_n0 ? 4 : 3)) {
    case 0: return ce_const(std::complex<double>(u(rng), u(rng)));
    case 1: return ce_add(ce_mul(ce_const(u(rng)), ce_x0()), ce_const(u(rng)));
    case 2: return ce_add(ce_rho(ce_x0()), ce_const(u(rng)));
    default: return ce_add(ce_mul(ce_const(u(rng)), ce_n0()), ce_x0());
  }
}

Word random_word(std::mt19937& rng, const std::vector<Gen>& gens, int max_len,
                 bool allow_n0) {
  std::uniform_int_distribution<int> len(1, max_len);
  Word w;
  int L = len(rng);
  for (int i = 0; i < L; ++i) {
    if (rng() % 4 == 0) {
      w.push_back(fcoeff(random_coeff(rng, allow_n0)));
    } else {
      w.push_back(fgen(gens[rng() % gens.size()]));
    }
  }
  return w;
}

}  // namespace

TEST_CASE("ladder reorder splits into two terms") {
  Fix f;
  auto nf = normalize(f.ctx, Alg::kLadderFree, word_gen({Gen::Xm, Gen::Xp}));
  REQUIRE(nf.terms.size() == 2);
  // X- X+ = X+ X- + (rho(X0) - rho(X0 + eps)); on the parabola the scalar
  // part is -2 eps X0 - eps^2.
  CE expect = ce_sub(ce_mul(ce_const(-2.0), ce_mul(ce_eps(), ce_x0())),
                     ce_mul(ce_eps(), ce_eps()));
  CHECK(coeff_equal(f.ctx, nf.terms.at({1, 1}), ce_const(1.0)));
  CHECK(coeff_equal(f.ctx, nf.terms.at({0, 0}), expect));
}

TEST_CASE("coefficients transport with a shift") {
  Fix f;
  Word w{fcoeff(ce_rho(ce_x0())), fgen(Gen::Xp)};
  auto nf = normalize(f.ctx, Alg::kLadderFree, w);
  REQUIRE(nf.terms.size() == 1);
  CHECK(coeff_equal(f.ctx, nf.terms.at({1, 0}), ce_rho(x0_plus_eps())));

  auto lm = nf_lmul_coeff(f.ctx, ce_x0(), nf_gen(f.ctx, Alg::kLadderFree, Gen::Xm));
  REQUIRE(lm.terms.size() == 1);
  CHECK(coeff_equal(f.ctx, lm.terms.at({0, 1}), ce_sub(ce_x0(), ce_eps())));
}

TEST_CASE("contracting families reduce ladder products") {
  Fix f;
  auto pm_r = normalize(f.ctx, Alg::kLadderR, word_gen({Gen::Xp, Gen::Xm}));
  REQUIRE(pm_r.terms.size() == 1);
  CHECK(coeff_equal(f.ctx, pm_r.terms.at({0, 0}),
                    ce_sub(ce_rho(ce_R()), ce_rho(ce_x0()))));
  auto mp_r = normalize(f.ctx, Alg::kLadderR, word_gen({Gen::Xm, Gen::Xp}));
  CHECK(coeff_equal(f.ctx, mp_r.terms.at({0, 0}),
                    ce_sub(ce_rho(ce_R()), ce_rho(x0_plus_eps()))));

  auto pm_n = normalize(f.ctx, Alg::kLadderN, word_gen({Gen::Xp, Gen::Xm}));
  CHECK(coeff_equal(f.ctx, pm_n.terms.at({0, 0}),
                    ce_sub(ce_rho(ce_n0()), ce_rho(ce_x0()))));
  auto mp_n = normalize(f.ctx, Alg::kLadderN, word_gen({Gen::Xm, Gen::Xp}));
  CHECK(coeff_equal(f.ctx, mp_n.terms.at({0, 0}),
                    ce_sub(ce_rho(ce_n0()), ce_rho(x0_plus_eps()))));
}

TEST_CASE("free-family product agrees with word concatenation") {
  Fix f;
  std::mt19937 rng(20260821);
  std::vector<Gen> gens{Gen::Xp, Gen::Xm};
  for (int it = 0; it < 20; ++it) {
    Word w1 = random_word(rng, gens, 4, false);
    Word w2 = random_word(rng, gens, 4, false);
    Word cat = w1;
    cat.insert(cat.end(), w2.begin(), w2.end());
    auto a = normalize(f.ctx, Alg::kLadderFree, w1);
    auto b = normalize(f.ctx, Alg::kLadderFree, w2);
    CHECK(nf_equal(f.ctx, nf_mul(f.ctx, a, b),
                   normalize(f.ctx, Alg::kLadderFree, cat)));
  }
}

TEST_CASE("central-generator family product agrees with word concatenation") {
  Fix f;
  std::mt19937 rng(7);
  std::vector<Gen> gens{Gen::Xp, Gen::Xm};
  for (int it = 0; it < 20; ++it) {
    Word w1 = random_word(rng, gens, 4, true);
    Word w2 = random_word(rng, gens, 4, true);
    Word cat = w1;
    cat.insert(cat.end(), w2.begin(), w2.end());
    auto a = normalize(f.ctx, Alg::kLadderN, w1);
    auto b = normalize(f.ctx, Alg::kLadderN, w2);
    CHECK(nf_equal(f.ctx, nf_mul(f.ctx, a, b),
                   normalize(f.ctx, Alg::kLadderN, cat)));
  }
}

TEST_CASE("reinterpreting free words in the contracting family") {
  Fix f;
  // Normalizing X-X+ first in the free family and then contracting must
  // agree with contracting directly.
  auto free_nf = normalize(f.ctx, Alg::kLadderNFree, word_gen({Gen::Xm, Gen::Xp}));
  auto via_q = q_free_to_n(f.ctx, free_nf);
  auto direct = normalize(f.ctx, Alg::kLadderN, word_gen({Gen::Xm, Gen::Xp}));
  CHECK(nf_equal(f.ctx, via_q, direct));

  // And the radius reduction commutes with the intermediate step.
  auto via_r = q_n_to_r(f.ctx, via_q);
  auto direct_r = q_free_to_r(f.ctx, free_nf);
  CHECK(nf_equal(f.ctx, via_r, direct_r));
  CHECK(coeff_equal(f.ctx, via_r.terms.at({0, 0}),
                    ce_sub(ce_rho(ce_R()), ce_rho(x0_plus_eps()))));
}

TEST_CASE("dagger is an involution and swaps ladder directions") {
  Fix f;
  auto xp = nf_gen(f.ctx, Alg::kLadderR, Gen::Xp);
  auto xm = nf_gen(f.ctx, Alg::kLadderR, Gen::Xm);
  CHECK(nf_equal(f.ctx, nf_dagger(f.ctx, xp), xm));

  std::mt19937 rng(99);
  std::vector<Gen> gens{Gen::Xp, Gen::Xm};
  for (int it = 0; it < 10; ++it) {
    auto nf = normalize(f.ctx, Alg::kLadderR, random_word(rng, gens, 4, false));
    CHECK(nf_equal(f.ctx, nf_dagger(f.ctx, nf_dagger(f.ctx, nf)), nf));
  }
}

TEST_CASE("commutator identities") {
  Fix f;
  std::mt19937 rng(4242);
  std::vector<Gen> gens{Gen::Xp, Gen::Xm};
  for (int it = 0; it < 5; ++it) {
    auto a = normalize(f.ctx, Alg::kLadderR, random_word(rng, gens, 3, false));
    auto b = normalize(f.ctx, Alg::kLadderR, random_word(rng, gens, 3, false));
    auto c = normalize(f.ctx, Alg::kLadderR, random_word(rng, gens, 3, false));
    auto j1 = nf_commutator(f.ctx, nf_commutator(f.ctx, a, b), c);
    auto j2 = nf_commutator(f.ctx, nf_commutator(f.ctx, b, c), a);
    auto j3 = nf_commutator(f.ctx, nf_commutator(f.ctx, c, a), b);
    auto sum = nf_add(f.ctx, nf_add(f.ctx, j1, j2), j3);
    CHECK(nf_is_zero(f.ctx, sum));
  }
}

TEST_CASE("hop contractions on the parabola") {
  Fix f;
  // With rho = z^2: tau(u) = -u, so the four contractions are affine.
  auto am_ap = normalize(f.ctx, Alg::kHop, word_gen({Gen::am, Gen::ap}));
  REQUIRE(am_ap.terms.count({0, 0}) == 1);
  CE expect1 = ce_add(ce_sub(ce_x0(), ce_n0()), ce_eps());  // x0 + eps - n0
  CHECK(coeff_equal(f.ctx, am_ap.terms.at({0, 0}), expect1));

  auto bm_bp = normalize(f.ctx, Alg::kHop, word_gen({Gen::bm, Gen::bp}));
  CE expect2 = ce_neg(ce_add(ce_n0(), ce_x0()));  // -(n0 + x0)
  CHECK(coeff_equal(f.ctx, bm_bp.terms.at({0, 0}), expect2));

  // ap am: tau(nk(-1)) - tau(xk(-1)); on the parabola nk(-1) = n0 + eps/2,
  // xk(-1) = x0 + eps/2, so the value is x0 - n0.
  auto ap_am = normalize(f.ctx, Alg::kHop, word_gen({Gen::ap, Gen::am}));
  CHECK(coeff_equal(f.ctx, ap_am.terms.at({0, 0}), ce_sub(ce_x0(), ce_n0())));

  auto bp_bm = normalize(f.ctx, Alg::kHop, word_gen({Gen::bp, Gen::bm}));
  CE expect4 = ce_neg(ce_add(ce_add(ce_n0(), ce_x0()), ce_eps()));
  CHECK(coeff_equal(f.ctx, bp_bm.terms.at({0, 0}), expect4));
}

TEST_CASE("hop product agrees with word concatenation") {
  Fix f;
  std::mt19937 rng(1234);
  std::vector<Gen> gens{Gen::ap, Gen::am, Gen::bp, Gen::bm};
  for (int it = 0; it < 12; ++it) {
    Word w1 = random_word(rng, gens, 3, true);
    Word w2 = random_word(rng, gens, 3, true);
    Word cat = w1;
    cat.insert(cat.end(), w2.begin(), w2.end());
    auto a = normalize(f.ctx, Alg::kHop, w1);
    auto b = normalize(f.ctx, Alg::kHop, w2);
    CHECK(nf_equal(f.ctx, nf_mul(f.ctx, a, b),
                   normalize(f.ctx, Alg::kHop, cat)));
  }
}

TEST_CASE("hop dagger involution") {
  Fix f;
  std::mt19937 rng(5150);
  std::vector<Gen> gens{Gen::ap, Gen::am, Gen::bp, Gen::bm};
  auto ap = nf_gen(f.ctx, Alg::kHop, Gen::ap);
  auto am = nf_gen(f.ctx, Alg::kHop, Gen::am);
  CHECK(nf_equal(f.ctx, nf_dagger(f.ctx, ap), am));
  for (int it = 0; it < 8; ++it) {
    auto nf = normalize(f.ctx, Alg::kHop, random_word(rng, gens, 3, true));
    CHECK(nf_equal(f.ctx, nf_dagger(f.ctx, nf_dagger(f.ctx, nf)), nf));
  }
}

TEST_CASE("ladder embedding and its inverse") {
  Fix f;
  // b- a+ realizes X+.
  auto xp_hop = normalize(f.ctx, Alg::kHop, word_gen({Gen::bm, Gen::ap}));
  REQUIRE(xp_hop.terms.size() == 1);
  REQUIRE(xp_hop.terms.count({1, -1}) == 1);
  auto back = hop_to_ladder(f.ctx, xp_hop);
  REQUIRE(back.has_value());
  REQUIRE(back->terms.size() == 1);
  CHECK(coeff_equal(f.ctx, back->terms.at({1, 0}), ce_const(1.0)));

  // X+ X- assembled from hops contracts to rho(N0) - rho(X0).
  auto prod = normalize(f.ctx, Alg::kHop,
                        word_gen({Gen::bm, Gen::ap, Gen::am, Gen::bp}));
  auto ladder = hop_to_ladder(f.ctx, prod);
  REQUIRE(ladder.has_value());
  auto direct = normalize(f.ctx, Alg::kLadderN, word_gen({Gen::Xp, Gen::Xm}));
  CHECK(nf_equal(f.ctx, *ladder, direct));

  // Round trip through the embedding for a mixed element.
  std::mt19937 rng(31);
  for (int it = 0; it < 6; ++it) {
    std::uniform_int_distribution<int> pick(-2, 2);
    NormalForm src = nf_zero(Alg::kLadderN);
    src.terms[{pick(rng), 0}] = random_coeff(rng, true);
    src.terms[{pick(rng), 0}] = random_coeff(rng, true);
    auto hop = ladder_to_hop(f.ctx, src);
    auto rt = hop_to_ladder(f.ctx, hop);
    REQUIRE(rt.has_value());
    CHECK(nf_equal(f.ctx, *rt, src, 1e-8));
  }

  // A bare up-hop is not in the embedded image.
  auto lone = nf_gen(f.ctx, Alg::kHop, Gen::ap);
  CHECK(!hop_has_ladder_shape(lone));
  CHECK(!hop_to_ladder(f.ctx, lone).has_value());
}

TEST_CASE("level-shift grading") {
  Fix f;
  std::vector<Word> ws;
  ws.push_back(word_gen({Gen::ap}));
  ws.push_back(word_gen({Gen::am, Gen::am}));
  ws.push_back(word_gen({Gen::bp}));
  auto nf = normalize(f.ctx, Alg::kHop, ws);
  auto parts = grade_decompose(nf);
  REQUIRE(parts.size() == 2);
  CHECK(parts.count(1) == 1);
  CHECK(parts.count(-2) == 1);
  CHECK(parts.at(1).terms.size() == 2);  // a+ and b+ both shift by one level
  CHECK(parts.at(-2).terms.count({-2, 0}) == 1);
}

TEST_CASE("reduced pairing is not associative") {
  Fix f;
  auto ap = nf_gen(f.ctx, Alg::kHopR, Gen::ap);
  auto am = nf_gen(f.ctx, Alg::kHopR, Gen::am);
  auto bp = nf_gen(f.ctx, Alg::kHopR, Gen::bp);

  auto lhs = mu(f.ctx, mu(f.ctx, ap, am), bp);
  auto rhs = mu(f.ctx, ap, mu(f.ctx, am, bp));

  // Right association collapses to b+ (tau(R) - tau(X0)).
  NormalForm expect = nf_zero(Alg::kHopR);
  expect.terms[{0, 1}] = ce_sub(ce_tau(ce_R()), ce_tau(ce_x0()));
  CHECK(nf_equal(f.ctx, rhs, expect));
  CHECK(!nf_equal(f.ctx, lhs, rhs));
}

TEST_CASE("reduced grade-zero elements rewrite over the radius") {
  Fix f;
  // X+ X- in the reduced hop family -> rho(R) - rho(X0).
  auto prod = normalize(f.ctx, Alg::kHopR,
                        word_gen({Gen::bm, Gen::ap, Gen::am, Gen::bp}));
  auto ar = reduced_hop_to_ladder_r(f.ctx, prod);
  REQUIRE(ar.has_value());
  REQUIRE(ar->terms.size() == 1);
  CHECK(coeff_equal(f.ctx, ar->terms.at({0, 0}),
                    ce_sub(ce_rho(ce_R()), ce_rho(ce_x0()))));
}
