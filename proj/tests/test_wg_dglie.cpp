// Suites for the weight-graded dg Lie layer, checked against exact
// matrix oracles: strictly upper-triangular matrices with weight the
// superdiagonal index form honest nilpotent dg Lie algebras, where the
// truncated BCH product is log(exp exp), the exponential adjoint is
// conjugation, and the gauge action is conjugation of the twisting
// matrix. The validator is exercised both on honest presentations and
// on a gallery of broken ones that must each be rejected with a
// pinpointed message.

#include <kaledin/wg_dglie.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "wg_support.hpp"

using namespace kaledin;
using testsup::Rng;

namespace {

/* Graded matrix commutator x y - (-1)^{|x||y|} y x of homogeneous
   degrees dx, dy. */
template <class F>
DenseMatrix<F> mat_gbracket(const F& field, const DenseMatrix<F>& x, int dx,
                            const DenseMatrix<F>& y, int dy) {
  return testsup::mat_add_scaled(field, mat_mul(field, x, y), mat_mul(field, y, x),
                                 field.from_int((dx * dy) & 1 ? 1 : -1));
}

/* Degrees that actually occur in a model. */
template <class F>
std::vector<int> model_degrees(const testsup::GlModel<F>& m) {
  std::vector<int> out;
  for (auto& [wd, n] : m.L.dims)
    if (n > 0 && std::find(out.begin(), out.end(), wd.second) == out.end())
      out.push_back(wd.second);
  return out;
}

template <class F>
void suite_matrix_arithmetic(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 3; n <= 5; ++n) {
    for (bool mixed : {false, true}) {
      const testsup::GlModel<F>& m =
          mixed ? testsup::gl_mixed(field, n) : testsup::gl_pure(field, n);
      std::vector<int> degs = model_degrees(m);
      for (int round = 0; round < 12; ++round) {
        int dx = degs[testsup::rnd_int(rng, 0, (int)degs.size() - 1)];
        int dy = degs[testsup::rnd_int(rng, 0, (int)degs.size() - 1)];
        WgVec<F> x = testsup::rnd_wg(field, m, dx, rng);
        WgVec<F> y = testsup::rnd_wg(field, m, dy, rng);
        DenseMatrix<F> mx = testsup::to_matrix(field, m, x);
        DenseMatrix<F> my = testsup::to_matrix(field, m, y);
        // Bracket against the graded matrix commutator.
        REQUIRE(wg_eq(field, m.L.bracket(field, x, y),
                      testsup::to_wg(field, m, mat_gbracket(field, mx, dx, my, dy))));
        // Differential against [Q, -].
        REQUIRE(wg_eq(field, m.L.apply_d(field, x),
                      testsup::to_wg(field, m, mat_gbracket(field, m.Q, -1, mx, dx))));
      }
    }
  }
}

template <class F>
void suite_bch(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 3; n <= 5; ++n) {
    const testsup::GlModel<F>& m = testsup::gl_pure(field, n);
    for (int round = 0; round < 30; ++round) {
      WgVec<F> x = testsup::rnd_wg(field, m, 0, rng);
      WgVec<F> y = testsup::rnd_wg(field, m, 0, rng);
      DenseMatrix<F> ex = testsup::mat_exp(field, testsup::to_matrix(field, m, x));
      DenseMatrix<F> ey = testsup::mat_exp(field, testsup::to_matrix(field, m, y));
      DenseMatrix<F> z = testsup::mat_log(field, mat_mul(field, ex, ey));
      REQUIRE(wg_eq(field, wg_truncated_bch(field, m.L, x, y),
                    testsup::to_wg(field, m, z)));
      // Unit and inverse laws.
      REQUIRE(wg_eq(field, wg_truncated_bch(field, m.L, x, {}), x));
      REQUIRE(wg_eq(field, wg_truncated_bch(field, m.L, {}, y), y));
      WgVec<F> neg = wg_scale(field, x, field.from_int(-1));
      REQUIRE(wg_truncated_bch(field, m.L, x, neg).empty());
      if (round < 10) {
        WgVec<F> w = testsup::rnd_wg(field, m, 0, rng);
        REQUIRE(wg_eq(field,
                      wg_truncated_bch(field, m.L, wg_truncated_bch(field, m.L, x, y), w),
                      wg_truncated_bch(field, m.L, x, wg_truncated_bch(field, m.L, y, w))));
      }
    }
  }
}

template <class F>
void suite_exp_ad(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 3; n <= 5; ++n) {
    for (bool mixed : {false, true}) {
      const testsup::GlModel<F>& m =
          mixed ? testsup::gl_mixed(field, n) : testsup::gl_pure(field, n);
      std::vector<int> degs = model_degrees(m);
      for (int round = 0; round < 15; ++round) {
        WgVec<F> x = testsup::rnd_wg(field, m, 0, rng);
        int dv = degs[testsup::rnd_int(rng, 0, (int)degs.size() - 1)];
        WgVec<F> v = testsup::rnd_wg(field, m, dv, rng);
        DenseMatrix<F> mx = testsup::to_matrix(field, m, x);
        DenseMatrix<F> ex = testsup::mat_exp(field, mx);
        DenseMatrix<F> ex_inv = testsup::mat_exp(
            field, testsup::mat_add_scaled(field, DenseMatrix<F>(field, m.n, m.n), mx,
                                           field.from_int(-1)));
        DenseMatrix<F> conj =
            testsup::mat_conj(field, ex, ex_inv, testsup::to_matrix(field, m, v));
        REQUIRE(wg_eq(field, wg_exp_ad(field, m.L, x, v),
                      testsup::to_wg(field, m, conj)));
      }
    }
  }
}

template <class F>
void suite_gauge_oracle(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 3; n <= 5; ++n) {
    const testsup::GlModel<F>& m = testsup::gl_mixed(field, n);
    for (int round = 0; round < 30; ++round) {
      WgVec<F> lam = testsup::rnd_wg(field, m, 0, rng);
      WgVec<F> phi = testsup::rnd_wg(field, m, -1, rng);
      REQUIRE(wg_eq(field, wg_gauge_action(field, m.L, lam, phi),
                    testsup::oracle_gauge(field, m, lam, phi)));
    }
  }
}

template <class F>
void suite_gauge_group(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 3; n <= 5; ++n) {
    const testsup::GlModel<F>& m = testsup::gl_mixed(field, n);
    for (int round = 0; round < 20; ++round) {
      WgVec<F> lam = testsup::rnd_wg(field, m, 0, rng);
      WgVec<F> mu = testsup::rnd_wg(field, m, 0, rng);
      WgVec<F> phi = testsup::rnd_wg(field, m, -1, rng);
      WgVec<F> stepwise =
          wg_gauge_action(field, m.L, lam, wg_gauge_action(field, m.L, mu, phi));
      WgVec<F> composed =
          wg_gauge_action(field, m.L, wg_truncated_bch(field, m.L, lam, mu), phi);
      REQUIRE(wg_eq(field, stepwise, composed));
      // The zero gauge fixes everything.
      REQUIRE(wg_eq(field, wg_gauge_action(field, m.L, {}, phi), phi));
    }
  }
}

template <class F>
void suite_flatness(const F& field, unsigned seed) {
  Rng rng(seed);
  for (int n = 4; n <= 5; ++n) {
    const testsup::GlModel<F>& m = testsup::gl_mixed(field, n);
    for (int round = 0; round < 40; ++round) {
      WgVec<F> phi = testsup::rnd_wg(field, m, -1, rng);
      bool flat = wg_is_mc(field, m.L, phi);
      REQUIRE(flat == testsup::oracle_is_flat(field, m, phi));
      if (flat) {
        REQUIRE(wg_mc_failing_weight(field, m.L, phi) == 0);
      } else {
        WgVec<F> res = wg_mc_residual(field, m.L, phi);
        REQUIRE(wg_mc_failing_weight(field, m.L, phi) == res.begin()->first.weight);
      }
      // Gauging preserves the verdict: conjugation preserves square-zero.
      WgVec<F> lam = testsup::rnd_wg(field, m, 0, rng);
      REQUIRE(wg_is_mc(field, m.L, wg_gauge_action(field, m.L, lam, phi)) == flat);
    }
  }
}

}  // namespace

TEST_CASE("matrix models validate and reproduce matrix arithmetic", "[wg]") {
  suite_matrix_arithmetic(Rationals{}, 801);
  suite_matrix_arithmetic(PrimeField{5}, 802);
}

TEST_CASE("truncated BCH matches the logarithm of a product of exponentials", "[wg]") {
  suite_bch(Rationals{}, 811);
  suite_bch(PrimeField{5}, 812);
}

TEST_CASE("low order BCH terms carry the textbook coefficients", "[wg]") {
  // In the 3 x 3 model with x, y the two simple superdiagonal matrices,
  // all brackets beyond [x, y] vanish and the product collapses to
  // x + y + (1/2)[x, y].
  Rationals field;
  const testsup::GlModel<Rationals>& m = testsup::gl_pure(field, 3);
  WgBasisElem x = m.elem_of.at({0, 1});
  WgBasisElem y = m.elem_of.at({1, 2});
  WgBasisElem t = m.elem_of.at({0, 2});
  WgVec<Rationals> z =
      wg_truncated_bch(field, m.L, {{x, field.one()}}, {{y, field.one()}});
  REQUIRE(z.size() == 3);
  REQUIRE(field.sub(z.at(x), field.one()) == field.zero());
  REQUIRE(field.sub(z.at(y), field.one()) == field.zero());
  REQUIRE(field.sub(z.at(t), field.from_fraction(1, 2)) == field.zero());
  // Flipping the arguments flips the sign of the commutator term.
  WgVec<Rationals> zr =
      wg_truncated_bch(field, m.L, {{y, field.one()}}, {{x, field.one()}});
  REQUIRE(field.sub(zr.at(t), field.from_fraction(-1, 2)) == field.zero());
}

TEST_CASE("the exponential adjoint matches matrix conjugation", "[wg]") {
  suite_exp_ad(Rationals{}, 821);
  suite_exp_ad(PrimeField{5}, 822);
}

TEST_CASE("the gauge action conjugates the twisting matrix", "[wg]") {
  suite_gauge_oracle(Rationals{}, 831);
  suite_gauge_oracle(PrimeField{5}, 832);
}

TEST_CASE("gauge actions compose through the BCH product", "[wg]") {
  suite_gauge_group(Rationals{}, 841);
  suite_gauge_group(PrimeField{5}, 842);
}

TEST_CASE("flatness agrees with square-zero twisting and is gauge invariant", "[wg]") {
  suite_flatness(Rationals{}, 851);
  suite_flatness(PrimeField{5}, 852);
}

TEST_CASE("twisting by a flat element yields a square-zero differential", "[wg]") {
  Rationals field;
  Rng rng(861);
  const testsup::GlModel<Rationals>& m = testsup::gl_mixed(field, 4);
  // Direct flat sampler: in the 4 x 4 model flatness is the single
  // scalar equation (1 + a) e + b c = 0 on the twisting matrix entries.
  for (int round = 0; round < 25; ++round) {
    auto a = testsup::rnd_scalar(field, rng);
    auto b = testsup::rnd_scalar(field, rng);
    auto c = testsup::rnd_scalar(field, rng);
    auto one_a = field.add(field.one(), a);
    if (field.is_zero(one_a)) continue;
    auto e = field.neg(field.mul(field.mul(b, c), field.inv(one_a)));
    WgVec<Rationals> phi{{m.elem_of.at({0, 1}), a},
                         {m.elem_of.at({2, 3}), c},
                         {m.elem_of.at({0, 2}), b}};
    if (!field.is_zero(e)) phi[m.elem_of.at({1, 3})] = e;
    REQUIRE(wg_is_mc(field, m.L, phi));
    WgTwisted<Rationals> tw = wg_twist(field, m.L, phi);
    for (int dv : {0, -1, -2}) {
      WgVec<Rationals> v = testsup::rnd_wg(field, m, dv, rng);
      REQUIRE(tw.apply(field, tw.apply(field, v)).empty());
    }
  }
  // A non-flat element is rejected with the failing weight.
  WgVec<Rationals> bad{{m.elem_of.at({1, 3}), field.one()}};
  REQUIRE_FALSE(wg_is_mc(field, m.L, bad));
  REQUIRE_THROWS_WITH(wg_twist(field, m.L, bad),
                      "twist: element is not flat; residual nonzero at weight 3");
}

TEST_CASE("degree gates reject mistyped arguments", "[wg]") {
  Rationals field;
  const testsup::GlModel<Rationals>& m = testsup::gl_mixed(field, 4);
  WgVec<Rationals> odd{{m.elem_of.at({0, 1}), field.one()}};   // degree -1
  WgVec<Rationals> even{{m.elem_of.at({1, 2}), field.one()}};  // degree 0
  REQUIRE_THROWS_WITH(wg_exp_ad(field, m.L, odd, even),
                      "exp(ad) is reserved for degree-0 elements");
  REQUIRE_THROWS_WITH(wg_truncated_bch(field, m.L, odd, {}),
                      "BCH is defined for degree-0 elements");
  REQUIRE_THROWS_WITH(wg_gauge_action(field, m.L, odd, odd),
                      "gauges must be homogeneous of degree 0");
  REQUIRE_THROWS_WITH(wg_gauge_action(field, m.L, even, even),
                      "gauge action targets degree -1 elements");
  REQUIRE_THROWS_WITH(wg_mc_residual(field, m.L, even),
                      "flat elements must be homogeneous of degree -1");
}

TEST_CASE("factorial gates name the blocking characteristic", "[wg]") {
  {
    PrimeField f5{5};
    const testsup::GlModel<PrimeField>& m = testsup::gl_pure(f5, 6);  // cap 5
    const char* msg =
        "requires invertible factorials up to 5!: "
        "5! is not invertible in characteristic 5";
    REQUIRE_THROWS_WITH(wg_truncated_bch(f5, m.L, {}, {}),
                        std::string("truncated BCH ") + msg);
    REQUIRE_THROWS_WITH(wg_exp_ad(f5, m.L, {}, {}), std::string("exp(ad) ") + msg);
    REQUIRE_THROWS_WITH(wg_gauge_action(f5, m.L, {}, {}),
                        std::string("gauge action ") + msg);
    REQUIRE_THROWS_WITH(wg_trivializing_gauge(f5, m.L, {}, 1),
                        std::string("gauge trivialization ") + msg);
  }
  {
    PrimeField f3{3};
    const testsup::GlModel<PrimeField>& m = testsup::gl_pure(f3, 4);  // cap 3
    REQUIRE_THROWS_WITH(wg_truncated_bch(f3, m.L, {}, {}),
                        "truncated BCH requires invertible factorials up to 3!: "
                        "3! is not invertible in characteristic 3");
    // One weight lower the gate opens again.
    const testsup::GlModel<PrimeField>& ok = testsup::gl_pure(f3, 3);  // cap 2
    REQUIRE(wg_truncated_bch(f3, ok.L, {}, {}).empty());
  }
}

TEST_CASE("flatness needs one half", "[wg]") {
  PrimeField f2{2};
  WgDgLie<PrimeField> L;
  L.weight_cap = 1;
  L.dims[{1, -1}] = 1;
  L.validate(f2);
  REQUIRE_THROWS_WITH(wg_mc_residual(f2, L, {}),
                      "flatness residual needs 1/2: characteristic 2 is not supported");
}

TEST_CASE("the validator pinpoints broken presentations", "[wg]") {
  Rationals field;
  auto base = [] {
    WgDgLie<Rationals> L;
    L.weight_cap = 2;
    L.dims[{1, 0}] = 1;
    return L;
  };

  {
    WgDgLie<Rationals> L = base();
    L.weight_cap = 0;
    REQUIRE_THROWS_WITH(L.validate(field), "weight cap must be at least 1");
  }
  {
    WgDgLie<Rationals> L = base();
    L.delta = 0;
    REQUIRE_THROWS_WITH(L.validate(field), "differential weight shift must be at least 1");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{0, 0}] = 1;
    REQUIRE_THROWS_WITH(L.validate(field), "weights start at 1");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{3, 0}] = 1;
    REQUIRE_THROWS_WITH(L.validate(field), "basis beyond the weight cap");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, 0}] = -1;
    REQUIRE_THROWS_WITH(L.validate(field), "negative dimension");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, -1}] = 1;
    L.diff[{1, 0, 0}] = {{{2, -1, 0}, field.zero()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "differential of (w1,d0,0): stored zero coefficient");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, -1}] = 1;
    L.diff[{1, 0, 0}] = {{{2, -1, 4}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "differential of (w1,d0,0): unknown basis element (w2,d-1,4)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, 0}] = 1;
    L.diff[{1, 0, 0}] = {{{2, 0, 0}, field.one()}};
    REQUIRE_THROWS_WITH(
        L.validate(field),
        "differential of (w1,d0,0): value off its (weight, degree) block at (w2,d0,0)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.diff[{1, 7, 0}] = {};
    REQUIRE_THROWS_WITH(L.validate(field), "differential on unknown element (w1,d7,0)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, 0}] = 1;
    L.diff[{2, 0, 0}] = {{{1, 0, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "differential value beyond the weight cap at (w2,d0,0)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.brk[{{1, 9, 0}, {1, 0, 0}}] = {};
    REQUIRE_THROWS_WITH(L.validate(field), "bracket on unknown basis pair");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{2, 0}] = 1;
    L.brk[{{2, 0, 0}, {1, 0, 0}}] = {{{1, 0, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field), "bracket value beyond the weight cap");
  }
  {
    WgDgLie<Rationals> L = base();
    L.dims[{1, 0}] = 2;
    L.dims[{2, 0}] = 1;
    L.brk[{{1, 0, 0}, {1, 0, 1}}] = {{{2, 0, 0}, field.one()}};
    L.brk[{{1, 0, 1}, {1, 0, 0}}] = {{{2, 0, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "bracket is not antisymmetric at [(w1,d0,0),(w1,d0,1)]");
  }
  {
    // In characteristic 2 the antisymmetry comparison cannot see a
    // nonzero square of an even element; the dedicated check does.
    PrimeField f2{2};
    WgDgLie<PrimeField> L;
    L.weight_cap = 2;
    L.dims[{1, 0}] = 1;
    L.dims[{2, 0}] = 1;
    L.brk[{{1, 0, 0}, {1, 0, 0}}] = {{{2, 0, 0}, f2.one()}};
    REQUIRE_THROWS_WITH(L.validate(f2), "[x,x] nonzero for even element (w1,d0,0)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.weight_cap = 3;
    L.dims[{2, -1}] = 1;
    L.dims[{3, -2}] = 1;
    L.diff[{1, 0, 0}] = {{{2, -1, 0}, field.one()}};
    L.diff[{2, -1, 0}] = {{{3, -2, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "differential does not square to zero at (w1,d0,0)");
  }
  {
    WgDgLie<Rationals> L = base();
    L.weight_cap = 3;
    L.dims[{1, 0}] = 2;
    L.dims[{2, -1}] = 1;
    L.dims[{3, -1}] = 1;
    L.diff[{1, 0, 0}] = {{{2, -1, 0}, field.one()}};
    L.brk[{{2, -1, 0}, {1, 0, 1}}] = {{{3, -1, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field), "Leibniz fails at [(w1,d0,0),(w1,d0,1)]");
  }
  {
    WgDgLie<Rationals> L = base();
    L.weight_cap = 3;
    L.dims[{1, 0}] = 3;
    L.dims[{2, 0}] = 1;
    L.dims[{3, 0}] = 1;
    L.brk[{{1, 0, 1}, {1, 0, 2}}] = {{{2, 0, 0}, field.one()}};
    L.brk[{{1, 0, 0}, {2, 0, 0}}] = {{{3, 0, 0}, field.one()}};
    REQUIRE_THROWS_WITH(L.validate(field),
                        "Jacobi fails at ((w1,d0,0),(w1,d0,1),(w1,d0,2))");
  }
}
