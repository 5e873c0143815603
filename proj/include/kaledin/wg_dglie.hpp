#pragma once
// Weight-graded dg Lie algebras presented by structure constants on a
// finite basis, truncated above a weight cap (every operation is exact
// modulo the corresponding filtration level). The differential raises
// weight by a fixed shift; flat (Maurer-Cartan) elements sit in degree
// -1 and gauges in degree 0. On top of the raw algebra sit the gauge
// action, the truncated Baker-Campbell-Hausdorff product, deformation
// classes of flat elements, gauge trivialization, and a rank test for
// rigidity of the quotient complex.

#include <kaledin/field.hpp>
#include <kaledin/linalg.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kaledin {

struct WgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WgBasisElem {
  int weight = 1;
  int deg = 0;
  int idx = 0;
  auto operator<=>(const WgBasisElem&) const = default;
  std::string str() const {
    return "(w" + std::to_string(weight) + ",d" + std::to_string(deg) + "," +
           std::to_string(idx) + ")";
  }
};

template <class F>
using WgVec = std::map<WgBasisElem, typename F::Elem>;

template <class F>
void wg_add_scaled(const F& field, WgVec<F>& into, const WgVec<F>& v,
                   typename F::Elem scale) {
  for (auto& [e, c] : v) {
    auto it = into.find(e);
    if (it == into.end()) {
      typename F::Elem nv = field.mul(c, scale);
      if (!field.is_zero(nv)) into.emplace(e, nv);
    } else {
      it->second = field.add(it->second, field.mul(c, scale));
      if (field.is_zero(it->second)) into.erase(it);
    }
  }
}

template <class F>
WgVec<F> wg_scale(const F& field, const WgVec<F>& v, typename F::Elem scale) {
  WgVec<F> r;
  wg_add_scaled(field, r, v, scale);
  return r;
}

template <class F>
bool wg_is_zero(const WgVec<F>& v) {
  return v.empty();
}

template <class F>
bool wg_eq(const F& field, const WgVec<F>& a, const WgVec<F>& b) {
  WgVec<F> d = a;
  wg_add_scaled(field, d, b, field.neg(field.one()));
  return d.empty();
}

template <class F>
WgVec<F> wg_weight_component(const WgVec<F>& v, int w) {
  WgVec<F> r;
  for (auto& [e, c] : v)
    if (e.weight == w) r.emplace(e, c);
  return r;
}

/* True when every basis element carried by v has the given degree. */
template <class F>
bool wg_homogeneous_of_degree(const WgVec<F>& v, int deg) {
  for (auto& [e, c] : v) {
    (void)c;
    if (e.deg != deg) return false;
  }
  return true;
}

template <class F>
struct WgDgLie {
  using Elem = typename F::Elem;
  using Vec = WgVec<F>;

  int weight_cap = 0;
  int delta = 1;  // weight raised by the differential
  std::map<std::pair<int, int>, int> dims;            // (weight, degree) -> dim
  std::map<WgBasisElem, Vec> diff;                    // d on basis elements
  std::map<std::pair<WgBasisElem, WgBasisElem>, Vec> brk;  // [x, y] on pairs

  int dim(int w, int d) const {
    auto it = dims.find({w, d});
    return it == dims.end() ? 0 : it->second;
  }

  bool has(WgBasisElem e) const {
    return e.idx >= 0 && e.idx < dim(e.weight, e.deg);
  }

  std::vector<WgBasisElem> basis() const {
    std::vector<WgBasisElem> out;
    for (auto& [wd, n] : dims)
      for (int i = 0; i < n; ++i) out.push_back({wd.first, wd.second, i});
    return out;
  }

  std::vector<WgBasisElem> basis_of_degree(int d, int max_weight) const {
    std::vector<WgBasisElem> out;
    for (auto& [wd, n] : dims) {
      if (wd.second != d || wd.first > max_weight) continue;
      for (int i = 0; i < n; ++i) out.push_back({wd.first, wd.second, i});
    }
    return out;
  }

  Vec d_of(WgBasisElem e) const {
    auto it = diff.find(e);
    return it == diff.end() ? Vec{} : it->second;
  }

  /* [x, y] on basis elements, consulting the stored orientation or the
     graded-antisymmetric flip of the opposite one. */
  Vec bracket_of(const F& field, WgBasisElem x, WgBasisElem y) const {
    auto it = brk.find({x, y});
    if (it != brk.end()) return it->second;
    auto op = brk.find({y, x});
    if (op == brk.end()) return {};
    typename F::Elem s =
        ((x.deg * y.deg) & 1) ? field.one() : field.neg(field.one());
    return wg_scale(field, op->second, s);
  }

  Vec apply_d(const F& field, const Vec& v) const {
    Vec r;
    for (auto& [e, c] : v) wg_add_scaled(field, r, d_of(e), c);
    return r;
  }

  Vec bracket(const F& field, const Vec& a, const Vec& b) const {
    Vec r;
    for (auto& [x, cx] : a)
      for (auto& [y, cy] : b) {
        if (x.weight + y.weight > weight_cap) continue;
        wg_add_scaled(field, r, bracket_of(field, x, y), field.mul(cx, cy));
      }
    return r;
  }

  /* Structural and axiomatic checks, all modulo the weight cap. */
  void validate(const F& field) const {
    if (weight_cap < 1) throw WgError("weight cap must be at least 1");
    if (delta < 1) throw WgError("differential weight shift must be at least 1");
    for (auto& [wd, n] : dims) {
      if (wd.first < 1) throw WgError("weights start at 1");
      if (wd.first > weight_cap) throw WgError("basis beyond the weight cap");
      if (n < 0) throw WgError("negative dimension");
    }
    auto check_vec = [&](const Vec& v, int w, int d, const std::string& what) {
      for (auto& [e, c] : v) {
        if (field.is_zero(c)) throw WgError(what + ": stored zero coefficient");
        if (!has(e)) throw WgError(what + ": unknown basis element " + e.str());
        if (e.weight != w || e.deg != d)
          throw WgError(what + ": value off its (weight, degree) block at " + e.str());
      }
    };
    for (auto& [e, v] : diff) {
      if (!has(e)) throw WgError("differential on unknown element " + e.str());
      if (e.weight + delta > weight_cap && !v.empty())
        throw WgError("differential value beyond the weight cap at " + e.str());
      check_vec(v, e.weight + delta, e.deg - 1, "differential of " + e.str());
    }
    for (auto& [xy, v] : brk) {
      auto& [x, y] = xy;
      if (!has(x) || !has(y)) throw WgError("bracket on unknown basis pair");
      if (x.weight + y.weight > weight_cap) {
        if (!v.empty()) throw WgError("bracket value beyond the weight cap");
        continue;
      }
      check_vec(v, x.weight + y.weight, x.deg + y.deg,
                "bracket [" + x.str() + "," + y.str() + "]");
    }
    std::vector<WgBasisElem> bs = basis();
    // Graded antisymmetry where both orientations are stored; [x,x] for
    // even x must vanish (characteristic 2 is handled by the callers that
    // divide, antisymmetry itself is characteristic-free in this form).
    for (auto& [xy, v] : brk) {
      auto& [x, y] = xy;
      auto op = brk.find({y, x});
      if (op == brk.end()) continue;
      typename F::Elem s =
          ((x.deg * y.deg) & 1) ? field.one() : field.neg(field.one());
      if (!wg_eq(field, v, wg_scale(field, op->second, s)))
        throw WgError("bracket is not antisymmetric at [" + x.str() + "," + y.str() + "]");
    }
    for (auto& x : bs) {
      if (x.deg & 1) continue;
      Vec xx = bracket_of(field, x, x);
      if (!xx.empty()) throw WgError("[x,x] nonzero for even element " + x.str());
    }
    // d^2 = 0.
    for (auto& x : bs) {
      Vec dd = apply_d(field, d_of(x));
      if (!dd.empty()) throw WgError("differential does not square to zero at " + x.str());
    }
    // Leibniz: d[x,y] = [dx,y] + (-1)^{|x|} [x,dy].
    for (auto& x : bs)
      for (auto& y : bs) {
        if (x.weight + y.weight + delta > weight_cap) continue;
        Vec lhs = apply_d(field, bracket_of(field, x, y));
        Vec rhs = bracket(field, d_of(x), Vec{{y, field.one()}});
        typename F::Elem s = (x.deg & 1) ? field.neg(field.one()) : field.one();
        wg_add_scaled(field, rhs, bracket(field, Vec{{x, field.one()}}, d_of(y)), s);
        if (!wg_eq(field, lhs, rhs))
          throw WgError("Leibniz fails at [" + x.str() + "," + y.str() + "]");
      }
    // Graded Jacobi: [x,[y,z]] = [[x,y],z] + (-1)^{|x||y|} [y,[x,z]].
    for (auto& x : bs)
      for (auto& y : bs)
        for (auto& z : bs) {
          if (x.weight + y.weight + z.weight > weight_cap) continue;
          Vec lhs = bracket(field, Vec{{x, field.one()}}, bracket_of(field, y, z));
          Vec rhs = bracket(field, bracket_of(field, x, y), Vec{{z, field.one()}});
          typename F::Elem s =
              ((x.deg * y.deg) & 1) ? field.neg(field.one()) : field.one();
          wg_add_scaled(field, rhs,
                        bracket(field, Vec{{y, field.one()}}, bracket_of(field, x, z)), s);
          if (!wg_eq(field, lhs, rhs))
            throw WgError("Jacobi fails at (" + x.str() + "," + y.str() + "," + z.str() + ")");
        }
  }
};

/* Flatness residual d(phi) + (1/2)[phi, phi] of a degree -1 element.
   Characteristic 2 has no such normalization and is rejected. */
template <class F>
WgVec<F> wg_mc_residual(const F& field, const WgDgLie<F>& L, const WgVec<F>& phi) {
  if (field.characteristic() == 2)
    throw WgError("flatness residual needs 1/2: characteristic 2 is not supported");
  if (!wg_homogeneous_of_degree<F>(phi, -1))
    throw WgError("flat elements must be homogeneous of degree -1");
  WgVec<F> r = L.apply_d(field, phi);
  typename F::Elem half = field.from_fraction(BigInt(1), BigInt(2));
  wg_add_scaled(field, r, L.bracket(field, phi, phi), half);
  return r;
}

template <class F>
bool wg_is_mc(const F& field, const WgDgLie<F>& L, const WgVec<F>& phi) {
  return wg_mc_residual(field, L, phi).empty();
}

/* Smallest weight at which the flatness residual is nonzero, or 0. */
template <class F>
int wg_mc_failing_weight(const F& field, const WgDgLie<F>& L, const WgVec<F>& phi) {
  WgVec<F> r = wg_mc_residual(field, L, phi);
  return r.empty() ? 0 : r.begin()->first.weight;
}

/* exp(ad_x) applied to v, truncated by the weight cap. The factorial
   gate is checked upfront for every order the cap allows. */
template <class F>
WgVec<F> wg_exp_ad(const F& field, const WgDgLie<F>& L, const WgVec<F>& x,
                   const WgVec<F>& v) {
  require_factorials_up_to(field, L.weight_cap, "exp(ad)");
  if (!wg_homogeneous_of_degree<F>(x, 0))
    throw WgError("exp(ad) is reserved for degree-0 elements");
  WgVec<F> r = v, cur = v;
  BigInt fact = 1;
  for (int k = 1; k <= L.weight_cap && !cur.empty(); ++k) {
    cur = L.bracket(field, x, cur);
    fact *= k;
    wg_add_scaled(field, r, cur, field.from_fraction(BigInt(1), fact));
  }
  return r;
}

/* Gauge action of a degree-0 element on a degree -1 element:
     lambda . phi = exp(ad_lambda)(phi) - ((exp(ad_lambda)-id)/ad_lambda)(d lambda). */
template <class F>
WgVec<F> wg_gauge_action(const F& field, const WgDgLie<F>& L, const WgVec<F>& lambda,
                         const WgVec<F>& phi) {
  require_factorials_up_to(field, L.weight_cap, "gauge action");
  if (!wg_homogeneous_of_degree<F>(lambda, 0))
    throw WgError("gauges must be homogeneous of degree 0");
  if (!wg_homogeneous_of_degree<F>(phi, -1))
    throw WgError("gauge action targets degree -1 elements");
  WgVec<F> r = phi, cur = phi;
  BigInt fact = 1;
  for (int k = 1; k <= L.weight_cap && !cur.empty(); ++k) {
    cur = L.bracket(field, lambda, cur);
    fact *= k;
    wg_add_scaled(field, r, cur, field.from_fraction(BigInt(1), fact));
  }
  WgVec<F> tail = L.apply_d(field, lambda);
  fact = 1;
  for (int k = 1; k <= L.weight_cap + 1 && !tail.empty(); ++k) {
    fact *= k;
    wg_add_scaled(field, r, tail, field.from_fraction(BigInt(-1), fact));
    tail = L.bracket(field, lambda, tail);
  }
  return r;
}

/* Twisted differential x |-> d x + [psi, x] by a flat element. The
   result is filtration-compatible rather than weight-homogeneous, so it
   is kept as an operator bound to its algebra. */
template <class F>
struct WgTwisted {
  const WgDgLie<F>* base = nullptr;
  WgVec<F> psi;

  WgVec<F> apply(const F& field, const WgVec<F>& x) const {
    WgVec<F> r = base->apply_d(field, x);
    wg_add_scaled(field, r, base->bracket(field, psi, x), field.one());
    return r;
  }
};

template <class F>
WgTwisted<F> wg_twist(const F& field, const WgDgLie<F>& L, const WgVec<F>& psi) {
  WgVec<F> res = wg_mc_residual(field, L, psi);
  if (!res.empty())
    throw WgError("twist: element is not flat; residual nonzero at weight " +
                  std::to_string(res.begin()->first.weight));
  WgTwisted<F> t{&L, psi};
  for (auto& e : L.basis()) {
    WgVec<F> one{{e, field.one()}};
    if (!t.apply(field, t.apply(field, one)).empty())
      throw WgError("twist: twisted differential does not square to zero at " + e.str());
  }
  return t;
}

namespace detail {

/* Symbolic Baker-Campbell-Hausdorff data: words in two letters with
   rational coefficients, from log(exp(x) exp(y)) truncated at a given
   word length. Cached per truncation length. */
using BchWord = std::vector<unsigned char>;
using BchSeries = std::map<BchWord, BigRat>;

inline BchSeries bch_mul(const BchSeries& a, const BchSeries& b, int cap) {
  BchSeries r;
  for (auto& [wa, ca] : a)
    for (auto& [wb, cb] : b) {
      if (static_cast<int>(wa.size() + wb.size()) > cap) continue;
      BchWord w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      BigRat& slot = r[w];
      slot += ca * cb;
      if (slot == 0) r.erase(w);
    }
  return r;
}

inline const std::vector<std::pair<BchWord, BigRat>>& bch_words(int cap) {
  static std::map<int, std::vector<std::pair<BchWord, BigRat>>> cache;
  auto hit = cache.find(cap);
  if (hit != cache.end()) return hit->second;
  // A = exp(x) exp(y) - 1: coefficient of x^a y^b is 1/(a! b!).
  BchSeries A;
  std::vector<BigInt> fact(cap + 1, 1);
  for (int k = 1; k <= cap; ++k) fact[k] = fact[k - 1] * k;
  for (int a = 0; a <= cap; ++a)
    for (int b = 0; a + b <= cap; ++b) {
      if (a + b == 0) continue;
      BchWord w(a, 0);
      w.insert(w.end(), b, 1);
      A[w] = BigRat(1) / BigRat(fact[a] * fact[b]);
    }
  // log(1 + A) = sum_{N>=1} (-1)^{N-1} A^N / N.
  BchSeries result, power = A;
  for (int N = 1; N <= cap; ++N) {
    BigRat c = BigRat((N % 2) ? 1 : -1) / BigRat(N);
    for (auto& [w, v] : power) {
      BigRat& slot = result[w];
      slot += c * v;
      if (slot == 0) result.erase(w);
    }
    if (N < cap) power = bch_mul(power, A, cap);
  }
  std::vector<std::pair<BchWord, BigRat>> out(result.begin(), result.end());
  return cache.emplace(cap, std::move(out)).first->second;
}

}  // namespace detail

/* Baker-Campbell-Hausdorff product of two degree-0 elements, exact
   modulo the weight cap. Computed by the Dynkin-Specht-Wever projection
   of the symbolic logarithm: a word w of length n contributes
   coefficient(w)/n times the left-normed bracketing of its letters.
   Every denominator divides a product of factorials at most cap!, so
   the factorial gate covers it. */
template <class F>
WgVec<F> wg_truncated_bch(const F& field, const WgDgLie<F>& L, const WgVec<F>& x,
                          const WgVec<F>& y) {
  require_factorials_up_to(field, L.weight_cap, "truncated BCH");
  if (!wg_homogeneous_of_degree<F>(x, 0) || !wg_homogeneous_of_degree<F>(y, 0))
    throw WgError("BCH is defined for degree-0 elements");
  WgVec<F> out;
  for (auto& [word, q] : detail::bch_words(L.weight_cap)) {
    int n = static_cast<int>(word.size());
    WgVec<F> v = word[0] ? y : x;
    for (int j = 1; j < n && !v.empty(); ++j)
      v = L.bracket(field, v, word[j] ? y : x);
    if (v.empty()) continue;
    BigRat c = q / n;
    wg_add_scaled(field, out, v,
                  field.from_fraction(numerator(c), denominator(c)));
  }
  return out;
}

/* ---- Deformation classes of flat elements ---------------------------- */

/* Representative of the truncated class: coefficient j of the formal
   parameter is (j+1) * phi^{(delta+j+1)}, for j = 0..n-1. */
template <class F>
struct WgClassRep {
  int n = 0;
  int delta = 1;
  std::vector<WgVec<F>> coeffs;

  bool is_zero() const {
    for (auto& c : coeffs)
      if (!c.empty()) return false;
    return true;
  }
};

template <class F>
WgClassRep<F> wg_truncated_kaledin_class(const F& field, const WgDgLie<F>& L,
                                         const WgVec<F>& phi, int n) {
  if (n < 1) throw WgError("class truncation order must be at least 1");
  if (!wg_is_mc(field, L, phi))
    throw WgError("class of a non-flat element is undefined; flatness fails at weight " +
                  std::to_string(wg_mc_failing_weight(field, L, phi)));
  WgClassRep<F> rep;
  rep.n = n;
  rep.delta = L.delta;
  rep.coeffs.resize(n);
  for (int j = 0; j < n; ++j)
    rep.coeffs[j] = wg_scale(field, wg_weight_component<F>(phi, L.delta + j + 1),
                             field.from_int(j + 1));
  return rep;
}

/* The class representative is a cycle for the deformed differential:
   for j = 0..N-1,  d(c_j) + sum_{a+b=j} [phi^{(delta+a)}, c_b] = 0 with
   c_b = (b+1) phi^{(delta+b+1)}. Returns true when every coefficient of
   the verification vanishes. */
template <class F>
bool wg_kaledin_cycle(const F& field, const WgDgLie<F>& L, const WgVec<F>& phi, int N) {
  if (!wg_is_mc(field, L, phi)) return false;
  std::vector<WgVec<F>> c(N);
  for (int b = 0; b < N; ++b)
    c[b] = wg_scale(field, wg_weight_component<F>(phi, L.delta + b + 1),
                    field.from_int(b + 1));
  for (int j = 0; j < N; ++j) {
    WgVec<F> r = L.apply_d(field, c[j]);
    for (int a = 0; a <= j; ++a)
      wg_add_scaled(field, r,
                    L.bracket(field, wg_weight_component<F>(phi, L.delta + a), c[j - a]),
                    field.one());
    if (!r.empty()) return false;
  }
  return true;
}

template <class F>
struct WgClassVanishes {
  bool vanishes = false;
  std::vector<WgVec<F>> witness;  // lambda_j, degree 0, j = 0..n-1
  RankData rank;
};

/* The truncated class vanishes iff the linear system
     d(lambda_j) + sum_{a+b=j} [phi^{(delta+a)}, lambda_b] = (j+1) phi^{(delta+j+1)}
   (j = 0..n-1, unknowns of degree 0 across all weights up to the cap)
   is solvable; the solver also reports the rank data that certifies
   either outcome. */
template <class F>
WgClassVanishes<F> wg_class_vanishes(const F& field, const WgDgLie<F>& L,
                                     const WgVec<F>& phi, int n) {
  if (!wg_is_mc(field, L, phi))
    throw WgError("class of a non-flat element is undefined; flatness fails at weight " +
                  std::to_string(wg_mc_failing_weight(field, L, phi)));
  using Row = std::pair<int, WgBasisElem>;
  using Col = std::pair<int, WgBasisElem>;
  KeyedSystem<F, Row, Col> sys(field);
  std::vector<WgBasisElem> unknowns = L.basis_of_degree(0, L.weight_cap);
  for (int j = 0; j < n; ++j) {
    for (auto& u : unknowns) {
      WgVec<F> one{{u, field.one()}};
      WgVec<F> du = L.apply_d(field, one);
      for (auto& [e, v] : du) sys.add_coeff({j, e}, {j, u}, v);
      for (int a = 0; j + a < n; ++a) {
        WgVec<F> br = L.bracket(field, wg_weight_component<F>(phi, L.delta + a), one);
        for (auto& [e, v] : br) sys.add_coeff({j + a, e}, {j, u}, v);
      }
    }
    WgVec<F> rhs = wg_scale(field, wg_weight_component<F>(phi, L.delta + j + 1),
                            field.from_int(j + 1));
    for (auto& [e, v] : rhs) sys.add_rhs({j, e}, v);
  }
  WgClassVanishes<F> out;
  auto sol = sys.solve(&out.rank);
  out.vanishes = sol.has_value();
  if (sol) {
    out.witness.resize(n);
    for (auto& [col, v] : *sol) {
      if (field.is_zero(v)) continue;
      out.witness[col.first][col.second] = v;
    }
  }
  return out;
}

/* ---- Gauge trivialization -------------------------------------------- */

template <class F>
struct WgTrivializeResult {
  bool success = false;
  WgVec<F> lambda;             // accumulated gauge (degree 0)
  WgVec<F> psi;                // gauged element
  int failed_step = 0;         // first k whose step system is unsolvable
  WgClassRep<F> failing_class; // nonzero truncated class at that step
  RankData failing_rank;
};

/* Greedy weight-by-weight trivialization: at step k the gauged element
   psi has no components in weights delta+1..delta+k-1, and the step
   system
     d(lambda) + [psi^{(delta)}, lambda] = k * psi^{(delta+k)}
   is solved on the degree-0 weight-k block. Solvability of the block
   system is equivalent to vanishing of the truncated class, which is a
   gauge invariant, so a failure at any step is final. The applied gauge
   is lambda^{(k)} = witness / k and the accumulated gauge is the BCH
   composite of the single-weight steps. */
template <class F>
WgTrivializeResult<F> wg_trivializing_gauge(const F& field, const WgDgLie<F>& L,
                                            const WgVec<F>& phi, int n) {
  require_factorials_up_to(field, L.weight_cap, "gauge trivialization");
  if (!wg_is_mc(field, L, phi))
    throw WgError("cannot trivialize a non-flat element; flatness fails at weight " +
                  std::to_string(wg_mc_failing_weight(field, L, phi)));
  WgTrivializeResult<F> out;
  out.psi = phi;
  bool strict = true;
  for (int j = 1; j <= n && strict; ++j)
    strict = wg_weight_component<F>(phi, L.delta + j).empty();
  if (strict) {
    out.success = true;
    return out;
  }
  for (int k = 1; k <= n; ++k) {
    WgVec<F> target = wg_weight_component<F>(out.psi, L.delta + k);
    if (target.empty()) continue;
    KeyedSystem<F, WgBasisElem, WgBasisElem> sys(field);
    WgVec<F> psi_delta = wg_weight_component<F>(out.psi, L.delta);
    for (auto& [wd, dim] : L.dims) {
      if (wd.first != k || wd.second != 0) continue;
      for (int i = 0; i < dim; ++i) {
        WgBasisElem u{k, 0, i};
        WgVec<F> one{{u, field.one()}};
        WgVec<F> img = L.apply_d(field, one);
        wg_add_scaled(field, img, L.bracket(field, psi_delta, one), field.one());
        for (auto& [e, v] : img) sys.add_coeff(e, u, v);
      }
    }
    for (auto& [e, v] : target) sys.add_rhs(e, field.mul(v, field.from_int(k)));
    RankData rd;
    auto sol = sys.solve(&rd);
    if (!sol) {
      out.failed_step = k;
      out.failing_class = wg_truncated_kaledin_class(field, L, out.psi, k);
      out.failing_rank = rd;
      return out;
    }
    WgVec<F> lk;
    for (auto& [e, v] : *sol)
      if (!field.is_zero(v)) lk[e] = v;
    lk = wg_scale(field, lk, field.inv(field.from_int(k)));
    out.psi = wg_gauge_action(field, L, lk, out.psi);
    if (!wg_weight_component<F>(out.psi, L.delta + k).empty())
      throw std::logic_error("gauge step failed to clear its weight");
    out.lambda = wg_truncated_bch(field, L, lk, out.lambda);
  }
  if (!wg_eq(field, wg_gauge_action(field, L, out.lambda, phi), out.psi))
    throw std::logic_error("accumulated gauge disagrees with the stepwise result");
  out.success = true;
  return out;
}

/* ---- Rigidity of the truncated quotient ------------------------------ */

struct WgRigidity {
  bool rigid = false;
  int dim_deg_m1 = 0;   // dim of the degree -1 slice, weights < n
  int rank_to_m2 = 0;   // rank of the twisted differential out of it
  int rank_from_0 = 0;  // rank of the twisted differential into it
};

/* Vanishing of the degree -1 homology of (g^psi / F^n): the twisted
   differential is filtration-compatible, so ranks are taken on the
   whole weight < n slice per degree with targets truncated to the
   quotient. */
template <class F>
WgRigidity wg_rigidity_check(const F& field, const WgDgLie<F>& L, const WgVec<F>& psi,
                             int n) {
  WgTwisted<F> tw = wg_twist(field, L, psi);
  auto truncate = [&](WgVec<F> v) {
    for (auto it = v.begin(); it != v.end();)
      it = (it->first.weight >= n) ? v.erase(it) : std::next(it);
    return v;
  };
  auto rank_of = [&](int deg) {
    std::vector<WgBasisElem> cols = L.basis_of_degree(deg, n - 1);
    KeyedSystem<F, WgBasisElem, WgBasisElem> sys(field);
    bool any = false;
    for (auto& u : cols) {
      WgVec<F> img = truncate(tw.apply(field, WgVec<F>{{u, field.one()}}));
      for (auto& [e, v] : img) {
        sys.add_coeff(e, u, v);
        any = true;
      }
    }
    if (!any) return 0;
    RankData rd;
    sys.solve(&rd);
    return rd.rank;
  };
  WgRigidity out;
  for (auto& [wd, dim] : L.dims)
    if (wd.second == -1 && wd.first < n) out.dim_deg_m1 += dim;
  out.rank_to_m2 = rank_of(-1);
  out.rank_from_0 = rank_of(0);
  out.rigid = (out.dim_deg_m1 - out.rank_to_m2 == out.rank_from_0);
  return out;
}

}  // namespace kaledin
