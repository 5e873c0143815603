#pragma once
// Matrix models for the weight-graded Lie suites. Strictly
// upper-triangular n x n matrices form a weight-graded Lie algebra under
// the commutator when the weight of E_{ij} is j - i; a degree assignment
// on the indices makes it a dg Lie algebra with differential [Q, -] for
// any square-zero matrix Q of degree -1. Because everything is
// nilpotent, exponentials and logarithms are finite sums, so the Lie
// operations have exact matrix counterparts: BCH is log(exp exp),
// exp(ad) is conjugation, and the gauge action is conjugation of the
// twisting matrix Q + phi. The oracles below compute those counterparts
// directly from matrix arithmetic.

#include <kaledin/linalg.hpp>
#include <kaledin/wg_dglie.hpp>

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "support.hpp"

namespace testsup {

template <class F>
struct GlModel {
  int n = 0;
  std::vector<int> g;  // degree of basis index i; deg E_{ij} = g[i] - g[j]
  kaledin::WgDgLie<F> L;
  std::map<std::pair<int, int>, kaledin::WgBasisElem> elem_of;
  std::map<kaledin::WgBasisElem, std::pair<int, int>> pair_of;
  kaledin::DenseMatrix<F> Q;  // twisting matrix, [Q, -] is the differential
};

/* ---- matrix arithmetic ------------------------------------------------ */

template <class F>
kaledin::DenseMatrix<F> mat_add_scaled(const F& field, const kaledin::DenseMatrix<F>& a,
                                       const kaledin::DenseMatrix<F>& b,
                                       typename F::Elem s) {
  kaledin::DenseMatrix<F> r = a;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] = field.add(r.a[i], field.mul(b.a[i], s));
  return r;
}

template <class F>
bool mat_eq(const F& field, const kaledin::DenseMatrix<F>& a,
            const kaledin::DenseMatrix<F>& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (size_t i = 0; i < a.a.size(); ++i)
    if (!field.is_zero(field.sub(a.a[i], b.a[i]))) return false;
  return true;
}

template <class F>
bool mat_is_zero(const F& field, const kaledin::DenseMatrix<F>& a) {
  for (auto& v : a.a)
    if (!field.is_zero(v)) return false;
  return true;
}

/* exp of a nilpotent matrix: the series stops at the matrix size. */
template <class F>
kaledin::DenseMatrix<F> mat_exp(const F& field, const kaledin::DenseMatrix<F>& x) {
  kaledin::DenseMatrix<F> r = kaledin::identity_matrix(field, x.rows);
  kaledin::DenseMatrix<F> pw = x;
  long long kfact = 1;
  for (int k = 1; !mat_is_zero(field, pw); ++k) {
    kfact *= k;
    r = mat_add_scaled(field, r, pw, field.from_fraction(1, kfact));
    pw = kaledin::mat_mul(field, pw, x);
  }
  return r;
}

/* log of a unipotent matrix, the finite Mercator series. */
template <class F>
kaledin::DenseMatrix<F> mat_log(const F& field, const kaledin::DenseMatrix<F>& u) {
  kaledin::DenseMatrix<F> n =
      mat_add_scaled(field, u, kaledin::identity_matrix(field, u.rows), field.from_int(-1));
  kaledin::DenseMatrix<F> r(field, u.rows, u.cols);
  kaledin::DenseMatrix<F> pw = n;
  for (int k = 1; !mat_is_zero(field, pw); ++k) {
    r = mat_add_scaled(field, r, pw, field.from_fraction(k % 2 ? 1 : -1, k));
    pw = kaledin::mat_mul(field, pw, n);
  }
  return r;
}

template <class F>
kaledin::DenseMatrix<F> mat_conj(const F& field, const kaledin::DenseMatrix<F>& g,
                                 const kaledin::DenseMatrix<F>& g_inv,
                                 const kaledin::DenseMatrix<F>& x) {
  return kaledin::mat_mul(field, kaledin::mat_mul(field, g, x), g_inv);
}

/* ---- model construction ----------------------------------------------- */

/* Builds the model for a degree assignment g and a list of entries of Q
   (all of weight delta and degree -1, chosen so that Q*Q = 0). The
   structure constants come from the graded commutator
   [E_ij, E_kl] = E_ij E_kl - (-1)^{|E_ij||E_kl|} E_kl E_ij
   and the differential from d(x) = Q x - (-1)^{|x|} x Q; validate()
   then certifies antisymmetry, Jacobi, Leibniz and d^2 = 0 for the
   whole presentation. */
template <class F>
GlModel<F> gl_model(const F& field, std::vector<int> degrees,
                    const std::vector<std::pair<int, int>>& q_entries, int delta = 1) {
  GlModel<F> m;
  m.n = static_cast<int>(degrees.size());
  m.g = std::move(degrees);
  m.L.weight_cap = m.n - 1;
  m.L.delta = delta;

  std::map<std::pair<int, int>, int> counter;
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j) {
      int w = j - i, deg = m.g[i] - m.g[j];
      kaledin::WgBasisElem e{w, deg, counter[{w, deg}]++};
      m.elem_of[{i, j}] = e;
      m.pair_of[e] = {i, j};
    }
  for (auto& [wd, cnt] : counter) m.L.dims[wd] = cnt;

  m.Q = kaledin::DenseMatrix<F>(field, m.n, m.n);
  for (auto& [i, j] : q_entries) {
    if (j - i != delta || m.g[i] - m.g[j] != -1)
      throw std::logic_error("gl_model: Q entry off the (delta, -1) block");
    m.Q.at(i, j) = field.one();
  }
  if (!mat_is_zero(field, kaledin::mat_mul(field, m.Q, m.Q)))
    throw std::logic_error("gl_model: Q does not square to zero");

  auto wg_of = [&](const kaledin::DenseMatrix<F>& x) {
    kaledin::WgVec<F> v;
    for (int i = 0; i < m.n; ++i)
      for (int j = i + 1; j < m.n; ++j)
        if (!field.is_zero(x.at(i, j))) v[m.elem_of.at({i, j})] = x.at(i, j);
    return v;
  };
  auto basis_matrix = [&](kaledin::WgBasisElem e) {
    kaledin::DenseMatrix<F> x(field, m.n, m.n);
    auto [i, j] = m.pair_of.at(e);
    x.at(i, j) = field.one();
    return x;
  };

  std::vector<kaledin::WgBasisElem> basis = m.L.basis();
  for (auto& x : basis) {
    kaledin::DenseMatrix<F> mx = basis_matrix(x);
    typename F::Elem sx = field.from_int(x.deg & 1 ? 1 : -1);
    kaledin::DenseMatrix<F> dx = mat_add_scaled(
        field, kaledin::mat_mul(field, m.Q, mx), kaledin::mat_mul(field, mx, m.Q), sx);
    kaledin::WgVec<F> dv = wg_of(dx);
    if (!dv.empty()) m.L.diff[x] = dv;
    for (auto& y : basis) {
      if (x.weight + y.weight > m.L.weight_cap) continue;
      kaledin::DenseMatrix<F> my = basis_matrix(y);
      typename F::Elem s = field.from_int((x.deg * y.deg) & 1 ? 1 : -1);
      kaledin::DenseMatrix<F> b = mat_add_scaled(
          field, kaledin::mat_mul(field, mx, my), kaledin::mat_mul(field, my, mx), s);
      kaledin::WgVec<F> bv = wg_of(b);
      if (!bv.empty()) m.L.brk[{x, y}] = bv;
    }
  }
  m.L.validate(field);
  return m;
}

/* All indices in degree 0: a plain nilpotent Lie algebra with d = 0,
   the home of the BCH and exp(ad) oracles. */
template <class F>
const GlModel<F>& gl_pure(const F& field, int n) {
  static std::map<std::pair<long long, int>, GlModel<F>> cache;
  auto key = std::make_pair(field.characteristic(), n);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, gl_model(field, std::vector<int>(n, 0), {})).first;
  return it->second;
}

/* Mixed degrees with a nonzero Q: flat elements, gauges and genuinely
   twisted differentials all live here. */
template <class F>
const GlModel<F>& gl_mixed(const F& field, int n) {
  static std::map<std::pair<long long, int>, GlModel<F>> cache;
  auto key = std::make_pair(field.characteristic(), n);
  auto it = cache.find(key);
  if (it == cache.end()) {
    GlModel<F> m;
    switch (n) {
      case 3: m = gl_model(field, {0, 0, 1}, {{1, 2}}); break;
      case 4: m = gl_model(field, {0, 1, 1, 2}, {{0, 1}}); break;
      case 5: m = gl_model(field, {0, 1, 1, 2, 2}, {{0, 1}}); break;
      default: throw std::logic_error("gl_mixed: unsupported size");
    }
    it = cache.emplace(key, std::move(m)).first;
  }
  return it->second;
}

/* ---- conversions and random draws ------------------------------------- */

template <class F>
kaledin::DenseMatrix<F> to_matrix(const F& field, const GlModel<F>& m,
                                  const kaledin::WgVec<F>& v) {
  kaledin::DenseMatrix<F> x(field, m.n, m.n);
  for (auto& [e, c] : v) {
    auto [i, j] = m.pair_of.at(e);
    x.at(i, j) = c;
  }
  return x;
}

template <class F>
kaledin::WgVec<F> to_wg(const F& field, const GlModel<F>& m,
                        const kaledin::DenseMatrix<F>& x) {
  kaledin::WgVec<F> v;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      if (field.is_zero(x.at(i, j))) continue;
      if (j <= i) throw std::logic_error("to_wg: matrix is not strictly upper triangular");
      v[m.elem_of.at({i, j})] = x.at(i, j);
    }
  return v;
}

/* Random element supported on the basis vectors of one degree. */
template <class F>
kaledin::WgVec<F> rnd_wg(const F& field, const GlModel<F>& m, int deg, Rng& rng) {
  kaledin::WgVec<F> v;
  for (auto& e : m.L.basis())
    if (e.deg == deg && rnd_int(rng, 0, 2) != 0) v[e] = rnd_scalar(field, rng);
  return v;
}

/* The matrix-side gauge action: conjugate the twisting matrix Q + phi
   by exp(lambda) and subtract Q back off. */
template <class F>
kaledin::WgVec<F> oracle_gauge(const F& field, const GlModel<F>& m,
                               const kaledin::WgVec<F>& lambda,
                               const kaledin::WgVec<F>& phi) {
  kaledin::DenseMatrix<F> lam = to_matrix(field, m, lambda);
  kaledin::DenseMatrix<F> e = mat_exp(field, lam);
  kaledin::DenseMatrix<F> e_inv =
      mat_exp(field, mat_add_scaled(field, kaledin::DenseMatrix<F>(field, m.n, m.n), lam,
                                    field.from_int(-1)));
  kaledin::DenseMatrix<F> tw =
      mat_add_scaled(field, to_matrix(field, m, phi), m.Q, field.one());
  kaledin::DenseMatrix<F> out =
      mat_add_scaled(field, mat_conj(field, e, e_inv, tw), m.Q, field.from_int(-1));
  return to_wg(field, m, out);
}

/* Flatness on the matrix side: the twisting matrix squares to zero. */
template <class F>
bool oracle_is_flat(const F& field, const GlModel<F>& m, const kaledin::WgVec<F>& phi) {
  kaledin::DenseMatrix<F> tw =
      mat_add_scaled(field, to_matrix(field, m, phi), m.Q, field.one());
  return mat_is_zero(field, kaledin::mat_mul(field, tw, tw));
}

}  // namespace testsup
