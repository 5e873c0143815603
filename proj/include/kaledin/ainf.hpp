#pragma once
// Homotopy-associative structures on chain complexes: multilinear
// operations whose shift-graded generators satisfy the quadratic
// relations, conversion to and from the convolution picture, chain
// contractions onto homology with an automatic constructor, homotopy
// transfer of the operations along a contraction through the tensor
// coalgebra perturbation recursion, and triple products on the
// transferred side.
//
// Transfer results hold pointers into the contraction (the retract
// module) and the ambient module; keep both alive while a result is in
// use.

#include <kaledin/convolution.hpp>
#include <kaledin/infinity.hpp>
#include <kaledin/linalg.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kaledin {

struct AInfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Operations m_k for k >= 2 of degree k-2 on a chain complex; the
   differential of the complex is the unary operation. */
template <class F>
struct AInfinityStructure {
  ChainComplex<F> complex;
  std::map<int, Tensor<F>> ops;  // arity -> m_arity

  int max_arity() const {
    int m = 1;
    for (auto& [k, t] : ops)
      if (!t.is_zero() && k > m) m = k;
    return m;
  }

  const Tensor<F>* op(int k) const {
    auto it = ops.find(k);
    return it == ops.end() || it->second.is_zero() ? nullptr : &it->second;
  }

  void validate_structure(const F& field) const {
    complex.validate(field);
    for (auto& [k, t] : ops) {
      if (k < 2) throw AInfError("operations start at arity 2");
      if (t.is_zero()) continue;
      if (t.arity != k) throw AInfError("operation arity mismatch at m_" + std::to_string(k));
      if (t.degree != k - 2)
        throw AInfError("m_" + std::to_string(k) + " must have degree " + std::to_string(k - 2));
      for (auto& [ins, cell] : t.table) {
        for (auto& e : ins)
          if (e.idx < 0 || e.idx >= complex.space.dim(e.deg))
            throw AInfError("operation input outside the module");
        for (auto& [o, v] : cell) {
          (void)v;
          if (o.idx < 0 || o.idx >= complex.space.dim(o.deg))
            throw AInfError("operation output outside the module");
        }
      }
    }
  }
};

/* Shift-graded generating operations b_k, all of degree -1: b_1 is the
   transported differential and b_k the transport of m_k. */
template <class F>
std::map<int, Tensor<F>> shifted_b_ops(const F& field, const AInfinityStructure<F>& A) {
  std::map<int, Tensor<F>> b;
  if (!A.complex.d.is_zero()) {
    Tensor<F> m1 = linmap_as_tensor(A.complex.d);
    Tensor<F> b1 = tensor_shift(field, m1, true);
    if (!b1.is_zero()) b[1] = std::move(b1);
  }
  for (auto& [k, t] : A.ops) {
    if (t.is_zero()) continue;
    Tensor<F> bk = tensor_shift(field, t, true);
    if (!bk.is_zero()) b[k] = std::move(bk);
  }
  return b;
}

/* Quadratic relation in arity n: the sum over p+q+r = n of b_{p+1+r}
   with b_q plugged into slot p+1, with no further coefficients (the
   shift transport absorbs every sign). */
template <class F>
Tensor<F> stasheff_residual(const F& field, const AInfinityStructure<F>& A, int n) {
  std::map<int, Tensor<F>> b = shifted_b_ops(field, A);
  Tensor<F> r;
  r.arity = n;
  r.degree = -2;
  for (int q = 1; q <= n; ++q) {
    auto bq = b.find(q);
    if (bq == b.end()) continue;
    auto bo = b.find(n - q + 1);
    if (bo == b.end()) continue;
    for (int p = 0; p + q <= n; ++p) {
      Tensor<F> term = tensor_compose_at(field, bo->second, p + 1, bq->second);
      r.add_scaled(field, term, field.one());
    }
  }
  return r;
}

/* All quadratic relations that can involve the stored operations are
   checked; beyond arity 2*max-1 every summand vanishes. */
template <class F>
int stasheff_failing_arity(const F& field, const AInfinityStructure<F>& A) {
  int m = A.max_arity();
  for (int n = 1; n <= 2 * m - 1; ++n)
    if (!stasheff_residual(field, A, n).is_zero()) return n;
  return 0;
}

template <class F>
bool check_stasheff(const F& field, const AInfinityStructure<F>& A) {
  return stasheff_failing_arity(field, A) == 0;
}

/* Convolution picture of the higher operations: the component at the
   weight-(k-1) generator is m_k itself; the unary part stays with the
   complex. Operations beyond the weight cap do not fit and mark the
   result as truncated. */
template <class F>
ConvElem<F> ainf_to_conv(const F& field, const NsCooperad<F>& C,
                         const AInfinityStructure<F>& A) {
  (void)field;
  ConvElem<F> r = conv_zero<F>(-1, A.complex.space, A.complex.space);
  for (auto& [k, t] : A.ops) {
    if (t.is_zero()) continue;
    CoopElem mu{k - 1, k, 0};
    if (!C.has_elem(mu)) {
      r.truncated = true;
      continue;
    }
    r.comps.emplace(mu, t);
  }
  return r;
}

template <class F>
AInfinityStructure<F> conv_to_ainf(const F& field, const NsCooperad<F>& C,
                                   const ConvElem<F>& phi, const LinMap<F>& d) {
  (void)field;
  if (phi.degree != -1) throw AInfError("structures sit in degree -1");
  if (phi.source != phi.target) throw AInfError("structures live on one module");
  AInfinityStructure<F> A;
  A.complex.space = *phi.source;
  A.complex.d = d;
  for (auto& [c, t] : phi.comps) {
    if (t.is_zero()) continue;
    if (c.weight != c.arity - 1 || c.idx != 0 || !C.has_elem(c))
      throw AInfError("component outside the multiplication generators at " + c.str());
    A.ops[c.arity] = t;
  }
  return A;
}

/* ---- Contractions ------------------------------------------------------ */

template <class F>
LinMap<F> lin_identity(const F& field, const GradedModule& M) {
  LinMap<F> m;
  m.degree = 0;
  for (auto& [deg, n] : M.dims)
    for (int i = 0; i < n; ++i) m.add_entry(field, {deg, i}, {deg, i}, field.one());
  return m;
}

/* Deformation retraction of a chain complex onto a module with zero
   differential: inclusion i, projection p, homotopy h with
     p i = id,  i p - id = d h + h d,  h i = 0,  p h = 0,  h h = 0,
   plus d i = 0 and p d = 0 so the retract really carries no
   differential. */
template <class F>
struct Contraction {
  const ChainComplex<F>* big = nullptr;
  GradedModule small;
  LinMap<F> incl;  // degree 0, retract -> ambient
  LinMap<F> proj;  // degree 0, ambient -> retract
  LinMap<F> htpy;  // degree +1, ambient -> ambient

  void validate(const F& field) const {
    if (!big) throw AInfError("contraction without an ambient complex");
    if (incl.degree != 0 || proj.degree != 0 || htpy.degree != 1)
      throw AInfError("contraction maps have the wrong degrees");
    auto expect_zero = [](const LinMap<F>& m, const char* what) {
      if (!m.is_zero()) throw AInfError(std::string("contraction identity fails: ") + what);
    };
    const LinMap<F>& d = big->d;
    typename F::Elem minus = field.neg(field.one());
    LinMap<F> pi = lin_compose(field, proj, incl);
    expect_zero(lin_add_scaled(field, pi, lin_identity(field, small), minus), "p i = id");
    LinMap<F> lhs = lin_compose(field, incl, proj);
    lhs = lin_add_scaled(field, lhs, lin_identity(field, big->space), minus);
    lhs = lin_add_scaled(field, lhs, lin_compose(field, d, htpy), minus);
    lhs = lin_add_scaled(field, lhs, lin_compose(field, htpy, d), minus);
    expect_zero(lhs, "i p - id = d h + h d");
    expect_zero(lin_compose(field, htpy, incl), "h i = 0");
    expect_zero(lin_compose(field, proj, htpy), "p h = 0");
    expect_zero(lin_compose(field, htpy, htpy), "h h = 0");
    expect_zero(lin_compose(field, d, incl), "d i = 0");
    expect_zero(lin_compose(field, proj, d), "p d = 0");
  }
};

/* Which solution of d x = b representatives prefer: support on low basis
   indices or on high ones. The homology lift below does not depend on
   the rule, so two contractions built with different rules retract onto
   the same module through the same inclusion. */
enum class PivotRule { LowestIndex, HighestIndex };

namespace detail {

/* Mutually reduced echelon rows keyed by pivot position. Inserting
   reduces the candidate against the stored rows and reports the reduced,
   pivot-normalized vector if it was independent. */
template <class F>
struct EchelonStore {
  const F& field;
  std::map<int, std::vector<typename F::Elem>> rows;

  explicit EchelonStore(const F& f) : field(f) {}

  std::optional<std::vector<typename F::Elem>> insert(std::vector<typename F::Elem> v) {
    for (auto& [piv, row] : rows) {
      if (field.is_zero(v[piv])) continue;
      typename F::Elem c = v[piv];
      for (size_t j = 0; j < v.size(); ++j) v[j] = field.sub(v[j], field.mul(c, row[j]));
    }
    int piv = -1;
    for (size_t j = 0; j < v.size(); ++j)
      if (!field.is_zero(v[j])) {
        piv = static_cast<int>(j);
        break;
      }
    if (piv < 0) return std::nullopt;
    typename F::Elem inv = field.inv(v[piv]);
    for (auto& x : v) x = field.mul(x, inv);
    rows.emplace(piv, v);
    return v;
  }
};

}  // namespace detail

/* Split every degree as boundaries + homology lift + preimages and read
   the contraction off the splitting: i includes the homology lift, p is
   the coordinate projection onto it, and h sends each boundary to minus
   its chosen preimage one degree up. The boundary echelon basis and the
   homology lift are canonical; only the preimage choice listens to the
   pivot rule. */
template <class F>
Contraction<F> contraction_from_complex(const F& field, const ChainComplex<F>& X,
                                        PivotRule rule = PivotRule::LowestIndex) {
  X.validate(field);
  Contraction<F> con;
  con.big = &X;
  con.incl.degree = 0;
  con.proj.degree = 0;
  con.htpy.degree = 1;
  const GradedModule& M = X.space;
  int lo = 0, hi = 0;
  if (!M.degree_bounds(lo, hi)) return con;

  using Vec = std::vector<typename F::Elem>;

  auto matrix_of_d = [&](int k) {
    // d out of degree k, as a dim(k-1) x dim(k) matrix
    DenseMatrix<F> m(field, M.dim(k - 1), M.dim(k));
    for (int j = 0; j < M.dim(k); ++j) {
      auto it = X.d.cols.find({k, j});
      if (it == X.d.cols.end()) continue;
      for (auto& [o, v] : it->second) m.at(o.idx, j) = v;
    }
    return m;
  };

  struct Splitting {
    std::vector<Vec> img;  // boundary echelon basis
    std::vector<Vec> hom;  // extension of the boundaries to the cycles
    std::vector<Vec> pre;  // pre[j], one degree up, maps onto img[j]
  };
  std::map<int, Splitting> split;

  for (int k = lo; k <= hi; ++k) {
    if (M.dim(k) == 0) continue;
    Splitting& S = split[k];
    DenseMatrix<F> din = matrix_of_d(k + 1);
    detail::EchelonStore<F> st(field);
    for (int j = 0; j < din.cols; ++j) {
      Vec v(M.dim(k), field.zero());
      for (int i = 0; i < M.dim(k); ++i) v[i] = din.at(i, j);
      if (auto red = st.insert(std::move(v))) S.img.push_back(*red);
    }
    for (auto& v : kernel_basis(field, matrix_of_d(k)))
      if (auto red = st.insert(v)) S.hom.push_back(*red);
  }

  for (auto& [k, S] : split) {
    if (S.img.empty()) continue;
    DenseMatrix<F> d_up = matrix_of_d(k + 1);
    DenseMatrix<F> sm = d_up;
    if (rule == PivotRule::HighestIndex)
      for (int i = 0; i < d_up.rows; ++i)
        for (int j = 0; j < d_up.cols; ++j) sm.at(i, j) = d_up.at(i, d_up.cols - 1 - j);
    for (auto& bvec : S.img) {
      auto sol = solve_linear(field, sm, bvec);
      if (!sol) throw std::logic_error("boundary vector with no preimage");
      Vec c = *sol;
      if (rule == PivotRule::HighestIndex) std::reverse(c.begin(), c.end());
      S.pre.push_back(std::move(c));
    }
  }

  for (auto& [k, S] : split) {
    int nk = M.dim(k);
    const std::vector<Vec>* below = nullptr;
    if (auto itb = split.find(k - 1); itb != split.end()) below = &itb->second.pre;
    int nb = static_cast<int>(S.img.size());
    int nh = static_cast<int>(S.hom.size());
    int nc = below ? static_cast<int>(below->size()) : 0;
    if (nb + nh + nc != nk) throw std::logic_error("degree splitting does not fill the space");
    DenseMatrix<F> basis(field, nk, nk);
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < nk; ++i) basis.at(i, j) = S.img[j][i];
    for (int j = 0; j < nh; ++j)
      for (int i = 0; i < nk; ++i) basis.at(i, nb + j) = S.hom[j][i];
    for (int j = 0; j < nc; ++j)
      for (int i = 0; i < nk; ++i) basis.at(i, nb + nh + j) = (*below)[j][i];
    auto inv = inverse(field, basis);
    if (!inv) throw std::logic_error("degree splitting is singular");

    if (nh > 0) con.small.dims[k] = nh;
    for (int j = 0; j < nh; ++j)
      for (int i = 0; i < nk; ++i) con.incl.add_entry(field, {k, j}, {k, i}, S.hom[j][i]);
    for (int e = 0; e < nk; ++e)
      for (int j = 0; j < nh; ++j) con.proj.add_entry(field, {k, e}, {k, j}, inv->at(nb + j, e));

    int nup = M.dim(k + 1);
    for (int e = 0; e < nk; ++e)
      for (int j = 0; j < nb; ++j) {
        typename F::Elem c = inv->at(j, e);
        if (field.is_zero(c)) continue;
        typename F::Elem mc = field.neg(c);
        for (int i = 0; i < nup; ++i)
          con.htpy.add_entry(field, {k, e}, {k + 1, i}, field.mul(mc, S.pre[j][i]));
      }
  }

  con.validate(field);
  return con;
}

/* ---- Homotopy transfer ------------------------------------------------- */

template <class F>
LinMap<F> shift_linmap(const F& field, const LinMap<F>& m, int delta) {
  LinMap<F> r;
  r.degree = m.degree;
  for (auto& [src, col] : m.cols)
    for (auto& [dst, c] : col)
      r.add_entry(field, {src.deg + delta, src.idx}, {dst.deg + delta, dst.idx}, c);
  return r;
}

namespace detail {

/* Linear combination of tensor words in shift-graded letters. */
template <class F>
using CoalgVec = std::map<std::vector<BasisElem>, typename F::Elem>;

template <class F>
void coalg_add(const F& field, CoalgVec<F>& dst, const std::vector<BasisElem>& w,
               const typename F::Elem& c) {
  if (field.is_zero(c)) return;
  auto [it, fresh] = dst.emplace(w, c);
  if (!fresh) {
    it->second = field.add(it->second, c);
    if (field.is_zero(it->second)) dst.erase(it);
  }
}

/* Coderivation of the generating operations of arity >= 2: apply b_q to
   every length-q window, paying the sign for moving an odd operator past
   the letters to the left of the window. */
template <class F>
CoalgVec<F> word_coderivation(const F& field, const std::map<int, Tensor<F>>& b,
                              const CoalgVec<F>& v) {
  CoalgVec<F> r;
  for (auto& [w, coeff] : v) {
    int n = static_cast<int>(w.size());
    int prefix = 0;
    for (int s = 0; s < n; ++s) {
      for (auto& [q, bq] : b) {
        if (q < 2 || s + q > n) continue;
        std::vector<BasisElem> key(w.begin() + s, w.begin() + s + q);
        auto cell = bq.table.find(key);
        if (cell == bq.table.end()) continue;
        for (auto& [o, bc] : cell->second) {
          std::vector<BasisElem> nw;
          nw.reserve(n - q + 1);
          nw.insert(nw.end(), w.begin(), w.begin() + s);
          nw.push_back(o);
          nw.insert(nw.end(), w.begin() + s + q, w.end());
          typename F::Elem c = field.mul(coeff, bc);
          if (prefix & 1) c = field.neg(c);
          coalg_add(field, r, nw, c);
        }
      }
      prefix += w[s].deg;
    }
  }
  return r;
}

/* Word homotopy: retract the first j letters, apply the homotopy at
   position j, leave the rest; summed over j with the sign for moving the
   odd homotopy past the retracted prefix. */
template <class F>
CoalgVec<F> word_homotopy(const F& field, const LinMap<F>& ip_s, const LinMap<F>& h_s,
                          const CoalgVec<F>& v) {
  CoalgVec<F> r;
  for (auto& [w, coeff] : v) {
    int n = static_cast<int>(w.size());
    int prefix = 0;
    for (int j = 0; j < n; ++j) {
      typename F::Elem base = (prefix & 1) ? field.neg(coeff) : coeff;
      std::vector<BasisElem> nw = w;
      std::function<void(int, const typename F::Elem&)> rec =
          [&](int pos, const typename F::Elem& acc) {
            if (pos > j) {
              coalg_add(field, r, nw, acc);
              return;
            }
            const LinMap<F>& m = pos == j ? h_s : ip_s;
            auto it = m.cols.find(w[pos]);
            if (it == m.cols.end()) return;
            for (auto& [o, c] : it->second) {
              nw[pos] = o;
              rec(pos + 1, field.mul(acc, c));
            }
            nw[pos] = w[pos];
          };
      rec(0, base);
      prefix += w[j].deg;
    }
  }
  return r;
}

/* The perturbation series: coderivation, then alternately homotopy and
   coderivation until the words die out. Every coderivation step strictly
   shortens words, so the series is finite. */
template <class F>
CoalgVec<F> perturbation_series(const F& field, const std::map<int, Tensor<F>>& b,
                                const LinMap<F>& ip_s, const LinMap<F>& h_s,
                                const CoalgVec<F>& v) {
  CoalgVec<F> total;
  CoalgVec<F> cur = word_coderivation(field, b, v);
  while (!cur.empty()) {
    for (auto& [w, c] : cur) coalg_add(field, total, w, c);
    cur = word_coderivation(field, b, word_homotopy(field, ip_s, h_s, cur));
  }
  return total;
}

/* Letterwise degree-zero map on a single word, expanded over the sparse
   outputs. */
template <class F>
CoalgVec<F> word_letterwise(const F& field, const LinMap<F>& m,
                            const std::vector<BasisElem>& w) {
  CoalgVec<F> r;
  std::vector<BasisElem> nw = w;
  std::function<void(int, const typename F::Elem&)> rec = [&](int pos,
                                                              const typename F::Elem& acc) {
    if (pos == static_cast<int>(w.size())) {
      coalg_add(field, r, nw, acc);
      return;
    }
    auto it = m.cols.find(w[pos]);
    if (it == m.cols.end()) return;
    for (auto& [o, c] : it->second) {
      nw[pos] = o;
      rec(pos + 1, field.mul(acc, c));
    }
    nw[pos] = w[pos];
  };
  rec(0, field.one());
  return r;
}

}  // namespace detail

/* Transferred structure on the retract together with the two morphisms
   that witness the transfer. Both restrict to the contraction maps in
   arity one. */
template <class F>
struct TransferResult {
  ConvElem<F> phi_t;  // structure on the retract, zero differential
  ConvElem<F> i_inf;  // (retract, 0, phi_t) -> (ambient, d, psi)
  ConvElem<F> p_inf;  // (ambient, d, psi) -> (retract, 0, phi_t)
};

template <class F>
TransferResult<F> homotopy_transfer(const F& field, const NsCooperad<F>& C,
                                    const AInfinityStructure<F>& A,
                                    const Contraction<F>& con) {
  if (!con.big) throw AInfError("transfer needs a contraction with an ambient complex");
  if (con.big->space.dims != A.complex.space.dims ||
      !lin_add_scaled(field, con.big->d, A.complex.d, field.neg(field.one())).is_zero())
    throw AInfError("contraction does not retract the structure's complex");
  con.validate(field);

  // Everything runs on shift-graded letters, where all generating
  // operations sit in degree -1 and the contraction maps transport
  // entrywise.
  std::map<int, Tensor<F>> b = shifted_b_ops(field, A);
  b.erase(1);  // the unary part drives the retraction, not the series
  LinMap<F> i_s = shift_linmap(field, con.incl, 1);
  LinMap<F> p_s = shift_linmap(field, con.proj, 1);
  LinMap<F> h_s = shift_linmap(field, con.htpy, 1);
  LinMap<F> ip_s = lin_compose(field, i_s, p_s);

  const GradedModule& H = con.small;
  const GradedModule& Amod = A.complex.space;

  TransferResult<F> out;
  out.phi_t = conv_zero<F>(-1, H, H);
  out.i_inf = conv_zero<F>(0, H, Amod);
  out.p_inf = conv_zero<F>(0, Amod, H);
  if (!con.incl.is_zero()) out.i_inf.comps.emplace(CoopElem::unit(), linmap_as_tensor(con.incl));
  if (!con.proj.is_zero()) out.p_inf.comps.emplace(CoopElem::unit(), linmap_as_tensor(con.proj));

  auto shifted_letters = [](const GradedModule& M) {
    std::vector<BasisElem> ls;
    for (auto& [deg, n] : M.dims)
      for (int i = 0; i < n; ++i) ls.push_back({deg + 1, i});
    return ls;
  };
  std::vector<BasisElem> hletters = shifted_letters(H);
  std::vector<BasisElem> aletters = shifted_letters(Amod);

  auto for_each_word = [](const std::vector<BasisElem>& ls, int q, auto&& fn) {
    if (ls.empty()) return;
    std::vector<int> idx(q, 0);
    std::vector<BasisElem> w(q);
    while (true) {
      for (int j = 0; j < q; ++j) w[j] = ls[idx[j]];
      fn(w);
      int j = q - 1;
      while (j >= 0 && ++idx[j] == static_cast<int>(ls.size())) idx[j--] = 0;
      if (j < 0) break;
    }
  };

  for (int q = 2; q <= C.weight_cap + 1; ++q) {
    CoopElem mu{q - 1, q, 0};
    if (!C.has_elem(mu)) break;

    Tensor<F> bq_s, iq_s;
    bq_s.arity = q;
    bq_s.degree = -1;
    iq_s.arity = q;
    iq_s.degree = 0;
    for_each_word(hletters, q, [&](const std::vector<BasisElem>& w) {
      detail::CoalgVec<F> in = detail::word_letterwise(field, i_s, w);
      detail::CoalgVec<F> x = detail::perturbation_series(field, b, ip_s, h_s, in);
      for (auto& [xw, c] : x) {
        if (xw.size() != 1) continue;
        if (auto it = p_s.cols.find(xw[0]); it != p_s.cols.end())
          for (auto& [o, pc] : it->second) bq_s.add_entry(field, w, o, field.mul(c, pc));
        if (auto it = h_s.cols.find(xw[0]); it != h_s.cols.end())
          for (auto& [o, hc] : it->second) iq_s.add_entry(field, w, o, field.mul(c, hc));
      }
    });
    // The shift back down is the single point where the sign convention
    // of the transferred data is fixed.
    if (!bq_s.is_zero()) out.phi_t.comps.emplace(mu, tensor_shift(field, bq_s, false));
    if (!iq_s.is_zero()) out.i_inf.comps.emplace(mu, tensor_shift(field, iq_s, false));

    Tensor<F> pq_s;
    pq_s.arity = q;
    pq_s.degree = 0;
    for_each_word(aletters, q, [&](const std::vector<BasisElem>& w) {
      detail::CoalgVec<F> in;
      detail::coalg_add(field, in, w, field.one());
      detail::CoalgVec<F> x = detail::perturbation_series(
          field, b, ip_s, h_s, detail::word_homotopy(field, ip_s, h_s, in));
      for (auto& [xw, c] : x) {
        if (xw.size() != 1) continue;
        if (auto it = p_s.cols.find(xw[0]); it != p_s.cols.end())
          for (auto& [o, pc] : it->second) pq_s.add_entry(field, w, o, field.mul(c, pc));
      }
    });
    if (!pq_s.is_zero()) out.p_inf.comps.emplace(mu, tensor_shift(field, pq_s, false));
  }

  // The series produces potentially nonzero components in every arity;
  // what we store stops at the weight cap.
  if (!b.empty() && !hletters.empty()) {
    out.phi_t.truncated = true;
    out.i_inf.truncated = true;
    out.p_inf.truncated = true;
  }

  LinMap<F> dA = A.complex.d;
  ConvElem<F> psi = ainf_to_conv(field, C, A);
  if (!conv_mc_residual(field, C, out.phi_t, nullptr).is_zero())
    throw std::logic_error("transferred structure fails the flatness equation");
  if (!infinity_residual(field, C, out.i_inf, out.phi_t, psi, nullptr, &dA).is_zero())
    throw std::logic_error("transfer inclusion fails the morphism equation");
  if (!infinity_residual(field, C, out.p_inf, psi, out.phi_t, &dA, nullptr).is_zero())
    throw std::logic_error("transfer projection fails the morphism equation");
  return out;
}

/* ---- Triple products ---------------------------------------------------- */

/* Triple product on a structure with zero differential: for classes with
   vanishing pairwise products the ternary operation applied to (a, b, c)
   is well defined up to a (H_{|b|+|c|+1}) + (H_{|a|+|b|+1}) c. */
template <class F>
struct TripleProduct {
  bool defined = false;  // both pairwise products vanish
  SparseVec<F> value;
  bool nonzero_mod_indeterminacy = false;
};

template <class F>
TripleProduct<F> triple_massey(const F& field, const NsCooperad<F>& C, const ConvElem<F>& phi,
                               const SparseVec<F>& a, const SparseVec<F>& b,
                               const SparseVec<F>& c) {
  auto deg_of = [](const SparseVec<F>& v) {
    if (v.empty()) throw AInfError("triple product needs nonzero homogeneous classes");
    int d = v.begin()->first.deg;
    for (auto& [e, x] : v) {
      (void)x;
      if (e.deg != d) throw AInfError("triple product needs homogeneous classes");
    }
    return d;
  };
  int da = deg_of(a), db = deg_of(b), dc = deg_of(c);
  CoopElem mu2{1, 2, 0}, mu3{2, 3, 0};
  if (!C.has_elem(mu3)) throw AInfError("weight cap too small for a triple product");

  TripleProduct<F> r;
  if (!conv_eval(field, phi, mu2, {a, b}).empty() ||
      !conv_eval(field, phi, mu2, {b, c}).empty())
    return r;
  r.defined = true;
  r.value = conv_eval(field, phi, mu3, {a, b, c});
  if (r.value.empty()) return r;

  const GradedModule& H = *phi.source;
  int tdeg = da + db + dc + 1;
  std::vector<SparseVec<F>> indet;
  for (int i = 0; i < H.dim(db + dc + 1); ++i) {
    SparseVec<F> y{{BasisElem{db + dc + 1, i}, field.one()}};
    SparseVec<F> v = conv_eval(field, phi, mu2, {a, y});
    if (!v.empty()) indet.push_back(std::move(v));
  }
  for (int i = 0; i < H.dim(da + db + 1); ++i) {
    SparseVec<F> x{{BasisElem{da + db + 1, i}, field.one()}};
    SparseVec<F> v = conv_eval(field, phi, mu2, {x, c});
    if (!v.empty()) indet.push_back(std::move(v));
  }
  DenseMatrix<F> m(field, H.dim(tdeg), static_cast<int>(indet.size()));
  for (int j = 0; j < static_cast<int>(indet.size()); ++j)
    for (auto& [e, x] : indet[j])
      if (e.deg == tdeg) m.at(e.idx, j) = x;
  std::vector<typename F::Elem> rhs(H.dim(tdeg), field.zero());
  for (auto& [e, x] : r.value)
    if (e.deg == tdeg) rhs[e.idx] = x;
  r.nonzero_mod_indeterminacy = !image_membership(field, m, rhs);
  return r;
}

}  // namespace kaledin
