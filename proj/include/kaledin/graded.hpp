#pragma once
// Graded modules over an exact field, homogeneous linear maps, and
// multilinear operations on tensor powers. Sign handling follows one
// mechanical rule fixed project-wide: moving a homogeneous operator of
// degree |g| past homogeneous arguments of total degree s costs (-1)^{|g| s}.
// Every composition routine below derives its signs from that rule alone.

#include <kaledin/field.hpp>
#include <kaledin/linalg.hpp>

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace kaledin {

/* Finite-dimensional graded module: dimension per homological degree. */
struct GradedModule {
  std::map<int, int> dims;  // degree -> dimension (> 0 entries only)

  int dim(int degree) const {
    auto it = dims.find(degree);
    return it == dims.end() ? 0 : it->second;
  }
  int total_dim() const {
    int t = 0;
    for (auto& [d, n] : dims) t += n;
    return t;
  }
  bool degree_bounds(int& lo, int& hi) const {
    if (dims.empty()) return false;
    lo = dims.begin()->first;
    hi = dims.rbegin()->first;
    return true;
  }
};

/* Basis element of a graded module: (degree, index within that degree). */
struct BasisElem {
  int deg = 0;
  int idx = 0;
  auto operator<=>(const BasisElem&) const = default;
};

template <class F>
using SparseVec = std::map<BasisElem, typename F::Elem>;  // homogeneous or not

template <class F>
void vec_add_scaled(const F& field, SparseVec<F>& dst, const SparseVec<F>& src,
                    const typename F::Elem& scale) {
  if (field.is_zero(scale)) return;
  for (auto& [b, v] : src) {
    auto it = dst.find(b);
    if (it == dst.end()) {
      auto w = field.mul(v, scale);
      if (!field.is_zero(w)) dst.emplace(b, w);
    } else {
      it->second = field.add(it->second, field.mul(v, scale));
      if (field.is_zero(it->second)) dst.erase(it);
    }
  }
}

/* Homogeneous linear map between graded modules, stored column-sparse. */
template <class F>
struct LinMap {
  int degree = 0;                           // output degree = input degree + degree
  std::map<BasisElem, SparseVec<F>> cols;   // source basis element -> image

  SparseVec<F> apply(const F& field, const SparseVec<F>& v) const {
    SparseVec<F> out;
    for (auto& [b, c] : v) {
      auto it = cols.find(b);
      if (it != cols.end()) vec_add_scaled(field, out, it->second, c);
    }
    return out;
  }

  void add_entry(const F& field, BasisElem src, BasisElem dst, const typename F::Elem& v) {
    if (field.is_zero(v)) return;
    auto& col = cols[src];
    auto it = col.find(dst);
    if (it == col.end())
      col.emplace(dst, v);
    else {
      it->second = field.add(it->second, v);
      if (field.is_zero(it->second)) col.erase(it);
    }
    if (col.empty()) cols.erase(src);
  }

  bool is_zero() const { return cols.empty(); }
};

/* Optional module differential argument. Spelled through type_identity
   so the parameter is a non-deduced context and call sites may pass a
   plain nullptr for "no differential". */
template <class F>
using DiffPtr = std::type_identity_t<const LinMap<F>*>;

template <class F>
LinMap<F> lin_compose(const F& field, const LinMap<F>& outer, const LinMap<F>& inner) {
  LinMap<F> r;
  r.degree = outer.degree + inner.degree;
  for (auto& [src, mid] : inner.cols) {
    SparseVec<F> img = outer.apply(field, mid);
    for (auto& [dst, v] : img) r.add_entry(field, src, dst, v);
  }
  return r;
}

template <class F>
LinMap<F> lin_add_scaled(const F& field, const LinMap<F>& a, const LinMap<F>& b,
                         const typename F::Elem& scale) {
  LinMap<F> r = a;
  for (auto& [src, col] : b.cols)
    for (auto& [dst, v] : col) r.add_entry(field, src, dst, field.mul(v, scale));
  return r;
}

/* Chain complex: module plus degree -1 differential with d^2 = 0. */
template <class F>
struct ChainComplex {
  GradedModule space;
  LinMap<F> d;  // degree -1

  void validate(const F& field) const {
    if (d.degree != -1) throw std::invalid_argument("differential must have degree -1");
    for (auto& [src, col] : d.cols) {
      if (src.idx < 0 || src.idx >= space.dim(src.deg))
        throw std::invalid_argument("differential column outside module basis");
      for (auto& [dst, v] : col) {
        (void)v;
        if (dst.deg != src.deg - 1) throw std::invalid_argument("differential entry degree mismatch");
        if (dst.idx < 0 || dst.idx >= space.dim(dst.deg))
          throw std::invalid_argument("differential entry outside module basis");
      }
      SparseVec<F> one{{src, field.one()}};
      if (!d.apply(field, d.apply(field, one)).empty())
        throw std::invalid_argument("differential does not square to zero");
    }
  }
};

/* Multilinear operation V^{tensor arity} -> W, homogeneous of the stated
   degree, stored as sparse entries keyed by the input tuple. */
template <class F>
struct Tensor {
  int arity = 1;
  int degree = 0;
  std::map<std::vector<BasisElem>, SparseVec<F>> table;

  bool is_zero() const { return table.empty(); }

  void add_entry(const F& field, const std::vector<BasisElem>& in, BasisElem out,
                 const typename F::Elem& v) {
    if (field.is_zero(v)) return;
    auto& cell = table[in];
    auto it = cell.find(out);
    if (it == cell.end())
      cell.emplace(out, v);
    else {
      it->second = field.add(it->second, v);
      if (field.is_zero(it->second)) cell.erase(it);
    }
    if (cell.empty()) table.erase(in);
  }

  void add_scaled(const F& field, const Tensor& other, const typename F::Elem& scale) {
    for (auto& [in, cell] : other.table)
      for (auto& [out, v] : cell) add_entry(field, in, out, field.mul(v, scale));
  }

  SparseVec<F> eval(const F& field, const std::vector<BasisElem>& in) const {
    auto it = table.find(in);
    return it == table.end() ? SparseVec<F>{} : it->second;
  }
};

inline int tuple_degree(const std::vector<BasisElem>& in, int from, int to) {
  int s = 0;
  for (int i = from; i < to; ++i) s += in[i].deg;
  return s;
}

/* outer o_pos inner (1-based slot): the inner operation feeds slot pos of
   the outer one. Koszul: inner moves past the first pos-1 inputs. */
template <class F>
Tensor<F> tensor_compose_at(const F& field, const Tensor<F>& outer, int pos,
                            const Tensor<F>& inner) {
  Tensor<F> r;
  r.arity = outer.arity + inner.arity - 1;
  r.degree = outer.degree + inner.degree;
  for (auto& [oin, ocell] : outer.table) {
    for (auto& [iin, icell] : inner.table) {
      for (auto& [mid, iv] : icell) {
        if (oin[pos - 1] != mid) continue;
        std::vector<BasisElem> in;
        in.reserve(r.arity);
        in.insert(in.end(), oin.begin(), oin.begin() + (pos - 1));
        in.insert(in.end(), iin.begin(), iin.end());
        in.insert(in.end(), oin.begin() + pos, oin.end());
        int sign_exp = inner.degree * tuple_degree(oin, 0, pos - 1);
        typename F::Elem coeff = field.mul(iv, field.one());
        if (sign_exp & 1) coeff = field.neg(coeff);
        for (auto& [out, ov] : ocell) r.add_entry(field, in, out, field.mul(coeff, ov));
      }
    }
  }
  return r;
}

/* outer o (inner_1 tensor ... tensor inner_k): full composition. Each
   inner_l moves past the inputs consumed by inner_1..inner_{l-1}. */
template <class F>
Tensor<F> tensor_compose_multi(const F& field, const Tensor<F>& outer,
                               const std::vector<const Tensor<F>*>& inners) {
  Tensor<F> r;
  int ar = 0, dg = outer.degree;
  for (auto* t : inners) {
    ar += t->arity;
    dg += t->degree;
  }
  r.arity = ar;
  r.degree = dg;
  int k = static_cast<int>(inners.size());
  for (auto& [oin, ocell] : outer.table) {
    if (static_cast<int>(oin.size()) != k) continue;
    // Depth-first match of each slot against the corresponding inner output.
    struct Frame {
      std::vector<BasisElem> in;
      typename F::Elem coeff;
      int consumed_deg;  // total degree of inputs already placed
    };
    std::vector<Frame> frames{{{}, field.one(), 0}};
    bool dead = false;
    for (int l = 0; l < k && !dead; ++l) {
      std::vector<Frame> next;
      for (auto& fr : frames) {
        for (auto& [iin, icell] : inners[l]->table) {
          auto it = icell.find(oin[l]);
          if (it == icell.end()) continue;
          Frame nf;
          nf.in = fr.in;
          nf.in.insert(nf.in.end(), iin.begin(), iin.end());
          int sign_exp = inners[l]->degree * fr.consumed_deg;
          nf.coeff = field.mul(fr.coeff, it->second);
          if (sign_exp & 1) nf.coeff = field.neg(nf.coeff);
          nf.consumed_deg = fr.consumed_deg + tuple_degree(iin, 0, static_cast<int>(iin.size()));
          next.push_back(std::move(nf));
        }
      }
      frames = std::move(next);
      if (frames.empty()) dead = true;
    }
    if (dead) continue;
    for (auto& fr : frames)
      for (auto& [out, ov] : ocell) r.add_entry(field, fr.in, out, field.mul(fr.coeff, ov));
  }
  return r;
}

/* Post-compose with a linear map on the output side. */
template <class F>
Tensor<F> tensor_post(const F& field, const LinMap<F>& m, const Tensor<F>& t) {
  Tensor<F> r;
  r.arity = t.arity;
  r.degree = t.degree + m.degree;
  for (auto& [in, cell] : t.table) {
    SparseVec<F> img = m.apply(field, cell);
    for (auto& [out, v] : img) r.add_entry(field, in, out, v);
  }
  return r;
}

/* Pre-compose with sum_j id^{j-1} (x) m (x) id^{...} on the input side;
   for m of odd degree each slot j contributes the Koszul sign of moving m
   past the first j-1 (new) inputs. */
template <class F>
Tensor<F> tensor_pre_derivation(const F& field, const Tensor<F>& t, const LinMap<F>& m) {
  Tensor<F> r;
  r.arity = t.arity;
  r.degree = t.degree + m.degree;
  for (auto& [in, cell] : t.table) {
    for (int j = 0; j < t.arity; ++j) {
      // Find all x with m(x) hitting in[j].
      for (auto& [src, col] : m.cols) {
        auto it = col.find(in[j]);
        if (it == col.end()) continue;
        std::vector<BasisElem> nin = in;
        nin[j] = src;
        int sign_exp = m.degree * tuple_degree(nin, 0, j);
        typename F::Elem c = it->second;
        if (sign_exp & 1) c = field.neg(c);
        for (auto& [out, v] : cell) r.add_entry(field, nin, out, field.mul(c, v));
      }
    }
  }
  return r;
}

/* Conjugation transport between an operation on V and the corresponding
   operation on the shifted module (every degree raised by one). The
   entrywise sign is (-1)^{sum_j (arity - j) |in_j|} with |in_j| read in V;
   applying the transport twice with the same flag returns the input, and
   shift_up followed by shift_down is the identity. */
template <class F>
Tensor<F> tensor_shift(const F& field, const Tensor<F>& t, bool up) {
  Tensor<F> r;
  r.arity = t.arity;
  int delta = up ? 1 : -1;
  r.degree = t.degree + delta * (1 - t.arity);
  for (auto& [in, cell] : t.table) {
    std::vector<BasisElem> nin = in;
    int exp = 0;
    for (int j = 0; j < t.arity; ++j) {
      int base_deg = up ? in[j].deg : in[j].deg - 1;  // degree in the unshifted module
      exp += (t.arity - 1 - j) * base_deg;
      nin[j].deg += delta;
    }
    for (auto& [out, v] : cell) {
      BasisElem nout{out.deg + delta, out.idx};
      typename F::Elem c = v;
      if (exp & 1) c = field.neg(c);
      r.add_entry(field, nin, nout, c);
    }
  }
  return r;
}

}  // namespace kaledin
