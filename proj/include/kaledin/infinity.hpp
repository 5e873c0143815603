#pragma once
// Infinity-morphisms between algebra structures over a weight-graded
// cooperad: the defining equation, inversion of weight-zero-invertible
// morphisms, the adjoint action on convolution elements, and the action
// on structures. A morphism is a degree-zero convolution element whose
// counit component is a chain map; it is an isotopy when that component
// is the identity.

#include <kaledin/convolution.hpp>
#include <kaledin/linalg.hpp>

#include <optional>

namespace kaledin {

template <class F>
LinMap<F> tensor_as_linmap(const Tensor<F>& t) {
  if (t.arity != 1) throw ConvError("tensor_as_linmap: arity must be 1");
  LinMap<F> m;
  m.degree = t.degree;
  for (auto& [ins, col] : t.table)
    for (auto& [o, v] : col) m.cols[ins[0]][o] = v;
  return m;
}

template <class F>
Tensor<F> linmap_as_tensor(const LinMap<F>& m) {
  Tensor<F> t;
  t.arity = 1;
  t.degree = m.degree;
  for (auto& [src, col] : m.cols)
    for (auto& [o, v] : col) t.table[{src}][o] = v;
  return t;
}

/* Invert a degree-zero arity-one tensor blockwise per degree.
   Returns empty when some block is not invertible (including dimension
   mismatches between source and target). */
template <class F>
std::optional<Tensor<F>> arity1_inverse(const F& field, const Tensor<F>& t,
                                        const GradedModule& S, const GradedModule& T) {
  if (t.arity != 1 || t.degree != 0)
    throw ConvError("arity1_inverse expects a degree-zero arity-one tensor");
  Tensor<F> inv;
  inv.arity = 1;
  inv.degree = 0;
  std::set<int> degrees;
  for (auto& [d, n] : S.dims)
    if (n > 0) degrees.insert(d);
  for (auto& [d, n] : T.dims)
    if (n > 0) degrees.insert(d);
  for (int d : degrees) {
    int ns = S.dim(d), nt = T.dim(d);
    if (ns != nt) return std::nullopt;
    if (ns == 0) continue;
    DenseMatrix<F> block(field, nt, ns);
    for (int j = 0; j < ns; ++j) {
      auto it = t.table.find({BasisElem{d, j}});
      if (it == t.table.end()) continue;
      for (auto& [o, v] : it->second) {
        if (o.deg != d) return std::nullopt;
        block.at(o.idx, j) = v;
      }
    }
    auto binv = inverse(field, block);
    if (!binv) return std::nullopt;
    for (int j = 0; j < nt; ++j)
      for (int i = 0; i < ns; ++i)
        if (!field.is_zero(binv->at(i, j)))
          inv.table[{BasisElem{d, j}}][BasisElem{d, i}] = binv->at(i, j);
  }
  return inv;
}

/* Identity test for the counit component. */
template <class F>
bool is_isotopy(const F& field, const ConvElem<F>& f) {
  if (f.degree != 0 || f.source != f.target) return false;
  const Tensor<F>* u = f.comp(CoopElem::unit());
  Tensor<F> diff;
  diff.arity = 1;
  diff.degree = 0;
  for (auto& [deg, n] : f.source->dims)
    for (int i = 0; i < n; ++i) {
      BasisElem e{deg, i};
      diff.table[{e}][e] = field.one();
    }
  if (!u) return diff.is_zero();
  diff.add_scaled(field, *u, field.neg(field.one()));
  return diff.is_zero();
}

/* Defining-equation residual of a candidate morphism
   f : (S, dS, phi) --> (T, dT, psi):   f * phi - psi o f - d(f). */
template <class F>
ConvElem<F> infinity_residual(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                              const ConvElem<F>& phi, const ConvElem<F>& psi,
                              DiffPtr<F> dS, DiffPtr<F> dT) {
  if (f.degree != 0) throw ConvError("morphism must have degree zero");
  if (phi.source != f.source || phi.target != f.source)
    throw ConvError("source structure lives on the wrong module");
  if (psi.source != f.target || psi.target != f.target)
    throw ConvError("target structure lives on the wrong module");
  ConvElem<F> lhs = conv_star(field, C, f, phi);
  ConvElem<F> mid = conv_circ(field, C, psi, f);
  ConvElem<F> rhs = conv_d(field, C, f, dS, dT);
  ConvElem<F> r = conv_add_scaled(field, lhs, mid, field.neg(field.one()));
  return conv_add_scaled(field, r, rhs, field.neg(field.one()));
}

template <class F>
bool check_infinity_morphism(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                             const ConvElem<F>& phi, const ConvElem<F>& psi,
                             DiffPtr<F> dS, DiffPtr<F> dT) {
  return infinity_residual(field, C, f, phi, psi, dS, dT).is_zero();
}

/* Weight-recursive two-sided inverse of a morphism with invertible
   counit component: the weight-w component is fixed by cancelling the
   weight-w defect of g o f = 1. */
template <class F>
ConvElem<F> invert_infinity_iso(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f) {
  if (f.degree != 0) throw ConvError("inversion needs a degree-zero element");
  const Tensor<F>* u = f.comp(CoopElem::unit());
  if (!u) throw ConvError("inversion: counit component is zero, not invertible");
  auto uinv = arity1_inverse(field, *u, *f.source, *f.target);
  if (!uinv) throw ConvError("inversion: counit component is not invertible");
  ConvElem<F> g = conv_zero<F>(0, *f.target, *f.source);
  g.comps.emplace(CoopElem::unit(), *uinv);
  for (int w = 1; w <= C.weight_cap; ++w) {
    // Defect of g o f at weight w; the unknown weight-w component of g
    // contributes exactly g^{(w)} o (f^{(0)})^{tensor arity}, so divide
    // it back out on the right.
    ConvElem<F> defect = conv_weight_component(conv_circ(field, C, g, f), w);
    for (auto c : C.elements_of_weight(w)) {
      const Tensor<F>* dc = defect.comp(c);
      if (!dc) continue;
      std::vector<const Tensor<F>*> inners(c.arity, &*uinv);
      Tensor<F> corr = tensor_compose_multi(field, *dc, inners);
      g.comp_mut(C, c).add_scaled(field, corr, field.neg(field.one()));
    }
  }
  g.prune();
  return g;
}

/* Adjoint action Ad_f(x) = (f * x) o f^{-1}. */
template <class F>
ConvElem<F> adjoint(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                    const ConvElem<F>& f_inv, const ConvElem<F>& x) {
  ConvElem<F> fx = conv_star(field, C, f, x);
  return conv_circ(field, C, fx, f_inv);
}

template <class F>
ConvElem<F> adjoint(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                    const ConvElem<F>& x) {
  return adjoint(field, C, f, invert_infinity_iso(field, C, f), x);
}

/* Action on structures: f . phi = Ad_f(phi) - d(f) o f^{-1}.
   The output is the unique structure psi with f : phi --> psi a
   morphism (when phi is flat, so is the output). */
template <class F>
ConvElem<F> act_on_structure(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                             const ConvElem<F>& f_inv, const ConvElem<F>& phi,
                             DiffPtr<F> dS, DiffPtr<F> dT) {
  ConvElem<F> a = adjoint(field, C, f, f_inv, phi);
  ConvElem<F> df = conv_d(field, C, f, dS, dT);
  ConvElem<F> b = conv_circ(field, C, df, f_inv);
  ConvElem<F> r = conv_add_scaled(field, a, b, field.neg(field.one()));
  // The result is a structure: strip any counit component that cancels
  // to zero; a nonzero counit component signals a typing error upstream.
  if (r.comp(CoopElem::unit())) throw ConvError("structure action produced a counit component");
  return r;
}

template <class F>
ConvElem<F> act_on_structure(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                             const ConvElem<F>& phi, DiffPtr<F> dS, DiffPtr<F> dT) {
  return act_on_structure(field, C, f, invert_infinity_iso(field, C, f), phi, dS, dT);
}

}  // namespace kaledin
