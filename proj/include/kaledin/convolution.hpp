#pragma once
// Convolution calculus: maps from a weight-graded cooperad into the
// endomorphism operad of a graded module (or the hom-operad between two
// modules). Carries the circle-star product induced by the infinitesimal
// decomposition, the composite product induced by the full decomposition,
// its one-slot-perturbed variant, and the differential assembled from the
// module differentials and the cooperad differential.
//
// Counit terms are implicit in the stored decompositions, so every
// operation adds them back explicitly; their coefficients are forced to
// one by the counit axioms.

#include <kaledin/cooperad.hpp>
#include <kaledin/field.hpp>
#include <kaledin/graded.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kaledin {

template <class F>
struct ConvElem {
  using Elem = typename F::Elem;

  int degree = 0;
  const GradedModule* source = nullptr;
  const GradedModule* target = nullptr;
  // Component per cooperad basis element (the counit included, for
  // morphism-like elements); tensor arity matches the element's arity and
  // tensor degree is degree + internal degree of the element.
  std::map<CoopElem, Tensor<F>> comps;
  // Set when a product could have produced components beyond the weight
  // cap of the cooperad: the result is exact modulo that filtration level
  // but not beyond it. Inherited through arithmetic.
  bool truncated = false;

  bool is_zero() const {
    for (auto& [c, t] : comps)
      if (!t.is_zero()) return false;
    return true;
  }

  const Tensor<F>* comp(CoopElem c) const {
    auto it = comps.find(c);
    return it == comps.end() || it->second.is_zero() ? nullptr : &it->second;
  }

  Tensor<F>& comp_mut(const NsCooperad<F>& C, CoopElem c) {
    auto it = comps.find(c);
    if (it == comps.end()) {
      Tensor<F> t;
      t.arity = c.arity;
      t.degree = degree + C.degree_of(c);
      it = comps.emplace(c, std::move(t)).first;
    }
    return it->second;
  }

  void prune() {
    for (auto it = comps.begin(); it != comps.end();)
      it = it->second.is_zero() ? comps.erase(it) : std::next(it);
  }
};

struct ConvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
ConvElem<F> conv_zero(int degree, const GradedModule& S, const GradedModule& T) {
  ConvElem<F> r;
  r.degree = degree;
  r.source = &S;
  r.target = &T;
  return r;
}

/* The identity of the composite product: counit |-> identity map. */
template <class F>
ConvElem<F> conv_unit(const F& field, const NsCooperad<F>& C, const GradedModule& M) {
  ConvElem<F> r = conv_zero<F>(0, M, M);
  Tensor<F>& t = r.comp_mut(C, CoopElem::unit());
  for (auto& [deg, n] : M.dims)
    for (int i = 0; i < n; ++i) {
      BasisElem e{deg, i};
      t.add_entry(field, {e}, e, field.one());
    }
  return r;
}

template <class F>
void conv_validate(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                   const std::string& what) {
  (void)field;
  if (!f.source || !f.target) throw ConvError(what + ": unset modules");
  for (auto& [c, t] : f.comps) {
    if (!C.has_elem(c)) throw ConvError(what + ": component at unknown element " + c.str());
    if (t.arity != c.arity) throw ConvError(what + ": component arity mismatch at " + c.str());
    if (!t.is_zero() && t.degree != f.degree + C.degree_of(c))
      throw ConvError(what + ": component degree mismatch at " + c.str());
    for (auto& [ins, col] : t.table) {
      for (auto& e : ins)
        if (e.idx < 0 || e.idx >= f.source->dim(e.deg))
          throw ConvError(what + ": input outside source module at " + c.str());
      for (auto& [out, v] : col) {
        (void)v;
        if (out.idx < 0 || out.idx >= f.target->dim(out.deg))
          throw ConvError(what + ": output outside target module at " + c.str());
      }
    }
  }
}

/* Largest weight carrying a nonzero component (0 for zero or counit-only
   elements). */
template <class F>
int conv_max_weight(const ConvElem<F>& f) {
  int w = 0;
  for (auto& [c, t] : f.comps)
    if (!t.is_zero() && c.weight > w) w = c.weight;
  return w;
}

template <class F>
ConvElem<F> conv_add_scaled(const F& field, const ConvElem<F>& a, const ConvElem<F>& b,
                            typename F::Elem scale) {
  if (a.degree != b.degree) throw ConvError("adding convolution elements of different degrees");
  ConvElem<F> r = a;
  r.truncated = a.truncated || b.truncated;
  for (auto& [c, t] : b.comps) {
    auto it = r.comps.find(c);
    if (it == r.comps.end()) {
      Tensor<F> scaled;
      scaled.arity = t.arity;
      scaled.degree = t.degree;
      scaled.add_scaled(field, t, scale);
      if (!scaled.is_zero()) r.comps.emplace(c, std::move(scaled));
    } else {
      it->second.add_scaled(field, t, scale);
    }
  }
  r.prune();
  return r;
}

template <class F>
ConvElem<F> conv_scale(const F& field, const ConvElem<F>& a, typename F::Elem scale) {
  ConvElem<F> r = conv_zero<F>(a.degree, *a.source, *a.target);
  return conv_add_scaled(field, r, a, scale);
}

template <class F>
ConvElem<F> conv_neg(const F& field, const ConvElem<F>& a) {
  return conv_scale(field, a, field.neg(field.one()));
}

template <class F>
bool conv_eq(const F& field, const ConvElem<F>& a, const ConvElem<F>& b) {
  ConvElem<F> d = conv_add_scaled(field, a, b, field.neg(field.one()));
  for (auto& [c, t] : d.comps)
    if (!t.is_zero()) return false;
  return true;
}

template <class F>
ConvElem<F> conv_weight_component(const ConvElem<F>& f, int w) {
  ConvElem<F> r = conv_zero<F>(f.degree, *f.source, *f.target);
  r.truncated = f.truncated;
  for (auto& [c, t] : f.comps)
    if (c.weight == w) r.comps.emplace(c, t);
  return r;
}

template <class F>
ConvElem<F> conv_truncate(const ConvElem<F>& f, int weight_cap) {
  ConvElem<F> r = conv_zero<F>(f.degree, *f.source, *f.target);
  r.truncated = f.truncated;
  for (auto& [c, t] : f.comps) {
    if (c.weight <= weight_cap) r.comps.emplace(c, t);
    else if (!t.is_zero()) r.truncated = true;
  }
  return r;
}

/* Star product along the infinitesimal decomposition. Defined whenever
   the middle module matches: f in Conv(M,T), g in Conv(S,M) is NOT the
   typing here — star keeps one module pair: f, g in Conv(S,T) with
   S == T is the usual case; mixed typing f in Conv(S,T), g in Conv(S,S)
   (source-side) also typechecks since the inner factor eats source
   inputs and emits a source output that the outer factor consumes.
   We require: g.source == f.source and g.target == f.source. */
template <class F>
ConvElem<F> conv_star(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                      const ConvElem<F>& g) {
  if (g.source != f.source || g.target != f.source)
    throw ConvError("star product: inner factor must map the source module to itself");
  ConvElem<F> r = conv_zero<F>(f.degree + g.degree, *f.source, *f.target);
  r.truncated = f.truncated || g.truncated ||
                conv_max_weight(f) + conv_max_weight(g) > C.weight_cap;
  auto add = [&](CoopElem at, const Tensor<F>* left, int pos, const Tensor<F>* right,
                 typename F::Elem coeff, int left_cdeg) {
    if (!left || !right) return;
    // Koszul: the right operand moves past the left cooperad factor.
    typename F::Elem c = coeff;
    if ((g.degree * left_cdeg) & 1) c = field.neg(c);
    Tensor<F> term = tensor_compose_at(field, *left, pos, *right);
    r.comp_mut(C, at).add_scaled(field, term, c);
  };
  for (auto c : C.elements()) {
    // Implicit counit splittings.
    add(c, f.comp(CoopElem::unit()), 1, g.comp(c), field.one(), 0);
    for (int j = 1; j <= c.arity; ++j)
      add(c, f.comp(c), j, g.comp(CoopElem::unit()), field.one(), C.degree_of(c));
    for (auto& t : C.delta1_of(c))
      add(c, f.comp(t.left), t.pos, g.comp(t.right), t.coeff, C.degree_of(t.left));
  }
  // Unit component: single splitting (counit; counit).
  add(CoopElem::unit(), f.comp(CoopElem::unit()), 1, g.comp(CoopElem::unit()), field.one(), 0);
  r.prune();
  return r;
}

/* Composite product along the full decomposition: f after g, i.e. the
   outer factor is f. Typing: g in Conv(S,M), f in Conv(M,T). The right
   factor must have degree zero: each decomposition term applies a
   different number of copies of g, so a nonzero degree would make the
   result inhomogeneous and it has no single-degree presentation here. */
template <class F>
ConvElem<F> conv_circ(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                      const ConvElem<F>& g) {
  if (g.target != f.source)
    throw ConvError("composite product: middle modules disagree");
  if (g.degree != 0)
    throw ConvError("composite product: the right factor must have degree zero");
  ConvElem<F> r = conv_zero<F>(f.degree + g.degree, *g.source, *f.target);
  r.truncated = f.truncated || g.truncated;
  if (int gw = conv_max_weight(g); gw > 0) {
    // Possible composite weights reach w_top + arity * gw.
    for (auto& [c, t] : f.comps)
      if (!t.is_zero() && c.weight + c.arity * gw > C.weight_cap) r.truncated = true;
  }
  std::vector<CoopElem> all = C.elements();
  all.push_back(CoopElem::unit());
  for (auto c : all) {
    for (auto& t : C.delta_full(field, c)) {
      const Tensor<F>* top = f.comp(t.top);
      if (!top) continue;
      std::vector<const Tensor<F>*> lows;
      bool ok = true;
      for (auto& l : t.lowers) {
        const Tensor<F>* lt = g.comp(l);
        if (!lt) {
          ok = false;
          break;
        }
        lows.push_back(lt);
      }
      if (!ok) continue;
      // Degree-zero copies of g commute past the cooperad factors, so
      // no Koszul sign arises here.
      Tensor<F> term = tensor_compose_multi(field, *top, lows);
      r.comp_mut(C, c).add_scaled(field, term, t.coeff);
    }
  }
  r.prune();
  return r;
}

/* Composite product with one slot perturbed: sum over decompositions and
   over a single lower slot that receives h instead of g. */
template <class F>
ConvElem<F> conv_circ_inf(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                          const ConvElem<F>& g, const ConvElem<F>& h) {
  if (g.target != f.source || h.target != f.source || g.source != h.source ||
      g.degree != 0)
    throw ConvError("perturbed composite: typing requires degree-zero g with matching modules");
  ConvElem<F> r = conv_zero<F>(f.degree + h.degree, *g.source, *f.target);
  r.truncated = f.truncated || g.truncated || h.truncated;
  if (int gw = std::max(conv_max_weight(g), conv_max_weight(h)); gw > 0) {
    for (auto& [c, t] : f.comps)
      if (!t.is_zero() && c.weight + c.arity * gw > C.weight_cap) r.truncated = true;
  }
  std::vector<CoopElem> all = C.elements();
  all.push_back(CoopElem::unit());
  for (auto c : all) {
    for (auto& t : C.delta_full(field, c)) {
      const Tensor<F>* top = f.comp(t.top);
      if (!top) continue;
      for (size_t slot = 0; slot < t.lowers.size(); ++slot) {
        std::vector<const Tensor<F>*> lows;
        bool ok = true;
        for (size_t l = 0; l < t.lowers.size(); ++l) {
          const Tensor<F>* lt =
              (l == slot ? h.comp(t.lowers[l]) : g.comp(t.lowers[l]));
          if (!lt) {
            ok = false;
            break;
          }
          lows.push_back(lt);
        }
        if (!ok) continue;
        // Koszul: only h has (possibly) odd degree; it moves past the top
        // factor and the lower factors before its slot.
        int exp = 0;
        if (h.degree & 1) {
          int prefix = C.degree_of(t.top);
          for (size_t l = 0; l < slot; ++l) prefix += C.degree_of(t.lowers[l]);
          exp = prefix;
        }
        typename F::Elem coeff = t.coeff;
        if (exp & 1) coeff = field.neg(coeff);
        Tensor<F> term = tensor_compose_multi(field, *top, lows);
        r.comp_mut(C, c).add_scaled(field, term, coeff);
      }
    }
  }
  r.prune();
  return r;
}

/* Differential: commutator with the module differentials plus the pulled
   back cooperad differential.
     (d f)(c) = dT o f(c) - (-1)^{|f|+|c|} f(c) o d_{S,tensor}
                - (-1)^{|f|} f(d_C c).
   Either module differential may be null (zero). */
template <class F>
ConvElem<F> conv_d(const F& field, const NsCooperad<F>& C, const ConvElem<F>& f,
                   DiffPtr<F> dS, DiffPtr<F> dT) {
  ConvElem<F> r = conv_zero<F>(f.degree - 1, *f.source, *f.target);
  r.truncated = f.truncated;
  typename F::Elem one = field.one(), neg = field.neg(one);
  std::vector<CoopElem> all = C.elements();
  all.push_back(CoopElem::unit());
  for (auto c : all) {
    const Tensor<F>* fc = f.comp(c);
    int cdeg = C.degree_of(c);
    if (fc) {
      if (dT && !dT->is_zero()) {
        Tensor<F> term = tensor_post(field, *dT, *fc);
        r.comp_mut(C, c).add_scaled(field, term, one);
      }
      if (dS && !dS->is_zero()) {
        Tensor<F> term = tensor_pre_derivation(field, *fc, *dS);
        typename F::Elem s = ((f.degree + cdeg) & 1) ? one : neg;
        r.comp_mut(C, c).add_scaled(field, term, s);
      }
    }
    for (auto& [img, v] : C.dC_of(c)) {
      const Tensor<F>* fi = f.comp(img);
      if (!fi) continue;
      typename F::Elem s = field.mul(v, (f.degree & 1) ? one : neg);
      r.comp_mut(C, c).add_scaled(field, *fi, s);
    }
  }
  r.prune();
  return r;
}

/* Lie bracket: skew-symmetrization of the star product. */
template <class F>
ConvElem<F> conv_bracket(const F& field, const NsCooperad<F>& C, const ConvElem<F>& a,
                         const ConvElem<F>& b) {
  ConvElem<F> ab = conv_star(field, C, a, b);
  ConvElem<F> ba = conv_star(field, C, b, a);
  typename F::Elem s = ((a.degree * b.degree) & 1) ? field.one() : field.neg(field.one());
  return conv_add_scaled(field, ab, ba, s);
}

/* Flatness residual d(phi) + phi * phi of a degree -1 element without
   counit component. */
template <class F>
ConvElem<F> conv_mc_residual(const F& field, const NsCooperad<F>& C, const ConvElem<F>& phi,
                             DiffPtr<F> dmod) {
  if (phi.degree != -1) throw ConvError("flatness residual needs a degree -1 element");
  if (phi.comp(CoopElem::unit()))
    throw ConvError("flatness residual: element must have no counit component");
  ConvElem<F> r = conv_d(field, C, phi, dmod, dmod);
  ConvElem<F> sq = conv_star(field, C, phi, phi);
  return conv_add_scaled(field, r, sq, field.one());
}

template <class F>
bool conv_is_mc(const F& field, const NsCooperad<F>& C, const ConvElem<F>& phi,
                DiffPtr<F> dmod) {
  ConvElem<F> r = conv_mc_residual(field, C, phi, dmod);
  for (auto& [c, t] : r.comps)
    if (!t.is_zero()) return false;
  return true;
}

/* Coordinate of a convolution element viewed as a vector: a cooperad
   basis element, an input tuple, and an output basis element. */
struct ConvCoord {
  CoopElem c;
  std::vector<BasisElem> ins;
  BasisElem out;
  auto operator<=>(const ConvCoord&) const = default;
};

inline std::vector<BasisElem> module_basis(const GradedModule& M) {
  std::vector<BasisElem> out;
  for (auto& [deg, n] : M.dims)
    for (int i = 0; i < n; ++i) out.push_back({deg, i});
  return out;
}

/* All coordinates of weight-w degree-d elements of Conv(S,T). */
template <class F>
std::vector<ConvCoord> conv_coords(const F&, const NsCooperad<F>& C, const GradedModule& S,
                                   const GradedModule& T, int conv_degree, int w) {
  std::vector<ConvCoord> out;
  std::vector<BasisElem> sb = module_basis(S);
  for (auto c : C.elements_of_weight(w)) {
    int tdeg = conv_degree + C.degree_of(c);
    std::vector<BasisElem> tuple(c.arity);
    std::function<void(int, int)> rec = [&](int pos, int degsum) {
      if (pos == c.arity) {
        int outdeg = degsum + tdeg;
        int n = T.dim(outdeg);
        for (int i = 0; i < n; ++i) out.push_back({c, tuple, {outdeg, i}});
        return;
      }
      for (auto& e : sb) {
        tuple[pos] = e;
        rec(pos + 1, degsum + e.deg);
      }
    };
    rec(0, 0);
  }
  return out;
}

template <class F>
ConvElem<F> conv_from_coords(const F& field, const NsCooperad<F>& C, const GradedModule& S,
                             const GradedModule& T, int conv_degree,
                             const std::map<ConvCoord, typename F::Elem>& vals) {
  ConvElem<F> r = conv_zero<F>(conv_degree, S, T);
  for (auto& [coord, v] : vals) {
    if (field.is_zero(v)) continue;
    r.comp_mut(C, coord.c).add_entry(field, coord.ins, coord.out, v);
  }
  return r;
}

template <class F>
std::map<ConvCoord, typename F::Elem> conv_to_coords(const F& field, const ConvElem<F>& f) {
  std::map<ConvCoord, typename F::Elem> out;
  for (auto& [c, t] : f.comps)
    for (auto& [ins, col] : t.table)
      for (auto& [o, v] : col)
        if (!field.is_zero(v)) out[{c, ins, o}] = v;
  return out;
}

/* Evaluate one component multilinearly on sparse vectors. */
template <class F>
SparseVec<F> conv_eval(const F& field, const ConvElem<F>& f, CoopElem c,
                       const std::vector<SparseVec<F>>& args) {
  SparseVec<F> out;
  const Tensor<F>* t = f.comp(c);
  if (!t) return out;
  if (static_cast<int>(args.size()) != t->arity)
    throw ConvError("evaluation arity mismatch");
  for (auto& [ins, col] : t->table) {
    typename F::Elem scale = field.one();
    bool zero = false;
    for (int i = 0; i < t->arity; ++i) {
      auto it = args[i].find(ins[i]);
      if (it == args[i].end() || field.is_zero(it->second)) {
        zero = true;
        break;
      }
      scale = field.mul(scale, it->second);
    }
    if (zero) continue;
    for (auto& [o, v] : col) vec_add_scaled(field, out, SparseVec<F>{{o, v}}, scale);
  }
  return out;
}

}  // namespace kaledin
