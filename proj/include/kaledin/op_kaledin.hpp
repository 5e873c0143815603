#pragma once
// Deformation classes and gauge trivialization for algebra structures
// over a weight-graded cooperad, phrased inside the convolution algebra
// on a graded module with zero differential (the homology picture).
// The ambient differential is the pullback of the cooperad differential;
// it raises weight by one, so the machinery matches the weight-graded
// Lie case with shift one, with isotopies in place of gauges.

#include <kaledin/convolution.hpp>
#include <kaledin/infinity.hpp>
#include <kaledin/linalg.hpp>

#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kaledin {

/* Truncated class representative: coefficient j of the formal parameter
   is (j+1) * phi^{(j+2)}, for j = 0..n-1. */
template <class F>
struct OpClassRep {
  int n = 0;
  std::vector<ConvElem<F>> coeffs;

  bool is_zero() const {
    for (auto& c : coeffs)
      if (!c.is_zero()) return false;
    return true;
  }
};

/* Ambient differential of the convolution algebra over a module with
   zero differential: only the cooperad part survives. */
template <class F>
ConvElem<F> op_ambient_d(const F& field, const NsCooperad<F>& C, const ConvElem<F>& x) {
  return conv_d(field, C, x, nullptr, nullptr);
}

template <class F>
OpClassRep<F> operadic_truncated_kaledin(const F& field, const NsCooperad<F>& C,
                                         const ConvElem<F>& phi, int n) {
  if (n < 1) throw ConvError("class truncation order must be at least 1");
  if (!conv_is_mc(field, C, phi, nullptr))
    throw ConvError("class of a non-flat structure is undefined");
  OpClassRep<F> rep;
  rep.n = n;
  for (int j = 0; j < n; ++j)
    rep.coeffs.push_back(conv_scale(field, conv_weight_component(phi, j + 2),
                                    field.from_int(j + 1)));
  return rep;
}

/* Cycle check for the class representative: for j = 0..N-1,
     d(c_j) + sum_{a+b=j} [phi^{(1+a)}, c_b] = 0,  c_b = (b+1) phi^{(b+2)}. */
template <class F>
bool op_kaledin_cycle(const F& field, const NsCooperad<F>& C, const ConvElem<F>& phi,
                      int N) {
  if (!conv_is_mc(field, C, phi, nullptr)) return false;
  std::vector<ConvElem<F>> c;
  for (int b = 0; b < N; ++b)
    c.push_back(conv_scale(field, conv_weight_component(phi, b + 2),
                           field.from_int(b + 1)));
  for (int j = 0; j < N; ++j) {
    ConvElem<F> r = op_ambient_d(field, C, c[j]);
    for (int a = 0; a <= j; ++a) {
      ConvElem<F> br =
          conv_bracket(field, C, conv_weight_component(phi, 1 + a), c[j - a]);
      r = conv_add_scaled(field, r, br, field.one());
    }
    if (!r.is_zero()) return false;
  }
  return true;
}

template <class F>
struct OpClassVanishes {
  bool vanishes = false;
  std::vector<ConvElem<F>> witness;  // lambda_j, degree 0, j = 0..n-1
  RankData rank;
};

/* Solvability of the full primitive system
     d(lambda_j) + sum_{a+b=j} [phi^{(1+a)}, lambda_b] = (j+1) phi^{(j+2)}
   with degree-0 unknowns over all weights up to the cooperad cap. */
template <class F>
OpClassVanishes<F> op_class_vanishes(const F& field, const NsCooperad<F>& C,
                                     const ConvElem<F>& phi, int n) {
  if (!conv_is_mc(field, C, phi, nullptr))
    throw ConvError("class of a non-flat structure is undefined");
  const GradedModule& H = *phi.source;
  using Row = std::pair<int, ConvCoord>;
  using Col = std::pair<int, ConvCoord>;
  KeyedSystem<F, Row, Col> sys(field);
  std::vector<ConvElem<F>> phiw;
  for (int w = 0; w <= C.weight_cap; ++w)
    phiw.push_back(conv_weight_component(phi, w));
  for (int j = 0; j < n; ++j) {
    for (int w = 1; w <= C.weight_cap; ++w) {
      for (auto& coord : conv_coords(field, C, H, H, 0, w)) {
        std::map<ConvCoord, typename F::Elem> single{{coord, field.one()}};
        ConvElem<F> e = conv_from_coords(field, C, H, H, 0, single);
        ConvElem<F> img = op_ambient_d(field, C, e);
        for (auto& [rc, v] : conv_to_coords(field, img))
          sys.add_coeff({j, rc}, {j, coord}, v);
        for (int a = 0; j + a < n; ++a) {
          if (1 + a > C.weight_cap) break;
          ConvElem<F> br = conv_bracket(field, C, phiw[1 + a], e);
          for (auto& [rc, v] : conv_to_coords(field, br))
            sys.add_coeff({j + a, rc}, {j, coord}, v);
        }
      }
    }
    ConvElem<F> rhs = conv_scale(field, conv_weight_component(phi, j + 2),
                                 field.from_int(j + 1));
    for (auto& [rc, v] : conv_to_coords(field, rhs)) sys.add_rhs({j, rc}, v);
  }
  OpClassVanishes<F> out;
  auto sol = sys.solve(&out.rank);
  out.vanishes = sol.has_value();
  if (sol) {
    std::vector<std::map<ConvCoord, typename F::Elem>> buckets(n);
    for (auto& [col, v] : *sol)
      if (!field.is_zero(v)) buckets[col.first][col.second] = v;
    for (int j = 0; j < n; ++j)
      out.witness.push_back(conv_from_coords(field, C, H, H, 0, buckets[j]));
  }
  return out;
}

/* ---- Stepwise trivialization by isotopies ----------------------------- */

template <class F>
struct OpTrivializeResult {
  bool success = false;
  ConvElem<F> isotopy;        // accumulated, counit component = identity
  ConvElem<F> psi;            // transported structure
  int failed_step = 0;        // first k whose step system is unsolvable
  OpClassRep<F> failing_class;
  RankData failing_rank;
};

/* At step k the structure psi has no components in weights 2..k, and an
   isotopy 1 + lambda/k with lambda solving
     d(lambda) + [psi^{(1)}, lambda] = k * psi^{(k+1)}
   on the degree-0 weight-k block clears weight k+1 while fixing lower
   weights. Block solvability is equivalent to vanishing of the truncated
   class, a gauge invariant, so the greedy order loses nothing. */
template <class F>
OpTrivializeResult<F> operadic_trivialize(const F& field, const NsCooperad<F>& C,
                                          const ConvElem<F>& phi, int n) {
  if (!conv_is_mc(field, C, phi, nullptr))
    throw ConvError("cannot trivialize a non-flat structure");
  if (n + 1 > C.weight_cap)
    throw ConvError("trivialization to order " + std::to_string(n) +
                    " needs weight cap at least " + std::to_string(n + 1));
  require_factorials_up_to(field, n, "isotopy trivialization");
  const GradedModule& H = *phi.source;
  OpTrivializeResult<F> out;
  out.psi = phi;
  out.isotopy = conv_unit(field, C, H);
  for (int k = 1; k <= n; ++k) {
    ConvElem<F> target = conv_weight_component(out.psi, k + 1);
    if (target.is_zero()) continue;
    ConvElem<F> psi1 = conv_weight_component(out.psi, 1);
    KeyedSystem<F, ConvCoord, ConvCoord> sys(field);
    for (auto& coord : conv_coords(field, C, H, H, 0, k)) {
      std::map<ConvCoord, typename F::Elem> single{{coord, field.one()}};
      ConvElem<F> e = conv_from_coords(field, C, H, H, 0, single);
      ConvElem<F> img = op_ambient_d(field, C, e);
      img = conv_add_scaled(field, img, conv_bracket(field, C, psi1, e), field.one());
      for (auto& [rc, v] : conv_to_coords(field, img)) sys.add_coeff(rc, coord, v);
    }
    for (auto& [rc, v] : conv_to_coords(field, target))
      sys.add_rhs(rc, field.mul(v, field.from_int(k)));
    RankData rd;
    auto sol = sys.solve(&rd);
    if (!sol) {
      out.failed_step = k;
      out.failing_class = operadic_truncated_kaledin(field, C, out.psi, k);
      out.failing_rank = rd;
      return out;
    }
    std::map<ConvCoord, typename F::Elem> vals;
    typename F::Elem invk = field.inv(field.from_int(k));
    for (auto& [coord, v] : *sol)
      if (!field.is_zero(v)) vals[coord] = field.mul(v, invk);
    ConvElem<F> fk = conv_unit(field, C, H);
    ConvElem<F> lambda = conv_from_coords(field, C, H, H, 0, vals);
    fk = conv_add_scaled(field, fk, lambda, field.one());
    ConvElem<F> fk_inv = invert_infinity_iso(field, C, fk);
    ConvElem<F> moved = act_on_structure(field, C, fk, fk_inv, out.psi, nullptr, nullptr);
    if (!conv_weight_component(moved, k + 1).is_zero())
      throw std::logic_error("isotopy step failed to clear its weight");
    for (int w = 1; w <= k; ++w)
      if (!conv_eq(field, conv_weight_component(moved, w),
                   conv_weight_component(out.psi, w)))
        throw std::logic_error("isotopy step disturbed an already cleared weight");
    out.psi = moved;
    out.isotopy = conv_circ(field, C, fk, out.isotopy);
  }
  ConvElem<F> iso_inv = invert_infinity_iso(field, C, out.isotopy);
  if (!conv_eq(field,
               act_on_structure(field, C, out.isotopy, iso_inv, phi, nullptr, nullptr),
               out.psi))
    throw std::logic_error("accumulated isotopy disagrees with the stepwise result");
  out.success = true;
  return out;
}

/* ---- Verdicts ---------------------------------------------------------- */

template <class F>
struct OpFormalityVerdict {
  bool formal = false;
  int n = 0;
  OpTrivializeResult<F> detail;
};

/* A structure is gauge n-formal iff weights 2..n+1 can be cleared by an
   isotopy; the detail carries either the isotopy and the transported
   structure or the first obstruction with its certifying rank data. */
template <class F>
OpFormalityVerdict<F> decide_gauge_n_formal(const F& field, const NsCooperad<F>& C,
                                            const ConvElem<F>& phi, int n) {
  OpFormalityVerdict<F> v;
  v.n = n;
  v.detail = operadic_trivialize(field, C, phi, n);
  v.formal = v.detail.success;
  return v;
}

enum class BoundedVerdict { Formal, NotFormal, Undecided };

template <class F>
struct BoundedFormalityResult {
  BoundedVerdict verdict = BoundedVerdict::Undecided;
  int support_bound = 0;  // largest weight with a possibly nonzero obstruction slot
  std::string reason;
  OpFormalityVerdict<F> detail;
};

/* Decide full gauge formality over the binary-quadratic cooperad by
   bounding the weight support of the degree -1 part of the convolution
   algebra. A weight-w slot is nonzero iff some w+1 degrees of the module
   sum, plus w-1, back into the degree support; when the support of the
   module is nonnegative (or bounded above by -2) only finitely many
   weights survive, found exactly by a subset-sum scan. Otherwise the
   support is unbounded and the question is not decidable by truncation. */
template <class F>
BoundedFormalityResult<F> decide_gauge_formal_bounded(const F& field,
                                                      const NsCooperad<F>& C,
                                                      const ConvElem<F>& phi,
                                                      int weight_cap) {
  BoundedFormalityResult<F> out;
  if (field.characteristic() != 0) {
    out.reason = "full formality decisions require characteristic zero";
    return out;
  }
  const GradedModule& H = *phi.source;
  std::vector<int> supp;
  for (auto& [d, n] : H.dims)
    if (n > 0) supp.push_back(d);
  if (supp.empty()) {
    out.verdict = BoundedVerdict::Formal;
    out.reason = "zero module";
    return out;
  }
  int mn = supp.front(), mx = supp.back();
  if (mn < 0 && mx > -2) {
    // Degrees on both sides of the balance point: the candidate interval
    // [(w+1)mn + w - 1, (w+1)mx + w - 1] has its lower end drifting down
    // (mn <= -1) and its upper end drifting up or stalling (mx >= -1),
    // so it meets the support for every w and no truncation can rule the
    // tail out.
    out.reason = "unbounded weight support: degree support straddles -1";
    return out;
  }
  // Finite tail: find the largest weight whose slot is truly nonzero.
  // Interval bound first, exact subset-sum refinement second.
  int interval_bound = 0;
  for (int w = 1;; ++w) {
    long long lo = static_cast<long long>(w + 1) * mn + w - 1;
    long long hi = static_cast<long long>(w + 1) * mx + w - 1;
    if (lo > mx || hi < mn) {
      // Monotone drift: once the interval clears the support on the
      // drifting side it never returns.
      interval_bound = w - 1;
      break;
    }
    if (w > 4 * (std::abs(mn) + std::abs(mx) + 2)) {
      interval_bound = w;  // defensive; unreachable for monotone drift
      break;
    }
  }
  int W0 = 0;
  for (int w = 1; w <= interval_bound; ++w) {
    // Exact: can w+1 degrees from the support sum to t - (w - 1) for
    // some t in the support?
    std::set<long long> sums{0};
    for (int parts = 0; parts < w + 1; ++parts) {
      std::set<long long> next;
      for (long long s : sums)
        for (int d : supp) next.insert(s + d);
      sums.swap(next);
    }
    bool nonzero = false;
    for (int t : supp)
      if (sums.count(static_cast<long long>(t) - (w - 1))) nonzero = true;
    if (nonzero) W0 = w;
  }
  out.support_bound = W0;
  if (W0 <= 1) {
    out.verdict = BoundedVerdict::Formal;
    out.reason = "no obstruction slots above weight one";
    return out;
  }
  if (weight_cap < W0) {
    out.reason = "weight cap " + std::to_string(weight_cap) +
                 " below the obstruction support bound " + std::to_string(W0);
    return out;
  }
  out.detail = decide_gauge_n_formal(field, C, phi, W0 - 1);
  out.verdict = out.detail.formal ? BoundedVerdict::Formal : BoundedVerdict::NotFormal;
  out.reason = out.detail.formal
                   ? "all obstruction slots cleared up to the support bound"
                   : "obstruction at weight " + std::to_string(out.detail.detail.failed_step + 1);
  return out;
}

}  // namespace kaledin
