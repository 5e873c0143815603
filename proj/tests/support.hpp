#pragma once
// Shared helpers for the randomized property suites: deterministic
// generators for graded modules, squarezero differentials, sparse
// convolution elements, invertible morphisms and isotopies. Every
// generator draws from a caller-owned engine so suites stay
// reproducible run to run.

#include <kaledin/convolution.hpp>
#include <kaledin/infinity.hpp>

#include <map>
#include <random>
#include <set>
#include <vector>

namespace testsup {

using Rng = std::mt19937_64;

inline int rnd_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <class F>
typename F::Elem rnd_scalar(const F& field, Rng& rng) {
  // Small nonzero numerators keep rational blowup in check.
  int n = rnd_int(rng, -4, 4);
  if (n == 0) n = 1;
  return field.from_int(n);
}

/* A graded module with total dimension in [1, max_total], degrees drawn
   from [deg_lo, deg_hi]. */
inline kaledin::GradedModule rnd_module(Rng& rng, int max_total, int deg_lo, int deg_hi) {
  kaledin::GradedModule m;
  int total = rnd_int(rng, 1, max_total);
  for (int i = 0; i < total; ++i) m.dims[rnd_int(rng, deg_lo, deg_hi)] += 1;
  return m;
}

/* A degree -1 squarezero map built from a partial matching on basis
   elements: each element is used as a source or a target at most once,
   so d o d = 0 holds structurally. */
template <class F>
kaledin::LinMap<F> rnd_matching_diff(const F& field, const kaledin::GradedModule& m, Rng& rng) {
  kaledin::LinMap<F> d;
  d.degree = -1;
  std::vector<kaledin::BasisElem> basis;
  for (auto& [deg, n] : m.dims)
    for (int i = 0; i < n; ++i) basis.push_back({deg, i});
  std::vector<bool> used(basis.size(), false);
  for (size_t i = 0; i < basis.size(); ++i) {
    if (used[i] || rnd_int(rng, 0, 1) == 0) continue;
    for (size_t j = 0; j < basis.size(); ++j) {
      if (used[j] || j == i || basis[j].deg != basis[i].deg - 1) continue;
      d.add_entry(field, basis[i], basis[j], rnd_scalar(field, rng));
      used[i] = used[j] = true;
      break;
    }
  }
  return d;
}

/* Sparse element of Conv(M, M): for each positive weight up to the cap,
   a few random coordinates. */
template <class F>
kaledin::ConvElem<F> rnd_conv(const F& field, const kaledin::NsCooperad<F>& C,
                              const kaledin::GradedModule& m, int degree, Rng& rng,
                              int per_weight = 2) {
  std::map<kaledin::ConvCoord, typename F::Elem> vals;
  for (int w = 1; w <= C.weight_cap; ++w) {
    auto coords = kaledin::conv_coords(field, C, m, m, degree, w);
    if (coords.empty()) continue;
    for (int k = 0; k < per_weight; ++k)
      vals[coords[static_cast<size_t>(rnd_int(rng, 0, static_cast<int>(coords.size()) - 1))]] =
          rnd_scalar(field, rng);
  }
  return kaledin::conv_from_coords(field, C, m, m, degree, vals);
}

/* Isotopy 1 + (positive-weight tail). */
template <class F>
kaledin::ConvElem<F> rnd_isotopy(const F& field, const kaledin::NsCooperad<F>& C,
                                 const kaledin::GradedModule& m, Rng& rng,
                                 int per_weight = 2) {
  kaledin::ConvElem<F> f = rnd_conv(field, C, m, 0, rng, per_weight);
  kaledin::ConvElem<F> unit = kaledin::conv_unit(field, C, m);
  return kaledin::conv_add_scaled(field, f, unit, field.one());
}

/* Degree-zero element whose counit component is invertible: a random
   automorphism plus a positive-weight tail. When a differential is
   supplied the automorphism commutes with it (matched pairs share their
   scale; elements the matching skips may also hit same-degree cycles),
   making the element a morphism of complexes; it stays invertible
   because the extra entries only point from skipped columns to target
   rows. */
template <class F>
kaledin::ConvElem<F> rnd_invertible(const F& field, const kaledin::NsCooperad<F>& C,
                                    const kaledin::GradedModule& m, Rng& rng,
                                    int per_weight = 2,
                                    const kaledin::LinMap<F>* commute_with = nullptr) {
  kaledin::ConvElem<F> f = rnd_conv(field, C, m, 0, rng, per_weight);
  kaledin::Tensor<F>& u = f.comp_mut(C, kaledin::CoopElem::unit());
  u.arity = 1;
  u.degree = 0;
  std::map<kaledin::BasisElem, kaledin::BasisElem> match;
  std::set<kaledin::BasisElem> targets;
  if (commute_with)
    for (auto& [src, col] : commute_with->cols)
      for (auto& [dst, v] : col)
        if (!field.is_zero(v)) {
          match.emplace(src, dst);
          targets.insert(dst);
        }
  for (auto& [deg, n] : m.dims)
    for (int i = 0; i < n; ++i) {
      kaledin::BasisElem e{deg, i};
      if (targets.count(e)) continue;  // scaled along with its source
      typename F::Elem a = rnd_scalar(field, rng);
      u.add_entry(field, {e}, e, a);
      auto it = match.find(e);
      if (it != match.end()) {
        u.add_entry(field, {it->second}, it->second, a);
      } else if (commute_with) {
        for (auto& t : targets)
          if (t.deg == deg && rnd_int(rng, 0, 1) == 0)
            u.add_entry(field, {e}, t, rnd_scalar(field, rng));
      }
    }
  return f;
}

/* The homotopy-associative governing cooperad extended by one weight-2
   binary generator nu with d_C(nu) = mu_2 and trivial decompositions;
   the smallest fixture whose internal differential is nonzero. */
template <class F>
kaledin::NsCooperad<F> cooperad_with_dc(const F& field, int cap) {
  kaledin::NsCooperad<F> C = kaledin::NsCooperad<F>::as_koszul(field, cap);
  C.spaces[{2, 2}] = {2};
  kaledin::CoopElem nu{2, 2, 0}, mu2{1, 2, 0};
  C.dC[nu] = {{mu2, field.one()}};
  C.validate(field);
  return C;
}

/* Validated fixtures are cached per (characteristic, cap, extension):
   the randomized suites draw thousands of instances and revalidation
   dominates otherwise. */
template <class F>
const kaledin::NsCooperad<F>& fixture_cooperad(const F& field, int cap, bool with_dc) {
  static std::map<std::tuple<long long, int, bool>, kaledin::NsCooperad<F>> cache;
  auto key = std::make_tuple(field.characteristic(), cap, with_dc);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, with_dc ? cooperad_with_dc(field, cap)
                                    : kaledin::NsCooperad<F>::as_koszul(field, cap))
             .first;
  return it->second;
}

}  // namespace testsup
