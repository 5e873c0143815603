#pragma once
// Non-symmetric weight-graded conilpotent cooperads presented by explicit
// structure constants: graded basis per (weight, arity), reduced
// infinitesimal decomposition, full decomposition, and an optional
// internal differential of bidegree (weight -1, homological degree -1).
// Counit terms of both decompositions are implicit (their coefficients
// are forced to one by the counit axioms), so stored terms always have a
// positive-weight top and, for the full decomposition, at least one
// positive-weight lower factor.
//
// The builtin cooperad governing strictly unital homotopy-associative
// structures has one basis element mu_n per arity n >= 2, of weight and
// internal degree n-1. Its decomposition signs are locked here once:
//   delta1(mu_n)  +->  sum over n = p+q+r of (-1)^{r(q+1)} (mu_{p+1+r} ; mu_q at slot p+1)
//   delta(mu_n)   +->  matching full-splitting signs (see as_koszul)
// and validated by the coassociativity/compatibility checks plus the
// equivalence of the convolution flatness equation with the shifted-world
// relation tests.

#include <kaledin/field.hpp>
#include <kaledin/graded.hpp>

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kaledin {

struct CoopElem {
  int weight = 0;
  int arity = 1;
  int idx = 0;
  auto operator<=>(const CoopElem&) const = default;
  bool is_unit() const { return weight == 0; }
  static CoopElem unit() { return {0, 1, 0}; }
  std::string str() const {
    return "(w" + std::to_string(weight) + ",a" + std::to_string(arity) + ",#" +
           std::to_string(idx) + ")";
  }
};

template <class F>
struct Delta1Term {
  CoopElem left;
  int pos = 1;  // 1-based input slot of the left factor
  CoopElem right;
  typename F::Elem coeff;
};

template <class F>
struct DeltaTerm {
  CoopElem top;
  std::vector<CoopElem> lowers;  // size = top.arity; may contain units
  typename F::Elem coeff;
};

struct CooperadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
struct NsCooperad {
  using Elem = typename F::Elem;

  int weight_cap = 0;
  int arity_cap = 0;
  // (weight, arity) -> internal degrees of the basis elements there.
  std::map<std::pair<int, int>, std::vector<int>> spaces;
  std::map<CoopElem, std::vector<Delta1Term<F>>> delta1;
  std::map<CoopElem, std::vector<DeltaTerm<F>>> delta;
  std::map<CoopElem, std::vector<std::pair<CoopElem, Elem>>> dC;

  bool has_elem(CoopElem c) const {
    if (c.is_unit()) return c.arity == 1 && c.idx == 0;
    auto it = spaces.find({c.weight, c.arity});
    return it != spaces.end() && c.idx >= 0 && c.idx < static_cast<int>(it->second.size());
  }

  int degree_of(CoopElem c) const {
    if (c.is_unit()) return 0;
    auto it = spaces.find({c.weight, c.arity});
    if (it == spaces.end() || c.idx >= static_cast<int>(it->second.size()))
      throw CooperadError("unknown cooperad basis element " + c.str());
    return it->second[c.idx];
  }

  /* All positive-weight basis elements in deterministic order. */
  std::vector<CoopElem> elements() const {
    std::vector<CoopElem> out;
    for (auto& [wa, degs] : spaces)
      for (int i = 0; i < static_cast<int>(degs.size()); ++i)
        out.push_back({wa.first, wa.second, i});
    return out;
  }

  std::vector<CoopElem> elements_of_weight(int w) const {
    std::vector<CoopElem> out;
    for (auto& [wa, degs] : spaces)
      if (wa.first == w)
        for (int i = 0; i < static_cast<int>(degs.size()); ++i)
          out.push_back({wa.first, wa.second, i});
    return out;
  }

  const std::vector<Delta1Term<F>>& delta1_of(CoopElem c) const {
    static const std::vector<Delta1Term<F>> empty;
    auto it = delta1.find(c);
    return it == delta1.end() ? empty : it->second;
  }
  const std::vector<DeltaTerm<F>>& delta_of(CoopElem c) const {
    static const std::vector<DeltaTerm<F>> empty;
    auto it = delta.find(c);
    return it == delta.end() ? empty : it->second;
  }
  const std::vector<std::pair<CoopElem, Elem>>& dC_of(CoopElem c) const {
    static const std::vector<std::pair<CoopElem, Elem>> empty;
    auto it = dC.find(c);
    return it == dC.end() ? empty : it->second;
  }

  /* Full decomposition including the implicit counit terms. */
  std::vector<DeltaTerm<F>> delta_full(const F& field, CoopElem c) const {
    std::vector<DeltaTerm<F>> out;
    if (c.is_unit()) {
      out.push_back({CoopElem::unit(), {CoopElem::unit()}, field.one()});
      return out;
    }
    out.push_back({CoopElem::unit(), {c}, field.one()});
    out.push_back({c, std::vector<CoopElem>(c.arity, CoopElem::unit()), field.one()});
    for (auto& t : delta_of(c)) out.push_back(t);
    return out;
  }

  void validate(const F& field) const;

  static NsCooperad as_koszul(const F& field, int cap);
};

namespace detail {

/* Canonical two-level expansion key: (top; mids; leaves). Mids hang off
   the top's slots in order; leaves hang off the mids' slots in order. */
struct TwoLevelKey {
  CoopElem top;
  std::vector<CoopElem> mids;
  std::vector<CoopElem> leaves;
  auto operator<=>(const TwoLevelKey&) const = default;
};

}  // namespace detail

template <class F>
void NsCooperad<F>::validate(const F& field) const {
  // Structural checks.
  for (auto& [wa, degs] : spaces) {
    if (wa.first < 1) throw CooperadError("stored space with weight < 1");
    if (wa.second < 1) throw CooperadError("stored space with arity < 1");
    if (wa.first > weight_cap || wa.second > arity_cap)
      throw CooperadError("space beyond declared caps");
    if (degs.empty()) throw CooperadError("empty basis list in spaces table");
  }
  auto check_elem = [&](CoopElem c, const std::string& where) {
    if (!has_elem(c)) throw CooperadError("unknown element " + c.str() + " in " + where);
  };
  for (auto& [c, terms] : delta1) {
    check_elem(c, "delta1 key");
    for (auto& t : terms) {
      check_elem(t.left, "delta1 of " + c.str());
      check_elem(t.right, "delta1 of " + c.str());
      if (t.left.is_unit() || t.right.is_unit())
        throw CooperadError("delta1 of " + c.str() + " stores a counit factor; those are implicit");
      if (t.pos < 1 || t.pos > t.left.arity)
        throw CooperadError("delta1 of " + c.str() + " has slot out of range");
      if (t.left.weight + t.right.weight != c.weight)
        throw CooperadError("delta1 of " + c.str() + " breaks weight additivity");
      if (t.left.arity + t.right.arity - 1 != c.arity)
        throw CooperadError("delta1 of " + c.str() + " breaks arity bookkeeping");
      if (degree_of(t.left) + degree_of(t.right) != degree_of(c))
        throw CooperadError("delta1 of " + c.str() + " breaks degree additivity");
    }
  }
  for (auto& [c, terms] : delta) {
    check_elem(c, "delta key");
    for (auto& t : terms) {
      check_elem(t.top, "delta of " + c.str());
      if (t.top.is_unit()) throw CooperadError("delta of " + c.str() + " stores a counit top");
      if (static_cast<int>(t.lowers.size()) != t.top.arity)
        throw CooperadError("delta of " + c.str() + " has lower count != top arity");
      int w = t.top.weight, a = 0, dg = degree_of(t.top);
      bool nontrivial = false;
      for (auto& l : t.lowers) {
        check_elem(l, "delta of " + c.str());
        w += l.weight;
        a += l.arity;
        dg += degree_of(l);
        if (!l.is_unit()) nontrivial = true;
      }
      if (!nontrivial)
        throw CooperadError("delta of " + c.str() + " stores the implicit all-counit term");
      if (w != c.weight) throw CooperadError("delta of " + c.str() + " breaks weight additivity");
      if (a != c.arity) throw CooperadError("delta of " + c.str() + " breaks arity bookkeeping");
      if (dg != degree_of(c)) throw CooperadError("delta of " + c.str() + " breaks degree additivity");
    }
  }
  for (auto& [c, terms] : dC) {
    check_elem(c, "differential key");
    for (auto& [img, v] : terms) {
      (void)v;
      check_elem(img, "differential of " + c.str());
      if (img.weight != c.weight - 1 || img.arity != c.arity)
        throw CooperadError("differential of " + c.str() + " must drop weight by one, keep arity");
      if (degree_of(img) != degree_of(c) - 1)
        throw CooperadError("differential of " + c.str() + " must drop degree by one");
    }
  }

  // d^2 = 0.
  for (auto& [c, terms] : dC) {
    std::map<CoopElem, Elem> sq;
    for (auto& [mid, v] : terms)
      for (auto& [img, w] : dC_of(mid)) {
        auto it = sq.find(img);
        Elem add = field.mul(v, w);
        if (it == sq.end())
          sq.emplace(img, add);
        else {
          it->second = field.add(it->second, add);
          if (field.is_zero(it->second)) sq.erase(it);
        }
      }
    if (!sq.empty()) throw CooperadError("internal differential does not square to zero at " + c.str());
  }

  // delta1 must agree with the single-nontrivial-slot part of delta.
  for (auto c : elements()) {
    std::map<std::tuple<CoopElem, int, CoopElem>, Elem> from_delta;
    for (auto& t : delta_of(c)) {
      int nontrivial = 0, pos = 0;
      for (int i = 0; i < static_cast<int>(t.lowers.size()); ++i)
        if (!t.lowers[i].is_unit()) {
          ++nontrivial;
          pos = i + 1;
        }
      if (nontrivial != 1) continue;
      auto key = std::make_tuple(t.top, pos, t.lowers[pos - 1]);
      auto it = from_delta.find(key);
      if (it == from_delta.end())
        from_delta.emplace(key, t.coeff);
      else
        it->second = field.add(it->second, t.coeff);
    }
    std::map<std::tuple<CoopElem, int, CoopElem>, Elem> from_delta1;
    for (auto& t : delta1_of(c)) {
      auto key = std::make_tuple(t.left, t.pos, t.right);
      auto it = from_delta1.find(key);
      if (it == from_delta1.end())
        from_delta1.emplace(key, t.coeff);
      else
        it->second = field.add(it->second, t.coeff);
    }
    auto normalize = [&](std::map<std::tuple<CoopElem, int, CoopElem>, Elem>& m) {
      for (auto it = m.begin(); it != m.end();)
        it = field.is_zero(it->second) ? m.erase(it) : std::next(it);
    };
    normalize(from_delta);
    normalize(from_delta1);
    if (from_delta.size() != from_delta1.size())
      throw CooperadError("infinitesimal decomposition disagrees with full decomposition at " + c.str());
    for (auto& [k, v] : from_delta1) {
      auto it = from_delta.find(k);
      if (it == from_delta.end() || !field.eq(it->second, v))
        throw CooperadError("infinitesimal decomposition disagrees with full decomposition at " + c.str());
    }
  }

  // Coassociativity of the full decomposition, computed on canonical
  // two-level expansions. Expanding the top slot produces canonical
  // order directly; expanding the lower slots needs the reordering sign
  // of moving each later mid past earlier leaf blocks.
  for (auto c : elements()) {
    std::map<detail::TwoLevelKey, Elem> lhs, rhs;
    auto add_term = [&](std::map<detail::TwoLevelKey, Elem>& m, detail::TwoLevelKey k, Elem v) {
      if (field.is_zero(v)) return;
      auto it = m.find(k);
      if (it == m.end())
        m.emplace(std::move(k), v);
      else {
        it->second = field.add(it->second, v);
        if (field.is_zero(it->second)) m.erase(it);
      }
    };
    for (auto& t : delta_full(field, c)) {
      // (delta o id): expand the top factor.
      for (auto& s : delta_full(field, t.top))
        add_term(lhs, {s.top, s.lowers, t.lowers}, field.mul(t.coeff, s.coeff));
      // (id o delta): expand every lower factor.
      struct Partial {
        std::vector<CoopElem> mids;
        std::vector<std::vector<CoopElem>> leaf_blocks;
        Elem coeff;
      };
      std::vector<Partial> parts{{{}, {}, t.coeff}};
      for (auto& l : t.lowers) {
        std::vector<Partial> next;
        for (auto& p : parts)
          for (auto& s : delta_full(field, l)) {
            Partial np = p;
            // Move the new mid past the leaf blocks already placed.
            int moved = 0;
            for (auto& blk : np.leaf_blocks)
              for (auto& lf : blk) moved += degree_of(lf);
            Elem cv = field.mul(np.coeff, s.coeff);
            if ((degree_of(s.top) * moved) & 1) cv = field.neg(cv);
            np.coeff = cv;
            np.mids.push_back(s.top);
            np.leaf_blocks.push_back(s.lowers);
            next.push_back(std::move(np));
          }
        parts = std::move(next);
      }
      for (auto& p : parts) {
        std::vector<CoopElem> leaves;
        for (auto& blk : p.leaf_blocks) leaves.insert(leaves.end(), blk.begin(), blk.end());
        add_term(rhs, {t.top, p.mids, leaves}, p.coeff);
      }
    }
    if (lhs.size() != rhs.size())
      throw CooperadError("full decomposition is not coassociative at " + c.str());
    for (auto& [k, v] : lhs) {
      auto it = rhs.find(k);
      if (it == rhs.end() || !field.eq(it->second, v))
        throw CooperadError("full decomposition is not coassociative at " + c.str());
    }
  }

  // Co-Leibniz: delta(d c) = (d on top + d on each lower, Koszul) delta(c).
  for (auto c : elements()) {
    std::map<detail::TwoLevelKey, Elem> lhs, rhs;  // reuse key with empty mids: (top; -; lowers)
    auto add_term = [&](std::map<detail::TwoLevelKey, Elem>& m, detail::TwoLevelKey k, Elem v) {
      if (field.is_zero(v)) return;
      auto it = m.find(k);
      if (it == m.end())
        m.emplace(std::move(k), v);
      else {
        it->second = field.add(it->second, v);
        if (field.is_zero(it->second)) m.erase(it);
      }
    };
    for (auto& [img, v] : dC_of(c))
      for (auto& t : delta_full(field, img))
        add_term(lhs, {t.top, {}, t.lowers}, field.mul(v, t.coeff));
    for (auto& t : delta_full(field, c)) {
      for (auto& [timg, v] : dC_of(t.top))
        add_term(rhs, {timg, {}, t.lowers}, field.mul(t.coeff, v));
      int moved = degree_of(t.top);
      for (int i = 0; i < static_cast<int>(t.lowers.size()); ++i) {
        for (auto& [limg, v] : dC_of(t.lowers[i])) {
          auto lw = t.lowers;
          lw[i] = limg;
          Elem cv = field.mul(t.coeff, v);
          if (moved & 1) cv = field.neg(cv);
          add_term(rhs, {t.top, {}, lw}, cv);
        }
        moved += degree_of(t.lowers[i]);
      }
    }
    if (lhs.size() != rhs.size())
      throw CooperadError("internal differential is not a codifferential at " + c.str());
    for (auto& [k, v] : lhs) {
      auto it = rhs.find(k);
      if (it == rhs.end() || !field.eq(it->second, v))
        throw CooperadError("internal differential is not a codifferential at " + c.str());
    }
  }
}

/* Builtin cooperad for homotopy-associative structures, truncated at the
   given weight cap: one generator per arity n in [2, cap+1], of weight
   and internal degree n-1, zero internal differential. */
template <class F>
NsCooperad<F> NsCooperad<F>::as_koszul(const F& field, int cap) {
  NsCooperad<F> C;
  C.weight_cap = cap;
  C.arity_cap = cap + 1;
  auto mu = [](int n) { return CoopElem{n - 1, n, 0}; };
  for (int n = 2; n <= cap + 1; ++n) C.spaces[{n - 1, n}] = {n - 1};
  // eta(j) = j(j-1)/2 mod 2, the basis-normalization exponent.
  auto eta = [](int j) { return (j * (j - 1) / 2) & 1; };
  for (int n = 2; n <= cap + 1; ++n) {
    // Infinitesimal: n = p + q + r, inner factor arity q at slot p+1.
    std::vector<Delta1Term<F>> d1;
    for (int q = 2; q <= n - 1; ++q)
      for (int p = 0; p + q <= n; ++p) {
        int r = n - p - q;
        if (p + 1 + r < 2) continue;
        typename F::Elem s = ((r * (q + 1)) & 1) ? field.neg(field.one()) : field.one();
        d1.push_back({mu(p + 1 + r), p + 1, mu(q), s});
      }
    if (!d1.empty()) C.delta1[mu(n)] = std::move(d1);
    // Full: compositions n = i_1 + ... + i_k, k >= 2, not all ones.
    std::vector<DeltaTerm<F>> df;
    std::vector<int> comp;
    auto emit = [&](const std::vector<int>& is) {
      int k = static_cast<int>(is.size());
      bool allones = true;
      for (int v : is)
        if (v != 1) allones = false;
      if (allones || k < 2 || k > n - 1) return;
      int exp = eta(n) + eta(k);
      int prefix = 0;
      for (int l = 0; l < k; ++l) {
        if (l > 0) exp += (1 - is[l]) * prefix;
        exp += eta(is[l]);
        prefix += is[l];
      }
      std::vector<CoopElem> lowers;
      for (int v : is) lowers.push_back(v == 1 ? CoopElem::unit() : mu(v));
      typename F::Elem s = (exp & 1) ? field.neg(field.one()) : field.one();
      df.push_back({mu(k), std::move(lowers), s});
    };
    std::function<void(int)> rec = [&](int rem) {
      if (rem == 0) {
        emit(comp);
        return;
      }
      for (int i = 1; i <= rem; ++i) {
        comp.push_back(i);
        rec(rem - i);
        comp.pop_back();
      }
    };
    rec(n);
    if (!df.empty()) C.delta[mu(n)] = std::move(df);
  }
  C.validate(field);
  return C;
}

}  // namespace kaledin
