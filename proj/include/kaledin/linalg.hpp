#pragma once
// Exact dense linear algebra over a field handle: reduced row echelon
// form, linear solving with a deterministic witness convention (free
// variables set to zero), kernel bases, ranks and inverses. A keyed
// system builder assembles graded linear systems whose rows and columns
// are indexed by arbitrary ordered keys.

#include <kaledin/field.hpp>

#include <map>
#include <optional>
#include <vector>

namespace kaledin {

template <class F>
struct DenseMatrix {
  using Elem = typename F::Elem;
  int rows = 0;
  int cols = 0;
  std::vector<Elem> a;  // row-major, rows*cols entries

  DenseMatrix() = default;
  DenseMatrix(const F& field, int r, int c)
      : rows(r), cols(c), a(static_cast<size_t>(r) * c, field.zero()) {}

  Elem& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  const Elem& at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

template <class F>
DenseMatrix<F> identity_matrix(const F& field, int n) {
  DenseMatrix<F> m(field, n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = field.one();
  return m;
}

template <class F>
DenseMatrix<F> mat_mul(const F& field, const DenseMatrix<F>& x, const DenseMatrix<F>& y) {
  DenseMatrix<F> r(field, x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      if (field.is_zero(x.at(i, k))) continue;
      for (int j = 0; j < y.cols; ++j)
        r.at(i, j) = field.add(r.at(i, j), field.mul(x.at(i, k), y.at(k, j)));
    }
  return r;
}

template <class F>
struct RrefResult {
  DenseMatrix<F> mat;              // the reduced echelon form
  std::vector<int> pivot_cols;     // pivot column of row 0,1,...,rank-1
  std::vector<int> pivot_row_of;   // per column: its pivot row, or -1 if free
  int rank = 0;
};

/* Reduced row echelon form; pivots chosen as the first nonzero entry in
   column order, lowest row index first, so the result is canonical. */
template <class F>
RrefResult<F> rref(const F& field, DenseMatrix<F> m) {
  RrefResult<F> res;
  res.pivot_row_of.assign(m.cols, -1);
  int r = 0;
  for (int c = 0; c < m.cols && r < m.rows; ++c) {
    int pivot = -1;
    for (int i = r; i < m.rows; ++i)
      if (!field.is_zero(m.at(i, c))) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    if (pivot != r)
      for (int j = 0; j < m.cols; ++j) std::swap(m.at(pivot, j), m.at(r, j));
    typename F::Elem s = field.inv(m.at(r, c));
    for (int j = c; j < m.cols; ++j) m.at(r, j) = field.mul(m.at(r, j), s);
    for (int i = 0; i < m.rows; ++i) {
      if (i == r || field.is_zero(m.at(i, c))) continue;
      typename F::Elem f = m.at(i, c);
      for (int j = c; j < m.cols; ++j)
        m.at(i, j) = field.sub(m.at(i, j), field.mul(f, m.at(r, j)));
    }
    res.pivot_cols.push_back(c);
    res.pivot_row_of[c] = r;
    ++r;
  }
  res.rank = r;
  res.mat = std::move(m);
  return res;
}

template <class F>
int rank(const F& field, const DenseMatrix<F>& m) {
  return rref(field, m).rank;
}

/* Solve A x = b. Returns the echelon-canonical witness: free variables
   are zero, pivot variables read off the reduced augmented system. */
template <class F>
std::optional<std::vector<typename F::Elem>> solve_linear(const F& field, const DenseMatrix<F>& a,
                                                          const std::vector<typename F::Elem>& b) {
  DenseMatrix<F> aug(field, a.rows, a.cols + 1);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) aug.at(i, j) = a.at(i, j);
    aug.at(i, a.cols) = b[i];
  }
  RrefResult<F> r = rref(field, std::move(aug));
  // Inconsistent iff some pivot sits in the appended column.
  if (r.pivot_row_of[a.cols] >= 0) return std::nullopt;
  std::vector<typename F::Elem> x(a.cols, field.zero());
  for (int c = 0; c < a.cols; ++c)
    if (r.pivot_row_of[c] >= 0) x[c] = r.mat.at(r.pivot_row_of[c], a.cols);
  return x;
}

template <class F>
bool image_membership(const F& field, const DenseMatrix<F>& a,
                      const std::vector<typename F::Elem>& b) {
  return solve_linear(field, a, b).has_value();
}

/* Canonical kernel basis: one vector per free column, with -1 scaled
   echelon entries above it. */
template <class F>
std::vector<std::vector<typename F::Elem>> kernel_basis(const F& field, const DenseMatrix<F>& a) {
  RrefResult<F> r = rref(field, a);
  std::vector<std::vector<typename F::Elem>> basis;
  for (int c = 0; c < a.cols; ++c) {
    if (r.pivot_row_of[c] >= 0) continue;
    std::vector<typename F::Elem> v(a.cols, field.zero());
    v[c] = field.one();
    for (int pc = 0; pc < a.cols; ++pc)
      if (r.pivot_row_of[pc] >= 0) v[pc] = field.neg(r.mat.at(r.pivot_row_of[pc], c));
    basis.push_back(std::move(v));
  }
  return basis;
}

template <class F>
std::optional<DenseMatrix<F>> inverse(const F& field, const DenseMatrix<F>& m) {
  if (m.rows != m.cols) return std::nullopt;
  int n = m.rows;
  DenseMatrix<F> aug(field, n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug.at(i, j) = m.at(i, j);
    aug.at(i, n + i) = field.one();
  }
  RrefResult<F> r = rref(field, std::move(aug));
  if (r.rank < n || r.pivot_cols.back() >= n) {
    // rank deficiency in the left block
    for (int c = 0; c < n; ++c)
      if (r.pivot_row_of[c] < 0) return std::nullopt;
  }
  DenseMatrix<F> inv(field, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv.at(i, j) = r.mat.at(i, n + j);
  return inv;
}

/* Shape and rank of a solved system; the certifying data for both a
   solvable and an unsolvable outcome. */
struct RankData {
  int rows = 0, cols = 0, rank = 0, rank_augmented = 0;
};

/* Linear system with rows and columns indexed by ordered keys; used to
   flatten graded equations into one exact solve. Unknown keys are added
   on first touch, in deterministic key order at build time. */
template <class F, class RowKey, class ColKey>
struct KeyedSystem {
  using Elem = typename F::Elem;

  const F& field;
  std::map<RowKey, std::map<ColKey, Elem>> rows;
  std::map<RowKey, Elem> rhs;
  std::map<ColKey, bool> cols;

  explicit KeyedSystem(const F& f) : field(f) {}

  void add_coeff(const RowKey& r, const ColKey& c, const Elem& v) {
    if (field.is_zero(v)) return;
    cols[c] = true;
    auto& row = rows[r];
    auto it = row.find(c);
    if (it == row.end())
      row.emplace(c, v);
    else {
      it->second = field.add(it->second, v);
      if (field.is_zero(it->second)) row.erase(it);
    }
  }

  void add_rhs(const RowKey& r, const Elem& v) {
    if (field.is_zero(v)) return;
    auto it = rhs.find(r);
    if (it == rhs.end())
      rhs.emplace(r, v);
    else {
      it->second = field.add(it->second, v);
      if (field.is_zero(it->second)) rhs.erase(it);
    }
  }

  /* Echelon-canonical solution as a key-indexed map (zero entries left
     out), or nullopt with rank data showing inconsistency. */
  std::optional<std::map<ColKey, Elem>> solve(RankData* data = nullptr) const {
    std::map<ColKey, int> col_idx;
    int nc = 0;
    for (auto& [c, _] : cols) col_idx[c] = nc++;
    // Rows carrying a right-hand side but never touched by a coefficient
    // must still appear (0 = b is a contradiction when b != 0).
    std::map<RowKey, bool> all_rows;
    for (auto& [r, _] : rows) all_rows[r] = true;
    for (auto& [r, _] : rhs) all_rows[r] = true;
    int nr = static_cast<int>(all_rows.size());
    DenseMatrix<F> a(field, nr, nc);
    std::vector<Elem> b(nr, field.zero());
    int ri = 0;
    for (auto& [rk, _] : all_rows) {
      auto it = rows.find(rk);
      if (it != rows.end())
        for (auto& [ck, v] : it->second) a.at(ri, col_idx[ck]) = v;
      auto bt = rhs.find(rk);
      if (bt != rhs.end()) b[ri] = bt->second;
      ++ri;
    }
    auto x = solve_linear(field, a, b);
    if (data) {
      data->rows = nr;
      data->cols = nc;
      DenseMatrix<F> aug(field, nr, nc + 1);
      for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nc; ++j) aug.at(i, j) = a.at(i, j);
        aug.at(i, nc) = b[i];
      }
      data->rank = rank(field, a);
      data->rank_augmented = rank(field, aug);
    }
    if (!x) return std::nullopt;
    std::map<ColKey, Elem> out;
    for (auto& [ck, ci] : col_idx)
      if (!field.is_zero((*x)[ci])) out[ck] = (*x)[ci];
    return out;
  }
};

}  // namespace kaledin
