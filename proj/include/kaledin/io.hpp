#pragma once
// Problem files and certificates. A problem file is a JSON document
// carrying a graded module, an optional differential, a structure given
// by its operations, and optionally an inline cooperad, a degree-zero
// map, and a contraction. Certificates are JSON documents that record a
// verdict together with the exact data needed to recheck it against the
// problem file: an isotopy, a non-exact obstruction cycle with its rank
// certificate, or a criterion report. Every parse error names the JSON
// path it occurred at.

#include <kaledin/ainf.hpp>
#include <kaledin/criteria.hpp>
#include <kaledin/op_kaledin.hpp>

#include <json.hpp>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kaledin {

using Json = nlohmann::json;

inline constexpr const char* kToolTag = "kaledin 1.0.0";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void io_fail(const std::string& where, const std::string& what) {
  throw IoError(where.empty() ? what : where + ": " + what);
}

/* ---- JSON accessors ------------------------------------------------------ */

inline const Json& io_get(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) io_fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) io_fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

inline int io_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) io_fail(where, "expected an integer");
  auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    io_fail(where, "integer out of range");
  return static_cast<int>(v);
}

inline bool io_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) io_fail(where, "expected a boolean");
  return j.get<bool>();
}

inline std::string io_string(const Json& j, const std::string& where) {
  if (!j.is_string()) io_fail(where, "expected a string");
  return j.get<std::string>();
}

/* Integers that may exceed 64 bits travel as decimal strings. */
inline BigInt io_bigint(const Json& j, const std::string& where) {
  if (j.is_number_integer()) return BigInt(j.get<std::int64_t>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::size_t k = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    if (k == s.size()) io_fail(where, "malformed integer literal \"" + s + "\"");
    for (; k < s.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(s[k])))
        io_fail(where, "malformed integer literal \"" + s + "\"");
    return BigInt(s);
  }
  io_fail(where, "expected an integer (number or decimal string)");
}

inline Json bigint_to_json(const BigInt& v) {
  static const BigInt lo = std::numeric_limits<std::int64_t>::min();
  static const BigInt hi = std::numeric_limits<std::int64_t>::max();
  if (v >= lo && v <= hi) return Json(v.convert_to<std::int64_t>());
  return Json(v.str());
}

inline long long io_to_ll(const BigInt& v, const std::string& where) {
  static const BigInt lo = std::numeric_limits<long long>::min();
  static const BigInt hi = std::numeric_limits<long long>::max();
  if (v < lo || v > hi) io_fail(where, "integer out of range");
  return v.convert_to<long long>();
}

/* "n" or "n/d" with optional sign, normalized so the denominator is
   positive and the fraction is reduced. */
inline std::pair<BigInt, BigInt> parse_fraction(const std::string& s, const std::string& where) {
  auto slash = s.find('/');
  Json njs = Json(slash == std::string::npos ? s : s.substr(0, slash));
  Json djs = Json(slash == std::string::npos ? std::string("1") : s.substr(slash + 1));
  BigInt num = io_bigint(njs, where);
  BigInt den = io_bigint(djs, where);
  if (den == 0) io_fail(where, "zero denominator");
  BigRat r(num, den);
  return {boost::multiprecision::numerator(r), boost::multiprecision::denominator(r)};
}

/* ---- Field element codec ------------------------------------------------- */

inline std::pair<BigInt, BigInt> coeff_parts(const Rationals&, const BigRat& v) {
  return {boost::multiprecision::numerator(v), boost::multiprecision::denominator(v)};
}

inline std::pair<BigInt, BigInt> coeff_parts(const PrimeField&, std::uint64_t v) {
  return {BigInt(v), BigInt(1)};
}

template <class F>
typename F::Elem coeff_from_parts(const F& field, const BigInt& num, const BigInt& den,
                                  const std::string& where) {
  if (den == 0) io_fail(where, "zero denominator");
  return field.from_fraction(num, den);
}

/* ---- Graded modules ------------------------------------------------------ */

inline GradedModule module_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) io_fail(where, "expected an object mapping degree to dimension");
  GradedModule M;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const std::string kw = where + "[\"" + key + "\"]";
    int deg = 0;
    try {
      std::size_t pos = 0;
      deg = std::stoi(key, &pos);
      if (pos != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      io_fail(kw, "degree keys must be integers");
    }
    int n = io_int(it.value(), kw);
    if (n < 0) io_fail(kw, "dimension must be nonnegative");
    if (n > 0) M.dims[deg] = n;
  }
  return M;
}

inline Json module_to_json(const GradedModule& M) {
  Json j = Json::object();
  for (auto& [d, n] : M.dims) j[std::to_string(d)] = n;
  return j;
}

/* ---- Entry rows ---------------------------------------------------------- */

/* Sequential reader over one JSON array row of basis coordinates followed
   by a coefficient pair. */
struct RowReader {
  const Json& row;
  const std::string& where;
  std::size_t pos = 0;

  int take_int(const char* what) {
    if (pos >= row.size() || !row[pos].is_number_integer())
      io_fail(where, std::string("expected ") + what + " at position " + std::to_string(pos));
    return io_int(row[pos++], where);
  }
  BigInt take_bigint() {
    if (pos >= row.size())
      io_fail(where, "expected a coefficient at position " + std::to_string(pos));
    return io_bigint(row[pos++], where);
  }
};

inline void io_check_basis(const GradedModule& M, int deg, int idx, const std::string& where,
                           const char* which) {
  if (idx < 0 || idx >= M.dim(deg))
    io_fail(where, std::string(which) + " index " + std::to_string(idx) +
                       " out of range in degree " + std::to_string(deg) + " (dimension " +
                       std::to_string(M.dim(deg)) + ")");
}

/* One row [out_deg, out_idx, in1_deg, in1_idx, ..., num, den] of an
   arity-many multilinear operation of the stated degree. */
template <class F>
void tensor_row_from_json(const F& field, const Json& row, int arity, int degree,
                          const GradedModule& src, const GradedModule& dst, Tensor<F>& t,
                          const std::string& where) {
  if (!row.is_array() || row.size() != static_cast<std::size_t>(4 + 2 * arity))
    io_fail(where, "expected [out_deg, out_idx, " + std::to_string(arity) +
                       " input (deg, idx) pairs, num, den]");
  RowReader rr{row, where};
  int od = rr.take_int("an output degree");
  int oi = rr.take_int("an output index");
  io_check_basis(dst, od, oi, where, "output");
  std::vector<BasisElem> in(arity);
  int total = 0;
  for (int l = 0; l < arity; ++l) {
    in[l].deg = rr.take_int("an input degree");
    in[l].idx = rr.take_int("an input index");
    io_check_basis(src, in[l].deg, in[l].idx, where, "input");
    total += in[l].deg;
  }
  BigInt num = rr.take_bigint();
  BigInt den = rr.take_bigint();
  if (od - total != degree)
    io_fail(where, "entry changes the degree by " + std::to_string(od - total) +
                       ", the operation must change it by " + std::to_string(degree));
  t.add_entry(field, in, {od, oi}, coeff_from_parts(field, num, den, where));
}

template <class F>
Tensor<F> tensor_from_json(const F& field, const Json& j, int arity, int degree,
                           const GradedModule& src, const GradedModule& dst,
                           const std::string& where) {
  if (!j.is_array()) io_fail(where, "expected an array of entry rows");
  Tensor<F> t;
  t.arity = arity;
  t.degree = degree;
  for (std::size_t r = 0; r < j.size(); ++r)
    tensor_row_from_json(field, j[r], arity, degree, src, dst, t,
                         where + "[" + std::to_string(r) + "]");
  return t;
}

template <class F>
Json tensor_to_json(const F& field, const Tensor<F>& t) {
  Json j = Json::array();
  for (auto& [in, cell] : t.table)
    for (auto& [out, v] : cell) {
      Json row = Json::array({out.deg, out.idx});
      for (const BasisElem& b : in) {
        row.push_back(b.deg);
        row.push_back(b.idx);
      }
      auto [num, den] = coeff_parts(field, v);
      row.push_back(bigint_to_json(num));
      row.push_back(bigint_to_json(den));
      j.push_back(std::move(row));
    }
  return j;
}

/* Rows [out_deg, out_idx, in_deg, in_idx, num, den] of a homogeneous
   linear map of the stated degree. */
template <class F>
LinMap<F> linmap_from_json(const F& field, const Json& j, int degree, const GradedModule& src,
                           const GradedModule& dst, const std::string& where) {
  if (!j.is_array()) io_fail(where, "expected an array of entry rows");
  LinMap<F> m;
  m.degree = degree;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rw = where + "[" + std::to_string(r) + "]";
    const Json& row = j[r];
    if (!row.is_array() || row.size() != 6)
      io_fail(rw, "expected [out_deg, out_idx, in_deg, in_idx, num, den]");
    RowReader rr{row, rw};
    int od = rr.take_int("an output degree");
    int oi = rr.take_int("an output index");
    int id = rr.take_int("an input degree");
    int ii = rr.take_int("an input index");
    BigInt num = rr.take_bigint();
    BigInt den = rr.take_bigint();
    if (od - id != degree)
      io_fail(rw, "entry changes the degree by " + std::to_string(od - id) +
                      ", the map must change it by " + std::to_string(degree));
    io_check_basis(dst, od, oi, rw, "output");
    io_check_basis(src, id, ii, rw, "input");
    m.add_entry(field, {id, ii}, {od, oi}, coeff_from_parts(field, num, den, rw));
  }
  return m;
}

template <class F>
Json linmap_to_json(const F& field, const LinMap<F>& m) {
  Json j = Json::array();
  for (auto& [src, col] : m.cols)
    for (auto& [dst, v] : col) {
      auto [num, den] = coeff_parts(field, v);
      j.push_back(Json::array(
          {dst.deg, dst.idx, src.deg, src.idx, bigint_to_json(num), bigint_to_json(den)}));
    }
  return j;
}

/* ---- Cooperad basis keys ------------------------------------------------- */

inline std::string coop_key(CoopElem c) {
  return std::to_string(c.weight) + ":" + std::to_string(c.arity) + ":" + std::to_string(c.idx);
}

inline CoopElem coop_key_parse(const std::string& s, const std::string& where) {
  int parts[3];
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    std::size_t stop = k == 2 ? s.size() : s.find(':', start);
    if (stop == std::string::npos)
      io_fail(where, "basis keys look like \"weight:arity:index\", got \"" + s + "\"");
    try {
      std::size_t pos = 0;
      parts[k] = std::stoi(s.substr(start, stop - start), &pos);
      if (pos != stop - start) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      io_fail(where, "basis keys look like \"weight:arity:index\", got \"" + s + "\"");
    }
    start = stop + 1;
  }
  return {parts[0], parts[1], parts[2]};
}

/* ---- Inline cooperads ---------------------------------------------------- */

/* {"weight_cap": W, "elements": [[w,a,i,degree]...],
    "delta1": [[w,a,i, lw,la,li, slot, rw,ra,ri, num,den]...],
    "delta":  [[w,a,i, tw,ta,ti, (lw,la,li) x ta, num,den]...],
    "dc":     [[w,a,i, tw,ta,ti, num,den]...]}
   The unit is written (0,1,0) and may appear only among the lower
   factors of a full-decomposition row. The assembled object passes the
   full coassociativity / compatibility validation before returning. */
template <class F>
NsCooperad<F> cooperad_from_json(const F& field, const Json& j, const std::string& where) {
  NsCooperad<F> C;
  C.weight_cap = io_int(io_get(j, "weight_cap", where), where + ".weight_cap");
  if (C.weight_cap < 1) io_fail(where + ".weight_cap", "weight cap must be at least 1");

  const Json& elems = io_get(j, "elements", where);
  if (!elems.is_array()) io_fail(where + ".elements", "expected an array of [w,a,i,degree] rows");
  std::map<std::pair<int, int>, std::map<int, int>> buckets;
  for (std::size_t r = 0; r < elems.size(); ++r) {
    const std::string rw = where + ".elements[" + std::to_string(r) + "]";
    const Json& row = elems[r];
    if (!row.is_array() || row.size() != 4) io_fail(rw, "expected [weight, arity, index, degree]");
    RowReader rr{row, rw};
    int w = rr.take_int("a weight");
    int a = rr.take_int("an arity");
    int i = rr.take_int("an index");
    int d = rr.take_int("a degree");
    if (w < 1) io_fail(rw, "basis elements have weight at least 1");
    if (w > C.weight_cap) io_fail(rw, "weight exceeds the weight cap");
    if (a < 1) io_fail(rw, "arity must be at least 1");
    if (!buckets[{w, a}].emplace(i, d).second) io_fail(rw, "duplicate basis element");
  }
  C.arity_cap = 1;
  for (auto& [wa, by_idx] : buckets) {
    std::vector<int> degs;
    for (auto& [i, d] : by_idx) {
      if (i != static_cast<int>(degs.size()))
        io_fail(where + ".elements",
                "indices at weight " + std::to_string(wa.first) + ", arity " +
                    std::to_string(wa.second) + " must run 0..count-1 without gaps");
      degs.push_back(d);
    }
    C.spaces[wa] = std::move(degs);
    C.arity_cap = std::max(C.arity_cap, wa.second);
  }

  auto take_elem = [&](RowReader& rr, const std::string& rw, bool unit_ok) -> CoopElem {
    CoopElem c;
    c.weight = rr.take_int("a weight");
    c.arity = rr.take_int("an arity");
    c.idx = rr.take_int("an index");
    if (c.is_unit()) {
      if (!unit_ok || c.arity != 1 || c.idx != 0)
        io_fail(rw, "the unit (0,1,0) is not allowed here");
      return c;
    }
    if (!C.has_elem(c)) io_fail(rw, "unknown basis element " + c.str());
    return c;
  };

  if (j.contains("delta1")) {
    const Json& d1 = j["delta1"];
    if (!d1.is_array()) io_fail(where + ".delta1", "expected an array of rows");
    for (std::size_t r = 0; r < d1.size(); ++r) {
      const std::string rw = where + ".delta1[" + std::to_string(r) + "]";
      const Json& row = d1[r];
      if (!row.is_array() || row.size() != 12)
        io_fail(rw, "expected [w,a,i, lw,la,li, slot, rw,ra,ri, num, den]");
      RowReader rr{row, rw};
      CoopElem src = take_elem(rr, rw, false);
      Delta1Term<F> t;
      t.left = take_elem(rr, rw, false);
      t.pos = rr.take_int("a slot");
      t.right = take_elem(rr, rw, false);
      BigInt num = rr.take_bigint();
      BigInt den = rr.take_bigint();
      if (t.pos < 1 || t.pos > t.left.arity) io_fail(rw, "slot out of range");
      if (t.left.weight + t.right.weight != src.weight) io_fail(rw, "weights must add up");
      if (t.left.arity + t.right.arity - 1 != src.arity) io_fail(rw, "arities must compose");
      t.coeff = coeff_from_parts(field, num, den, rw);
      if (!field.is_zero(t.coeff)) C.delta1[src].push_back(std::move(t));
    }
  }

  if (j.contains("delta")) {
    const Json& df = j["delta"];
    if (!df.is_array()) io_fail(where + ".delta", "expected an array of rows");
    for (std::size_t r = 0; r < df.size(); ++r) {
      const std::string rw = where + ".delta[" + std::to_string(r) + "]";
      const Json& row = df[r];
      if (!row.is_array() || row.size() < 8)
        io_fail(rw, "expected [w,a,i, tw,ta,ti, one (w,a,i) triple per top input, num, den]");
      RowReader rr{row, rw};
      CoopElem src = take_elem(rr, rw, false);
      DeltaTerm<F> t;
      t.top = take_elem(rr, rw, false);
      if (row.size() != static_cast<std::size_t>(8 + 3 * t.top.arity))
        io_fail(rw, "expected " + std::to_string(t.top.arity) +
                        " lower (w,a,i) triples for an arity-" + std::to_string(t.top.arity) +
                        " top factor");
      int wsum = t.top.weight, asum = 0;
      for (int l = 0; l < t.top.arity; ++l) {
        CoopElem low = take_elem(rr, rw, true);
        wsum += low.weight;
        asum += low.arity;
        t.lowers.push_back(low);
      }
      BigInt num = rr.take_bigint();
      BigInt den = rr.take_bigint();
      if (wsum != src.weight) io_fail(rw, "weights must add up");
      if (asum != src.arity) io_fail(rw, "arities must compose");
      t.coeff = coeff_from_parts(field, num, den, rw);
      if (!field.is_zero(t.coeff)) C.delta[src].push_back(std::move(t));
    }
  }

  if (j.contains("dc")) {
    const Json& dc = j["dc"];
    if (!dc.is_array()) io_fail(where + ".dc", "expected an array of rows");
    for (std::size_t r = 0; r < dc.size(); ++r) {
      const std::string rw = where + ".dc[" + std::to_string(r) + "]";
      const Json& row = dc[r];
      if (!row.is_array() || row.size() != 8) io_fail(rw, "expected [w,a,i, tw,ta,ti, num, den]");
      RowReader rr{row, rw};
      CoopElem src = take_elem(rr, rw, false);
      CoopElem dst = take_elem(rr, rw, false);
      BigInt num = rr.take_bigint();
      BigInt den = rr.take_bigint();
      if (dst.weight != src.weight || dst.arity != src.arity)
        io_fail(rw, "the differential preserves weight and arity");
      auto v = coeff_from_parts(field, num, den, rw);
      if (!field.is_zero(v)) C.dC[src].emplace_back(dst, v);
    }
  }

  C.validate(field);
  return C;
}

/* ---- Convolution elements ------------------------------------------------ */

template <class F>
Json conv_to_json(const F& field, const ConvElem<F>& f) {
  Json comps = Json::object();
  for (auto& [c, t] : f.comps) {
    if (t.is_zero()) continue;
    comps[coop_key(c)] = tensor_to_json(field, t);
  }
  return Json{{"degree", f.degree}, {"truncated", f.truncated}, {"components", comps}};
}

template <class F>
ConvElem<F> conv_from_json(const F& field, const NsCooperad<F>& C, const Json& j,
                           const GradedModule& S, const GradedModule& T,
                           const std::string& where) {
  int degree = io_int(io_get(j, "degree", where), where + ".degree");
  ConvElem<F> r = conv_zero<F>(degree, S, T);
  if (j.contains("truncated")) r.truncated = io_bool(j["truncated"], where + ".truncated");
  const Json& comps = io_get(j, "components", where);
  if (!comps.is_object()) io_fail(where + ".components", "expected an object of basis keys");
  for (auto it = comps.begin(); it != comps.end(); ++it) {
    const std::string cw = where + ".components[\"" + it.key() + "\"]";
    CoopElem c = coop_key_parse(it.key(), cw);
    int cdeg = 0;
    if (c.is_unit()) {
      if (c.arity != 1 || c.idx != 0) io_fail(cw, "the unit is written \"0:1:0\"");
    } else {
      if (!C.has_elem(c)) io_fail(cw, "unknown cooperad basis element " + c.str());
      cdeg = C.degree_of(c);
    }
    Tensor<F> t = tensor_from_json(field, it.value(), c.arity, degree + cdeg, S, T, cw);
    if (!t.is_zero()) r.comps.emplace(c, std::move(t));
  }
  return r;
}

/* ---- Contractions -------------------------------------------------------- */

/* {"module": {...}, "inclusion": rows, "projection": rows, "homotopy": rows}
   onto a retract with zero differential; all seven side conditions are
   validated before returning. */
template <class F>
Contraction<F> contraction_from_json(const F& field, const Json& j, const ChainComplex<F>& big,
                                     const std::string& where) {
  Contraction<F> con;
  con.big = &big;
  con.small = module_from_json(io_get(j, "module", where), where + ".module");
  con.incl = linmap_from_json(field, io_get(j, "inclusion", where), 0, con.small, big.space,
                              where + ".inclusion");
  con.proj = linmap_from_json(field, io_get(j, "projection", where), 0, big.space, con.small,
                              where + ".projection");
  con.htpy = linmap_from_json(field, io_get(j, "homotopy", where), 1, big.space, big.space,
                              where + ".homotopy");
  con.validate(field);
  return con;
}

template <class F>
Json contraction_to_json(const F& field, const Contraction<F>& con) {
  return Json{{"module", module_to_json(con.small)},
              {"inclusion", linmap_to_json(field, con.incl)},
              {"projection", linmap_to_json(field, con.proj)},
              {"homotopy", linmap_to_json(field, con.htpy)}};
}

/* ---- Problem files ------------------------------------------------------- */

/* In-memory problem. The structure is stored as raw components; the
   convolution element is rebuilt on demand against the module member, so
   the object can be moved freely before first use. */
template <class F>
struct Problem {
  GradedModule module;
  NsCooperad<F> coop;
  bool builtin_coop = true;
  LinMap<F> diff;  // degree -1; empty when absent
  bool has_diff = false;
  std::map<CoopElem, Tensor<F>> comps;
  std::optional<LinMap<F>> umap;  // degree 0 module map, for criteria
  Json contraction;               // raw; parsed only by the transfer path
  int weight_cap = 0;             // effective cap the cooperad was built at

  ConvElem<F> structure() const {
    ConvElem<F> r = conv_zero<F>(-1, module, module);
    for (auto& [c, t] : comps)
      if (!t.is_zero()) r.comps.emplace(c, t);
    return r;
  }

  bool mu_shaped() const {
    for (auto& [c, t] : comps)
      if (c.weight != c.arity - 1 || c.idx != 0) return false;
    return true;
  }

  AInfinityStructure<F> ainf() const {
    if (!mu_shaped())
      io_fail("problem.structure",
              "the homotopy-transfer path needs operations keyed by arity alone");
    AInfinityStructure<F> A;
    A.complex.space = module;
    A.complex.d = diff;
    A.complex.d.degree = -1;
    for (auto& [c, t] : comps)
      if (!t.is_zero()) A.ops[c.arity] = t;
    return A;
  }
};

namespace detail {

inline bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

/* Largest cooperad weight the structure needs, scanned before the
   cooperad exists. Array rows infer their arity from the row length. */
inline int structure_weight_need(const Json& j, const std::string& where) {
  int need = 1;
  if (j.is_null()) return need;
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (all_digits(key)) {
        int k = 0;
        try {
          k = std::stoi(key);
        } catch (const std::exception&) {
          io_fail(where, "operation arity \"" + key + "\" out of range");
        }
        if (k < 2)
          io_fail(where + "[\"" + key + "\"]",
                  "operations have arity at least 2; use \"differential\" for the arity-one part");
        need = std::max(need, k - 1);
      } else {
        CoopElem c = coop_key_parse(key, where + "[\"" + key + "\"]");
        need = std::max(need, c.weight);
      }
    }
    return need;
  }
  if (j.is_array()) {
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string rw = where + "[" + std::to_string(r) + "]";
      if (!j[r].is_array() || j[r].size() < 8 || j[r].size() % 2 != 0)
        io_fail(rw, "row length must be 4 + 2*arity with arity at least 2");
      need = std::max(need, static_cast<int>((j[r].size() - 4) / 2) - 1);
    }
    return need;
  }
  io_fail(where, "expected an object keyed by arity or basis key, or an array of rows");
}

}  // namespace detail

/* Parse a problem document. cap_flag > 0 fixes the cooperad weight cap
   from the command line; otherwise the file's "weight_cap", then the
   KALEDIN_WEIGHT_CAP environment variable, then the smallest cap the
   structure and the command allow. min_cap is what the invoking command
   needs; an explicit cap below it is an error rather than a silent
   upgrade. */
template <class F>
Problem<F> problem_from_json(const F& field, const Json& j, int cap_flag, int min_cap) {
  if (!j.is_object()) io_fail("problem", "expected a JSON object");
  Problem<F> P;
  P.module = module_from_json(io_get(j, "module", "problem"), "problem.module");

  const Json structure = j.contains("structure") ? j["structure"] : Json();
  int need = detail::structure_weight_need(structure, "problem.structure");

  int cap = 0;
  std::string cap_from;
  if (cap_flag > 0) {
    cap = cap_flag;
    cap_from = "--weight-cap";
  } else if (j.contains("weight_cap")) {
    cap = io_int(j["weight_cap"], "problem.weight_cap");
    cap_from = "problem.weight_cap";
    if (cap < 1) io_fail(cap_from, "weight cap must be at least 1");
  } else if (const char* env = std::getenv("KALEDIN_WEIGHT_CAP")) {
    try {
      std::size_t pos = 0;
      cap = std::stoi(env, &pos);
      if (pos != std::string(env).size() || cap < 1) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      io_fail("KALEDIN_WEIGHT_CAP", "must be a positive integer");
    }
    cap_from = "KALEDIN_WEIGHT_CAP";
  }
  if (cap == 0) cap = std::max(min_cap, need);
  if (cap < min_cap)
    io_fail(cap_from, "weight cap " + std::to_string(cap) + " is below the minimum " +
                          std::to_string(min_cap) + " this command needs");
  if (cap < need)
    io_fail(cap_from, "weight cap " + std::to_string(cap) +
                          " cannot hold an operation of arity " + std::to_string(need + 1));

  if (j.contains("cooperad") && !j["cooperad"].is_string()) {
    P.coop = cooperad_from_json(field, j["cooperad"], "problem.cooperad");
    P.builtin_coop = false;
    if (cap_flag > 0 && cap_flag > P.coop.weight_cap)
      io_fail("--weight-cap", "the inline cooperad caps the weight at " +
                                  std::to_string(P.coop.weight_cap));
    if (P.coop.weight_cap < min_cap)
      io_fail("problem.cooperad.weight_cap", "weight cap " + std::to_string(P.coop.weight_cap) +
                                                 " is below the minimum " +
                                                 std::to_string(min_cap) + " this command needs");
    cap = P.coop.weight_cap;
  } else {
    if (j.contains("cooperad") && j["cooperad"].get<std::string>() != "as-koszul")
      io_fail("problem.cooperad",
              "unknown cooperad \"" + j["cooperad"].get<std::string>() + "\"");
    P.coop = NsCooperad<F>::as_koszul(field, cap);
  }
  P.weight_cap = cap;

  if (j.contains("differential")) {
    P.diff = linmap_from_json(field, j["differential"], -1, P.module, P.module,
                              "problem.differential");
    P.has_diff = !P.diff.is_zero();
    ChainComplex<F> X{P.module, P.diff};
    try {
      X.validate(field);
    } catch (const std::exception& e) {
      io_fail("problem.differential", e.what());
    }
  } else {
    P.diff.degree = -1;
  }

  auto mu_of = [&](int k, const std::string& kw) -> CoopElem {
    CoopElem c{k - 1, k, 0};
    if (!P.coop.has_elem(c))
      io_fail(kw, "the cooperad has no basis element at weight " + std::to_string(k - 1) +
                      ", arity " + std::to_string(k) + ", index 0");
    return c;
  };
  auto insert_comp = [&](CoopElem c, Tensor<F> t, const std::string& kw) {
    if (t.is_zero()) return;
    if (!P.comps.emplace(c, std::move(t)).second)
      io_fail(kw, "duplicate component for " + c.str());
  };
  if (structure.is_object()) {
    for (auto it = structure.begin(); it != structure.end(); ++it) {
      const std::string kw = "problem.structure[\"" + it.key() + "\"]";
      CoopElem c;
      if (detail::all_digits(it.key()))
        c = mu_of(std::stoi(it.key()), kw);
      else {
        c = coop_key_parse(it.key(), kw);
        if (c.is_unit()) io_fail(kw, "structures carry no counit component");
        if (!P.coop.has_elem(c)) io_fail(kw, "unknown cooperad basis element " + c.str());
      }
      insert_comp(c,
                  tensor_from_json(field, it.value(), c.arity, -1 + P.coop.degree_of(c),
                                   P.module, P.module, kw),
                  kw);
    }
  } else if (structure.is_array()) {
    std::map<CoopElem, Tensor<F>> acc;
    for (std::size_t r = 0; r < structure.size(); ++r) {
      const std::string rw = "problem.structure[" + std::to_string(r) + "]";
      int k = static_cast<int>((structure[r].size() - 4) / 2);
      CoopElem c = mu_of(k, rw);
      Tensor<F>& t = acc[c];
      t.arity = k;
      t.degree = -1 + P.coop.degree_of(c);
      tensor_row_from_json(field, structure[r], k, t.degree, P.module, P.module, t, rw);
    }
    for (auto& [c, t] : acc) insert_comp(c, std::move(t), "problem.structure");
  }

  if (j.contains("map"))
    P.umap = linmap_from_json(field, j["map"], 0, P.module, P.module, "problem.map");
  if (j.contains("contraction")) P.contraction = j["contraction"];
  return P;
}

/* ---- Files and hashing --------------------------------------------------- */

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open file");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    io_fail(path, e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open file for writing");
  out << j.dump(2) << "\n";
  if (!out) io_fail(path, "write failed");
}

/* FNV-1a over the canonical (key-sorted, whitespace-free) dump of the
   parsed document, so formatting edits do not change the hash but any
   change of content does. */
inline std::string fnv1a64_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string problem_hash(const Json& problem) { return fnv1a64_hex(problem.dump()); }

/* ---- Certificates -------------------------------------------------------- */

inline Json rank_to_json(const RankData& r) {
  return Json{{"rows", r.rows}, {"cols", r.cols}, {"rank", r.rank},
              {"rank_augmented", r.rank_augmented}};
}

inline Json report_to_json(const CriterionReport& r) {
  Json checks = Json::array();
  for (const CriterionCheck& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return Json{{"criterion", r.criterion},   {"stage", r.stage},
              {"checks", checks},           {"hypotheses_hold", r.hypotheses_hold},
              {"experimental", r.experimental}, {"conclusion", r.conclusion}};
}

inline Json cert_header(const std::string& kind, const std::string& hash,
                        const std::string& field_spec, int weight_cap) {
  return Json{{"tool", kToolTag},
              {"kind", kind},
              {"problem_hash", hash},
              {"field", field_spec},
              {"weight_cap", weight_cap}};
}

template <class F>
Json isotopy_cert(const F& field, const std::string& hash, const std::string& field_spec,
                  int weight_cap, int truncation, const ConvElem<F>& iso) {
  Json j = cert_header("isotopy", hash, field_spec, weight_cap);
  j["truncation"] = truncation;
  j["isotopy"] = conv_to_json(field, iso);
  return j;
}

template <class F>
Json obstruction_cert(const F& field, const std::string& hash, const std::string& field_spec,
                      int weight_cap, int truncation, const OpTrivializeResult<F>& res) {
  Json j = cert_header("obstruction-cycle", hash, field_spec, weight_cap);
  j["truncation"] = truncation;
  j["failed_step"] = res.failed_step;
  Json coeffs = Json::array();
  for (const ConvElem<F>& c : res.failing_class.coeffs) coeffs.push_back(conv_to_json(field, c));
  j["class"] = Json{{"n", res.failing_class.n}, {"coefficients", coeffs}};
  j["rank"] = rank_to_json(res.failing_rank);
  return j;
}

inline Json criterion_cert(const std::string& hash, const std::string& field_spec, int weight_cap,
                           const Json& params, const CriterionReport& report) {
  Json j = cert_header("criterion-report", hash, field_spec, weight_cap);
  j["parameters"] = params;
  j["report"] = report_to_json(report);
  return j;
}

/* ---- Running a criterion by name ----------------------------------------- */

template <class F>
CriterionReport run_criterion(const F& field, const NsCooperad<F>& C, const Problem<F>& P,
                              const std::string& which, const Json& params, int stage) {
  ConvElem<F> phi = P.structure();
  if (which == "purity") {
    auto [an, ad] = parse_fraction(
        io_string(io_get(params, "alpha", "parameters"), "parameters.alpha"), "parameters.alpha");
    auto [tn, td] = parse_fraction(
        io_string(io_get(params, "theta", "parameters"), "parameters.theta"), "parameters.theta");
    return purity_criterion(field, C, phi, coeff_from_parts(field, an, ad, "parameters.alpha"),
                            io_to_ll(tn, "parameters.theta"), io_to_ll(td, "parameters.theta"),
                            stage);
  }
  if (which == "aut-lift" || which == "automorphism-lift" || which == "spectrum") {
    if (!P.umap)
      io_fail("problem", "this test needs a degree-zero map under the key \"map\"");
    return which == "spectrum" ? spectrum_criterion(field, C, phi, *P.umap, stage)
                               : aut_lift_criterion(field, C, phi, *P.umap, stage);
  }
  if (which == "intrinsic") return intrinsic_criterion(field, C, phi, stage);
  io_fail("criterion", "unknown criterion \"" + which + "\"");
}

inline int criterion_min_cap(const std::string& which, int stage) {
  return which == "intrinsic" ? stage + 2 : stage + 1;
}

/* ---- Certificate verification -------------------------------------------- */

namespace detail {

struct CheckLog {
  std::ostream& out;
  bool ok = true;

  void operator()(bool passed, const std::string& what) {
    out << (passed ? "  ok: " : "  FAIL: ") << what << "\n";
    ok &= passed;
  }
  int finish() {
    out << (ok ? "valid certificate\n" : "invalid certificate\n");
    return ok ? 0 : 1;
  }
};

}  // namespace detail

template <class F>
int verify_isotopy_cert(const F& field, const Problem<F>& P, const Json& cj, std::ostream& out) {
  int n = io_int(io_get(cj, "truncation", "certificate"), "certificate.truncation");
  ConvElem<F> f = conv_from_json(field, P.coop, io_get(cj, "isotopy", "certificate"), P.module,
                                 P.module, "certificate.isotopy");
  detail::CheckLog check{out};
  check(f.degree == 0, "certificate map has degree 0");
  check(is_isotopy(field, f), "counit component is the identity");
  if (!check.ok) return check.finish();
  const LinMap<F>* dmod = P.has_diff ? &P.diff : nullptr;
  ConvElem<F> phi = P.structure();
  ConvElem<F> moved = act_on_structure(field, P.coop, f, phi, dmod, dmod);
  check(conv_is_mc(field, P.coop, moved, dmod), "transported structure is flat");
  ConvElem<F> res = infinity_residual(field, P.coop, f, phi, moved, dmod, dmod);
  check(res.is_zero(), "certificate map is a morphism onto its transport");
  for (int w = 2; w <= n + 1; ++w)
    check(conv_weight_component(moved, w).is_zero(),
          "transported structure vanishes in weight " + std::to_string(w));
  return check.finish();
}

template <class F>
int verify_obstruction_cert(const F& field, const Problem<F>& P, const Json& cj,
                            std::ostream& out) {
  int n = io_int(io_get(cj, "truncation", "certificate"), "certificate.truncation");
  int step = io_int(io_get(cj, "failed_step", "certificate"), "certificate.failed_step");
  const Json& rank = io_get(cj, "rank", "certificate");
  const Json& cls = io_get(cj, "class", "certificate");
  ConvElem<F> phi = P.structure();
  OpTrivializeResult<F> res = operadic_trivialize(field, P.coop, phi, n);
  detail::CheckLog check{out};
  check(!res.success, "the structure is not trivializable at truncation " + std::to_string(n));
  if (!check.ok) return check.finish();
  check(res.failed_step == step,
        "first obstruction appears at the recorded step " + std::to_string(step));
  Json coeffs = Json::array();
  for (const ConvElem<F>& c : res.failing_class.coeffs) coeffs.push_back(conv_to_json(field, c));
  check(io_get(cls, "n", "certificate.class") == Json(res.failing_class.n) &&
            io_get(cls, "coefficients", "certificate.class") == coeffs,
        "obstruction class representative matches the recomputation");
  check(io_get(cj, "rank", "certificate") == rank_to_json(res.failing_rank),
        "rank certificate matches the recomputation");
  check(io_int(io_get(rank, "rank", "certificate.rank"), "certificate.rank.rank") <
            io_int(io_get(rank, "rank_augmented", "certificate.rank"),
                   "certificate.rank.rank_augmented"),
        "rank data exhibits an unsolvable system");
  return check.finish();
}

template <class F>
int verify_criterion_cert(const F& field, const Problem<F>& P, const Json& cj,
                          std::ostream& out) {
  const Json& stored = io_get(cj, "report", "certificate");
  std::string which =
      io_string(io_get(stored, "criterion", "certificate.report"), "certificate.report.criterion");
  int stage =
      io_int(io_get(stored, "stage", "certificate.report"), "certificate.report.stage");
  const Json& params = io_get(cj, "parameters", "certificate");
  CriterionReport r = run_criterion(field, P.coop, P, which, params, stage);
  detail::CheckLog check{out};
  check(report_to_json(r) == stored, "criterion report matches the recomputation");
  return check.finish();
}

}  // namespace kaledin
