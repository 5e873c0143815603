#pragma once
// Command entry points behind the command-line tool. Each function takes
// the parsed options plus explicit output streams and returns the
// process exit code, so the whole surface is drivable from tests without
// spawning processes. Exit convention: 0 = the checked property holds,
// 1 = it fails, 2 = bad input or an error (unknown field, weight cap too
// small, non-invertible factorial, hash mismatch, parse error).

#include <kaledin/io.hpp>

#include <functional>
#include <iostream>
#include <string>
#include <type_traits>

namespace kaledin::cli {

struct Global {
  std::string field;   // "" = take the problem file's "field", default Q
  int weight_cap = 0;  // 0 = resolve from file / environment / structure
};

template <class Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

/* Dispatch on the field spec: "Q" (default), or a prime field written
   "Fp:<p>", "F<p>", or plain "<p>". The continuation receives the field
   handle and the canonical spec recorded in certificates. */
template <class Fn>
int with_field(const std::string& spec, std::ostream& err, Fn&& fn) {
  return run_guarded(err, [&]() -> int {
    if (spec.empty() || spec == "Q" || spec == "q") {
      Rationals field;
      return fn(field, std::string("Q"));
    }
    std::string digits = spec;
    auto colon = digits.rfind(':');
    if (colon != std::string::npos) digits = digits.substr(colon + 1);
    if (!digits.empty() && (digits[0] == 'F' || digits[0] == 'f')) digits = digits.substr(1);
    if (!kaledin::detail::all_digits(digits))
      io_fail("--field", "unrecognized field \"" + spec + "\": use Q or Fp:<prime>");
    long long p = 0;
    try {
      p = std::stoll(digits);
    } catch (const std::exception&) {
      io_fail("--field", "characteristic \"" + digits + "\" out of range");
    }
    PrimeField field(static_cast<std::uint64_t>(p));
    return fn(field, "Fp:" + std::to_string(p));
  });
}

namespace detail {

/* Load the problem file and run the continuation with the field chosen
   by flag > file > default. */
template <class Fn>
int with_problem(const Global& g, const std::string& path, int min_cap, std::ostream& err,
                 Fn&& fn) {
  return run_guarded(err, [&]() -> int {
    Json pj = load_json_file(path);
    std::string spec = g.field;
    if (spec.empty() && pj.is_object() && pj.contains("field"))
      spec = io_string(pj["field"], "problem.field");
    return with_field(spec, err, [&](auto& field, const std::string& canon) -> int {
      using F = std::decay_t<decltype(field)>;
      Problem<F> P = problem_from_json(field, pj, g.weight_cap, min_cap);
      return fn(field, canon, pj, P);
    });
  });
}

template <class F>
void require_no_diff(const Problem<F>& P, const char* what) {
  if (P.has_diff)
    io_fail("problem", std::string(what) +
                           " applies to the induced structure on homology, which has zero "
                           "differential: run transfer first");
}

/* Flatness guard shared by everything downstream of check-mc. */
template <class F>
void require_flat(const F& field, const Problem<F>& P) {
  ConvElem<F> phi = P.structure();
  if (!conv_is_mc(field, P.coop, phi, P.has_diff ? &P.diff : nullptr))
    io_fail("problem", "the structure is not flat; check-mc shows the failing relation");
}

}  // namespace detail

/* check-mc: does the structure satisfy its defining relations? For
   arity-keyed operations over the builtin cooperad the full relation list
   is checked exactly in every arity; otherwise the curvature of the
   convolution element is computed up to the weight cap. */
inline int cmd_check_mc(const Global& g, const std::string& path, std::ostream& out,
                        std::ostream& err) {
  return detail::with_problem(g, path, 2, err,
                              [&](auto& field, const std::string&, const Json&, auto& P) -> int {
    using F = std::decay_t<decltype(field)>;
    if (P.builtin_coop && P.mu_shaped()) {
      AInfinityStructure<F> A = P.ainf();
      A.validate_structure(field);
      int bad = stasheff_failing_arity(field, A);
      if (bad == 0) {
        out << "flat: the defining relations hold in every arity\n";
        return 0;
      }
      out << "not flat: the arity-" << bad << " relation fails\n";
      return 1;
    }
    ConvElem<F> phi = P.structure();
    ConvElem<F> res = conv_mc_residual(field, P.coop, phi, P.has_diff ? &P.diff : nullptr);
    if (res.is_zero()) {
      out << "flat: the curvature vanishes"
          << (res.truncated ? " up to the weight cap" : "") << "\n";
      return 0;
    }
    out << "not flat: the curvature is nonzero\n";
    return 1;
  });
}

/* class: print the truncated obstruction class at stage n together with
   its cycle check and the rank data of the trivialization system. Exit 0
   when the class vanishes. */
inline int cmd_class(const Global& g, const std::string& path, int truncation, std::ostream& out,
                     std::ostream& err) {
  if (truncation < 1) return run_guarded(err, [&]() -> int {
    io_fail("--truncation", "truncation must be at least 1");
  });
  return detail::with_problem(g, path, truncation + 1, err,
                              [&](auto& field, const std::string&, const Json&, auto& P) -> int {
    using F = std::decay_t<decltype(field)>;
    detail::require_no_diff(P, "the obstruction class");
    detail::require_flat(field, P);
    ConvElem<F> phi = P.structure();
    OpClassRep<F> rep = operadic_truncated_kaledin(field, P.coop, phi, truncation);
    auto van = op_class_vanishes(field, P.coop, phi, truncation);
    Json coeffs = Json::array();
    for (const ConvElem<F>& c : rep.coeffs) coeffs.push_back(conv_to_json(field, c));
    Json doc{{"truncation", truncation},
             {"class", Json{{"n", rep.n}, {"coefficients", coeffs}}},
             {"is_cycle", op_kaledin_cycle(field, P.coop, phi, truncation)},
             {"vanishes", van.vanishes},
             {"rank", rank_to_json(van.rank)}};
    out << doc.dump(2) << "\n";
    return van.vanishes ? 0 : 1;
  });
}

/* trivialize: build the isotopy clearing weights 2..n+1, or return the
   first obstruction with its rank certificate. Prints the certificate
   JSON; --certificate also writes it to a file. */
inline int cmd_trivialize(const Global& g, const std::string& path, int truncation,
                          const std::string& cert_path, std::ostream& out, std::ostream& err) {
  if (truncation < 1) return run_guarded(err, [&]() -> int {
    io_fail("--truncation", "truncation must be at least 1");
  });
  return detail::with_problem(
      g, path, truncation + 1, err,
      [&](auto& field, const std::string& canon, const Json& pj, auto& P) -> int {
        using F = std::decay_t<decltype(field)>;
        detail::require_no_diff(P, "trivialization");
        detail::require_flat(field, P);
        ConvElem<F> phi = P.structure();
        OpTrivializeResult<F> res = operadic_trivialize(field, P.coop, phi, truncation);
        std::string hash = problem_hash(pj);
        Json cert = res.success
                        ? isotopy_cert(field, hash, canon, P.weight_cap, truncation, res.isotopy)
                        : obstruction_cert(field, hash, canon, P.weight_cap, truncation, res);
        out << cert.dump(2) << "\n";
        if (!cert_path.empty()) write_json_file(cert_path, cert);
        return res.success ? 0 : 1;
      });
}

/* formality: decide gauge n-formality (default) or full gauge formality
   over a bounded weight support (--full). Prints a one-line verdict;
   --certificate writes the isotopy or obstruction certificate. */
inline int cmd_formality(const Global& g, const std::string& path, int truncation, bool full,
                         const std::string& cert_path, std::ostream& out, std::ostream& err) {
  if (!full && truncation < 1) return run_guarded(err, [&]() -> int {
    io_fail("--truncation", "truncation must be at least 1");
  });
  int min_cap = full ? 2 : truncation + 1;
  return detail::with_problem(
      g, path, min_cap, err,
      [&](auto& field, const std::string& canon, const Json& pj, auto& P) -> int {
        using F = std::decay_t<decltype(field)>;
        detail::require_no_diff(P, "formality");
        detail::require_flat(field, P);
        ConvElem<F> phi = P.structure();
        std::string hash = problem_hash(pj);
        auto emit = [&](const Json& cert) {
          if (!cert_path.empty()) write_json_file(cert_path, cert);
        };
        if (!full) {
          OpFormalityVerdict<F> v = decide_gauge_n_formal(field, P.coop, phi, truncation);
          if (v.formal) {
            out << "gauge " << truncation << "-formal\n";
            emit(isotopy_cert(field, hash, canon, P.weight_cap, truncation, v.detail.isotopy));
            return 0;
          }
          out << "not gauge " << truncation << "-formal: obstruction at step "
              << v.detail.failed_step << "\n";
          emit(obstruction_cert(field, hash, canon, P.weight_cap, truncation, v.detail));
          return 1;
        }
        BoundedFormalityResult<F> r = decide_gauge_formal_bounded(field, P.coop, phi,
                                                                  P.weight_cap);
        if (r.verdict == BoundedVerdict::Undecided) {
          err << "undecided: " << r.reason << "\n";
          return 2;
        }
        if (r.verdict == BoundedVerdict::Formal) {
          out << "formal: " << r.reason << "\n";
          ConvElem<F> iso = r.support_bound > 1 ? r.detail.detail.isotopy
                                                : conv_unit(field, P.coop, P.module);
          int n = r.support_bound > 1 ? r.support_bound - 1 : 0;
          emit(isotopy_cert(field, hash, canon, P.weight_cap, n, iso));
          return 0;
        }
        out << "not formal: " << r.reason << "\n";
        emit(obstruction_cert(field, hash, canon, P.weight_cap, r.support_bound - 1,
                              r.detail.detail));
        return 1;
      });
}

/* transfer: contract the complex onto its homology (or onto a supplied
   contraction) and print the induced operations with the inclusion and
   projection of the induced quasi-isomorphism pair. */
inline int cmd_transfer(const Global& g, const std::string& path,
                        const std::string& contraction_path, std::ostream& out,
                        std::ostream& err) {
  return detail::with_problem(g, path, 2, err,
                              [&](auto& field, const std::string&, const Json&, auto& P) -> int {
    using F = std::decay_t<decltype(field)>;
    if (!P.builtin_coop)
      io_fail("problem", "transfer works over the builtin cooperad only");
    AInfinityStructure<F> A = P.ainf();
    A.validate_structure(field);
    int bad = stasheff_failing_arity(field, A);
    if (bad != 0)
      io_fail("problem", "the structure is not flat: the arity-" + std::to_string(bad) +
                             " relation fails");
    Contraction<F> con;
    if (!contraction_path.empty()) {
      Json cj = load_json_file(contraction_path);
      con = contraction_from_json(field, cj, A.complex, contraction_path);
    } else if (!P.contraction.is_null()) {
      con = contraction_from_json(field, P.contraction, A.complex, "problem.contraction");
    } else {
      con = contraction_from_complex(field, A.complex);
    }
    TransferResult<F> tr = homotopy_transfer(field, P.coop, A, con);
    Json doc{{"module", module_to_json(con.small)},
             {"structure", conv_to_json(field, tr.phi_t)},
             {"inclusion", conv_to_json(field, tr.i_inf)},
             {"projection", conv_to_json(field, tr.p_inf)},
             {"contraction", contraction_to_json(field, con)}};
    out << doc.dump(2) << "\n";
    return 0;
  });
}

struct CriteriaOpts {
  int stage = 1;
  std::string alpha = "2";
  std::string theta = "1";
};

/* criteria <which>: run one formality criterion and print its report as
   a criterion-report certificate. Exit 0 when the hypotheses hold. */
inline int cmd_criteria(const Global& g, const std::string& which, const std::string& path,
                        const CriteriaOpts& opts, const std::string& cert_path, std::ostream& out,
                        std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    if (opts.stage < 1) io_fail("--truncation", "the stage must be at least 1");
    if (which != "purity" && which != "aut-lift" && which != "spectrum" && which != "intrinsic")
      io_fail("criteria", "unknown criterion \"" + which + "\"");
    int min_cap = criterion_min_cap(which, opts.stage);
    return detail::with_problem(
        g, path, min_cap, err,
        [&](auto& field, const std::string& canon, const Json& pj, auto& P) -> int {
          detail::require_no_diff(P, "every criterion");
          Json params = Json::object();
          if (which == "purity") {
            auto [an, ad] = parse_fraction(opts.alpha, "--alpha");
            auto [tn, td] = parse_fraction(opts.theta, "--theta");
            params["alpha"] = BigRat(an, ad).str();
            params["theta"] = BigRat(tn, td).str();
          }
          CriterionReport r = run_criterion(field, P.coop, P, which, params, opts.stage);
          Json cert = criterion_cert(problem_hash(pj), canon, P.weight_cap, params, r);
          out << cert.dump(2) << "\n";
          if (!cert_path.empty()) write_json_file(cert_path, cert);
          return r.hypotheses_hold ? 0 : 1;
        });
  });
}

/* verify: recheck a certificate against its problem file. The field and
   weight cap recorded in the certificate override flags, so a
   certificate is self-contained given the problem it names. */
inline int cmd_verify(const Global&, const std::string& problem_path,
                      const std::string& cert_path, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    Json pj = load_json_file(problem_path);
    Json cj = load_json_file(cert_path);
    std::string kind = io_string(io_get(cj, "kind", "certificate"), "certificate.kind");
    if (kind == "gauge")
      io_fail("certificate",
              "\"gauge\" certificates describe weighted Lie elements, which have no problem "
              "file format; only operadic certificate kinds can be rechecked here");
    if (kind != "isotopy" && kind != "obstruction-cycle" && kind != "criterion-report")
      io_fail("certificate", "unknown certificate kind \"" + kind + "\"");
    std::string expected = io_string(io_get(cj, "problem_hash", "certificate"),
                                     "certificate.problem_hash");
    std::string actual = problem_hash(pj);
    if (expected != actual) {
      err << "problem hash mismatch: certificate was issued for a different problem file "
          << "(recorded " << expected << ", found " << actual << ")\n";
      return 2;
    }
    std::string spec = io_string(io_get(cj, "field", "certificate"), "certificate.field");
    int cap = io_int(io_get(cj, "weight_cap", "certificate"), "certificate.weight_cap");
    return with_field(spec, err, [&](auto& field, const std::string&) -> int {
      using F = std::decay_t<decltype(field)>;
      int min_cap = 1;
      if (kind == "obstruction-cycle")
        min_cap = io_int(io_get(cj, "truncation", "certificate"), "certificate.truncation") + 1;
      if (kind == "criterion-report") {
        const Json& stored = io_get(cj, "report", "certificate");
        min_cap = criterion_min_cap(
            io_string(io_get(stored, "criterion", "certificate.report"),
                      "certificate.report.criterion"),
            io_int(io_get(stored, "stage", "certificate.report"), "certificate.report.stage"));
      }
      Problem<F> P = problem_from_json(field, pj, cap, min_cap);
      if (kind == "isotopy") return verify_isotopy_cert(field, P, cj, out);
      if (kind == "obstruction-cycle") return verify_obstruction_cert(field, P, cj, out);
      return verify_criterion_cert(field, P, cj, out);
    });
  });
}

}  // namespace kaledin::cli
