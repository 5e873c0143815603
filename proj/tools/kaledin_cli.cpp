// Command-line front end. All real work lives in the header-only
// library; this file parses arguments and forwards the streams, so the
// exit-code contract is owned by the command functions themselves.

#include <kaledin/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  using namespace kaledin;
  CLI::App app{"exact engine for gauge formality of weight-graded operadic structures"};
  app.require_subcommand(1);

  cli::Global g;
  app.add_option("--field", g.field, "coefficient field: Q (default) or Fp:<prime>");
  app.add_option("--weight-cap", g.weight_cap, "weight cap of the ambient cooperad");

  std::string problem, cert_in, cert_out, contraction, which;
  int truncation = 1;
  bool full = false;
  cli::CriteriaOpts copts;

  auto* mc = app.add_subcommand("check-mc", "check the structure's defining relations");
  mc->add_option("problem", problem, "problem file")->required();

  auto* cl = app.add_subcommand("class", "obstruction class at a truncation stage");
  cl->add_option("problem", problem, "problem file")->required();
  cl->add_option("--truncation", truncation, "stage n")->required();

  auto* fo = app.add_subcommand("formality", "decide gauge n-formality");
  fo->add_option("problem", problem, "problem file")->required();
  fo->add_option("--truncation", truncation, "stage n (default 1)");
  fo->add_flag("--full", full, "decide full gauge formality over a bounded weight support");
  fo->add_option("--certificate", cert_out, "write the isotopy or obstruction certificate here");

  auto* tv = app.add_subcommand("trivialize",
                                "construct the trivializing isotopy or the first obstruction");
  tv->add_option("problem", problem, "problem file")->required();
  tv->add_option("--truncation", truncation, "stage n")->required();
  tv->add_option("--certificate", cert_out, "also write the certificate here");

  auto* tf = app.add_subcommand("transfer", "induce the structure on a retract of the complex");
  tf->add_option("problem", problem, "problem file")->required();
  tf->add_option("--contraction", contraction, "use this contraction instead of computing one");

  auto* cr = app.add_subcommand("criteria", "run a formality criterion");
  cr->add_option("which", which, "purity | aut-lift | spectrum | intrinsic")->required();
  cr->add_option("problem", problem, "problem file")->required();
  cr->add_option("--truncation", copts.stage, "stage n (default 1)");
  cr->add_option("--alpha", copts.alpha, "purity: scaling base, a rational");
  cr->add_option("--theta", copts.theta, "purity: grading slope, a rational");
  cr->add_option("--certificate", cert_out, "also write the certificate here");

  auto* ve = app.add_subcommand("verify", "recheck a certificate against its problem file");
  ve->add_option("problem", problem, "problem file")->required();
  ve->add_option("certificate", cert_in, "certificate file")->required();

  for (auto* s : {mc, cl, fo, tv, tf, cr, ve}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*mc) return cli::cmd_check_mc(g, problem, std::cout, std::cerr);
  if (*cl) return cli::cmd_class(g, problem, truncation, std::cout, std::cerr);
  if (*fo) return cli::cmd_formality(g, problem, truncation, full, cert_out, std::cout, std::cerr);
  if (*tv) return cli::cmd_trivialize(g, problem, truncation, cert_out, std::cout, std::cerr);
  if (*tf) return cli::cmd_transfer(g, problem, contraction, std::cout, std::cerr);
  if (*cr) return cli::cmd_criteria(g, which, problem, copts, cert_out, std::cout, std::cerr);
  if (*ve) return cli::cmd_verify(g, problem, cert_in, std::cout, std::cerr);
  return 2;
}
