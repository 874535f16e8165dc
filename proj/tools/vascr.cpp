#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vascr/commands.hpp"
#include "vascr/errors.hpp"
#include "vascr/text.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string preset = "paper";
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

vascr::RunConfig resolve(const Options& o) {
  vascr::RunConfig cfg = vascr::preset(o.preset);
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw vascr::IoError("cannot open config " + o.config_path);
    cfg = vascr::parse_config(is, cfg);
  }
  if (o.mode) cfg.mode = *o.mode == "nn" ? vascr::Mode::Neural : vascr::Mode::McBaseline;
  if (o.seed) cfg.master_seed = *o.seed;
  return cfg;
}

void print_error(const std::exception& e, int depth = 0) {
  std::cerr << (depth ? "  caused by: " : "error: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_error(inner, depth + 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested-simulation SCR for variable annuity portfolios"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Options o;
  app.add_option("--config", o.config_path, "INI-style run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", o.preset, "Base parameter set")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--mode", o.mode, "Liability engine")->check(CLI::IsMember({"mc", "nn"}));
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out", o.out, "Output directory");

  auto* gen = app.add_subcommand("generate", "Write the input, sampled and mortality CSVs");
  auto* val = app.add_subcommand("value", "Value every contract of a portfolio CSV at time 0");
  std::string portfolio;
  val->add_option("portfolio", portfolio, "Portfolio CSV")->required();
  auto* scr = app.add_subcommand("scr", "Run the nested simulation and write report.json");
  auto* cmp = app.add_subcommand("compare", "Relative errors and speed-up of two reports");
  std::string estimate, reference;
  cmp->add_option("estimate", estimate, "Report under test")->required()->check(CLI::ExistingFile);
  cmp->add_option("reference", reference, "Reference report")->required()->check(CLI::ExistingFile);
  auto* dump = app.add_subcommand("config", "Print the resolved configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmp->parsed()) {
      vascr::cmd_compare(estimate, reference, std::cout);
      return 0;
    }
    const vascr::RunConfig cfg = resolve(o);
    if (dump->parsed()) {
      std::cout << vascr::serialize_config(cfg);
    } else if (gen->parsed()) {
      for (const auto& p : vascr::cmd_generate(cfg, o.out)) std::cout << p.string() << '\n';
    } else if (val->parsed()) {
      const auto s = vascr::cmd_value(cfg, portfolio, o.out);
      std::cout << "contracts " << s.contracts << "\ntotal_mvl0 " << vascr::text::cents(s.total)
                << '\n';
    } else if (scr->parsed()) {
      const auto report = vascr::cmd_scr(cfg, o.out);
      std::cout << "mode " << report["mode"].get<std::string>() << "\nscr "
                << vascr::text::cents(report["scr"].get<double>()) << "\nmvl0 "
                << vascr::text::cents(report["mvl0"].get<double>()) << "\nseconds "
                << vascr::text::shortest(report["timings"]["total"].get<double>()) << '\n';
    }
  } catch (const std::exception& e) {
    print_error(e);
    return 1;
  }
  return 0;
}
