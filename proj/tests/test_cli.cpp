#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "vascr/commands.hpp"
#include "vascr/errors.hpp"
#include "vascr/seeding.hpp"

using namespace vascr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vascr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream is(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  return n - 1;
}

RunConfig tiny(Mode mode) {
  RunConfig c = preset("desk");
  c.mode = mode;
  c.portfolio_size = 40;
  c.n_representatives = 6;
  c.n_training = 10;
  c.n_validation = 8;
  c.n_paths = 50;
  c.n_scenarios = 200;
  c.n_knots = 4;
  c.threads = 1;
  c.training.max_total_iters = 400;
  return c;
}

}  // namespace

TEST_CASE("presets carry the documented counts") {
  const auto full = preset("paper");
  CHECK(full.portfolio_size == 100000);
  CHECK(full.n_representatives == 300);
  CHECK(full.n_training == 200);
  CHECK(full.n_validation == 250);
  CHECK(full.n_paths == 10000);
  CHECK(full.n_scenarios == 40000);
  CHECK(full.n_knots == 100);
  const auto desk = preset("desk");
  CHECK(desk.portfolio_size == 1000);
  CHECK(desk.n_representatives == 30);
  CHECK(desk.n_training == 50);
  CHECK(desk.n_validation == 50);
  CHECK(desk.n_paths == 1000);
  CHECK(desk.n_scenarios == 4000);
  CHECK(desk.n_knots == 20);
  CHECK_THROWS_AS(preset("huge"), ConfigError);
}

TEST_CASE("config round-trips through its text form") {
  for (const char* name : {"paper", "desk"}) {
    RunConfig c = preset(name);
    CHECK(parse_config_text(serialize_config(c)) == c);
    c.master_seed = 123456789012345ULL;
    c.mode = Mode::McBaseline;
    c.market.volatility = 0.1 + 1e-17;
    c.training.learning_rate = 1.0 / 3.0;
    c.training.batch_with_replacement = false;
    c.representative_grid.ages = {21, 22};
    c.ranges.withdrawal_rates = {0.045};
    c.input_csv = "some/where.csv";
    CHECK(parse_config_text(serialize_config(c), preset("paper")) == c);
  }
}

TEST_CASE("config files override the base and reject unknown keys") {
  const auto c = parse_config_text("# desk overrides\n[nested]\nn_knots = 7\n\n[run]\nmode = mc\n",
                                   preset("desk"));
  CHECK(c.n_knots == 7);
  CHECK(c.mode == Mode::McBaseline);
  CHECK(c.n_scenarios == 4000);
  CHECK_THROWS_AS(parse_config_text("[nested]\nn_knot = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[nest]\nn_knots = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_knots = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[nested]\nn_knots = seven\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nmode = fast\n"), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig c = preset("desk");
  CHECK_NOTHROW(validate(c));
  c.n_knots = 1;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = preset("desk");
  c.mortality_csv = "/nonexistent/mortality.csv";
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("module seeds derive from the master seed") {
  const auto a = derive_module_seeds(1);
  const auto b = derive_module_seeds(1);
  const auto c = derive_module_seeds(2);
  CHECK(a.portfolio == b.portfolio);
  CHECK(a.scenarios == b.scenarios);
  CHECK(a.portfolio != c.portfolio);
  CHECK(a.portfolio != a.validation);
  CHECK(a.minibatch == derive_seed(1, "minibatch"));
}

TEST_CASE("generate writes the four portfolios and the mortality table") {
  const auto dir = scratch("generate");
  const auto files = cmd_generate(preset("desk"), dir);
  REQUIRE(files.size() == 5);
  CHECK(data_rows(dir / "input.csv") == 1000);
  CHECK(data_rows(dir / "representatives.csv") == 30);
  CHECK(data_rows(dir / "training.csv") == 50);
  CHECK(data_rows(dir / "validation.csv") == 50);
  CHECK(data_rows(dir / "mortality.csv") == 91);
  const auto first = read_file(dir / "input.csv");
  cmd_generate(preset("desk"), dir);
  CHECK(read_file(dir / "input.csv") == first);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

  // A generated input file is read back for the same portfolio.
  RunConfig from_file = preset("desk");
  from_file.input_csv = (dir / "input.csv").string();
  from_file.mortality_csv = (dir / "mortality.csv").string();
  CHECK(build_portfolios(from_file).input == build_portfolios(preset("desk")).input);
}

TEST_CASE("full-scale generate counts") {
  const auto dir = scratch("generate_paper");
  cmd_generate(preset("paper"), dir);
  CHECK(data_rows(dir / "input.csv") == 100000);
  CHECK(data_rows(dir / "representatives.csv") == 300);
  CHECK(data_rows(dir / "training.csv") == 200);
  CHECK(data_rows(dir / "validation.csv") == 250);
  fs::remove_all(dir);
}

TEST_CASE("value writes one row per contract and the total") {
  const auto dir = scratch("value");
  const auto contracts = testkit::random_contracts(5, 51);
  {
    std::ofstream os(dir / "p.csv");
    write_portfolio_csv(os, std::span(contracts).first(1));
  }
  RunConfig cfg = preset("desk");
  cfg.n_paths = 100;
  auto s = cmd_value(cfg, dir / "p.csv", dir);
  CHECK(s.contracts == 1);
  CHECK(data_rows(s.csv_path) == 1);

  {
    std::ofstream os(dir / "p5.csv");
    write_portfolio_csv(os, contracts);
  }
  s = cmd_value(cfg, dir / "p5.csv", dir);
  CHECK(data_rows(s.csv_path) == 5);
  std::ifstream is(s.csv_path);
  std::string line;
  std::getline(is, line);
  double sum = 0.0;
  while (std::getline(is, line)) sum += std::stod(line.substr(line.find(',') + 1));
  CHECK(sum == doctest::Approx(s.total).epsilon(1e-12));
  const auto j = nlohmann::json::parse(read_file(s.json_path));
  CHECK(j["total_mvl0"].get<double>() == doctest::Approx(s.total).epsilon(1e-12));

  { std::ofstream os(dir / "empty.csv"); }
  CHECK_THROWS_AS(cmd_value(cfg, dir / "empty.csv", dir), ParseError);
  {
    std::ofstream os(dir / "header_only.csv");
    os << "id,rider,gender,age,account_value,gd,gw,withdrawal_rate,maturity\n";
  }
  CHECK_THROWS_AS(cmd_value(cfg, dir / "header_only.csv", dir), ParseError);
}

TEST_CASE("compare reports relative errors and the speed-up") {
  nlohmann::json mc{{"scr", 100.0}, {"mvl0", 50.0}, {"mvl1_q995", 80.0}, {"timings", {{"total", 49334.0}}}};
  nlohmann::json nn{{"scr", 103.0}, {"mvl0", 49.0}, {"mvl1_q995", 80.0}, {"timings", {{"total", 8370.0}}}};
  const auto c = compare_reports(nn, mc);
  CHECK(c.scr_error == doctest::Approx(0.03));
  CHECK(c.mvl0_error == doctest::Approx(-0.02));
  CHECK(c.mvl1_q995_error == 0.0);
  CHECK(c.speedup == doctest::Approx(5.89).epsilon(0.001));
  const auto same = compare_reports(mc, mc);
  CHECK(same.scr_error == 0.0);
  CHECK(same.speedup == 1.0);
  auto missing = mc;
  missing.erase("scr");
  CHECK_THROWS_AS(compare_reports(missing, mc), SchemaError);
  CHECK_THROWS_AS(compare_reports(mc, nlohmann::json::object()), SchemaError);
}

TEST_CASE("scr runs write reports with a reproducible config echo") {
  const auto dir = scratch("scr");
  const auto mc = cmd_scr(tiny(Mode::McBaseline), dir / "mc");
  CHECK(mc["mode"] == "mc");
  CHECK(mc.contains("scr"));
  CHECK(mc["timings"].contains("total"));
  CHECK(mc["config"]["master_seed"] == 0);
  CHECK(fs::exists(dir / "mc" / "report.json"));
  CHECK_FALSE(fs::exists(dir / "mc" / "network.txt"));

  const auto nn = cmd_scr(tiny(Mode::Neural), dir / "nn");
  CHECK(nn["mode"] == "nn");
  CHECK(nn.contains("fine_tune"));
  CHECK(fs::exists(dir / "nn" / "network.txt"));
  CHECK(fs::exists(dir / "nn" / "trace.csv"));
  std::ifstream net(dir / "nn" / "network.txt");
  CHECK(read_network(net).size() == 6);

  // Re-running from the echoed config reproduces the report.
  const auto echoed = parse_config_text(nn["config"]["text"].get<std::string>());
  CHECK(echoed == tiny(Mode::Neural));
  const auto again = cmd_scr(echoed, dir / "nn2");
  CHECK(without_timings(again).dump() == without_timings(nn).dump());
}

TEST_CASE("scr failures name the stage") {
  RunConfig c = tiny(Mode::Neural);
  c.n_representatives = 100000;
  CHECK_THROWS_AS(cmd_scr(c, scratch("scr_fail")), StageError);
  try {
    cmd_scr(c, scratch("scr_fail"));
  } catch (const StageError& e) {
    CHECK(e.stage() == "portfolios");
  }
}

TEST_CASE("command-line entry point") {
  const char* exe = std::getenv("VASCR_CLI");
  if (!exe) return;
  const auto dir = scratch("cli");
  const std::string base = std::string("\"") + exe + "\" --preset desk --out \"" + dir.string() + "\" ";
  CHECK(std::system((base + "generate > /dev/null").c_str()) == 0);
  CHECK(data_rows(dir / "representatives.csv") == 30);
  {
    std::ofstream os(dir / "bad.ini");
    os << "[nested]\nno_such_key = 1\n";
  }
  CHECK(std::system((base + "--config \"" + (dir / "bad.ini").string() + "\" config 2> /dev/null").c_str()) != 0);
  CHECK(std::system((base + "--mode fast scr 2> /dev/null > /dev/null").c_str()) != 0);
}
