#include "vascr/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vascr/errors.hpp"
#include "vascr/text.hpp"

namespace vascr {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError(stage, e.what()));
  }
}

std::string portfolio_text(std::span<const VaContract> contracts) {
  std::ostringstream os;
  write_portfolio_csv(os, contracts);
  return os.str();
}

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number())
    throw SchemaError(std::string("report is missing numeric field '") + key + "'");
  return j[key].get<double>();
}

double total_seconds(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("timings") || !j["timings"].is_object())
    throw SchemaError("report is missing the 'timings' object");
  return number_field(j["timings"], "total");
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Portfolios build_portfolios(const RunConfig& cfg) {
  const ModuleSeeds seeds = derive_module_seeds(cfg.master_seed);
  Portfolios p;
  if (!cfg.input_csv.empty()) {
    std::istringstream is(read_file(cfg.input_csv));
    try {
      p.input = read_portfolio_csv(is);
    } catch (const ParseError& e) {
      throw ParseError(cfg.input_csv + ": " + e.what(), e.line());
    }
  } else {
    p.input = generate_synthetic_portfolio({cfg.portfolio_size, cfg.ranges, seeds.portfolio});
  }
  p.representatives =
      sample_representatives(cfg.representative_grid, cfg.n_representatives, seeds.representatives);
  p.training = sample_representatives(cfg.training_grid, cfg.n_training, seeds.training_sample);
  p.validation = sample_validation(p.input, cfg.n_validation, seeds.validation);
  return p;
}

MortalityTable load_mortality(const RunConfig& cfg) {
  if (cfg.mortality_csv.empty()) return MortalityTable::gompertz_makeham();
  std::istringstream is(read_file(cfg.mortality_csv));
  MortalityTable t = read_mortality_csv(is);
  validate(t);
  return t;
}

NestedInputs build_nested_inputs(const RunConfig& cfg, Portfolios portfolios) {
  const ModuleSeeds seeds = derive_module_seeds(cfg.master_seed);
  NestedInputs in;
  in.portfolio = std::move(portfolios.input);
  in.representatives = std::move(portfolios.representatives);
  in.training = std::move(portfolios.training);
  in.validation = std::move(portfolios.validation);
  in.feature_ranges = FeatureRanges::from(cfg.ranges);
  in.training_config = cfg.training;
  in.training_config.rng_seed = seeds.minibatch;
  in.market = cfg.market;
  in.mortality = load_mortality(cfg);
  in.valuation = {cfg.n_paths, seeds.valuation, cfg.common_random_numbers};
  in.n_scenarios = cfg.n_scenarios;
  in.n_knots = cfg.n_knots;
  in.scenario_seed = seeds.scenarios;
  in.threads = cfg.threads;
  return in;
}

std::vector<fs::path> cmd_generate(const RunConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  const Portfolios p = build_portfolios(cfg);
  const std::pair<const char*, const std::vector<VaContract>*> sets[] = {
      {"input.csv", &p.input},
      {"representatives.csv", &p.representatives},
      {"training.csv", &p.training},
      {"validation.csv", &p.validation}};
  std::vector<fs::path> written;
  for (const auto& [name, contracts] : sets) {
    written.push_back(out_dir / name);
    write_file_atomic(written.back(), portfolio_text(*contracts));
  }
  std::ostringstream os;
  write_mortality_csv(os, load_mortality(cfg));
  written.push_back(out_dir / "mortality.csv");
  write_file_atomic(written.back(), os.str());
  return written;
}

ValueSummary cmd_value(const RunConfig& cfg, const fs::path& portfolio_csv, const fs::path& out_dir) {
  validate(cfg);
  std::istringstream is(read_file(portfolio_csv));
  std::vector<VaContract> contracts;
  try {
    contracts = read_portfolio_csv(is);
  } catch (const ParseError& e) {
    throw ParseError(portfolio_csv.string() + ": " + e.what(), e.line());
  }
  if (contracts.empty()) throw ParseError(portfolio_csv.string() + ": no contracts", 1);

  const MarketModel& m = cfg.market;
  const MortalityTable table = load_mortality(cfg);
  const ValuationConfig vc{cfg.n_paths, derive_module_seeds(cfg.master_seed).valuation,
                           cfg.common_random_numbers};

  std::vector<LiabilityEstimate> values(contracts.size());
  for (std::size_t i = 0; i < contracts.size(); ++i) values[i] = value_contract(contracts[i], m, table, vc);

  ValueSummary s;
  s.contracts = contracts.size();
  std::ostringstream csv;
  csv << "id,mvl0,std_error\n";
  for (std::size_t i = 0; i < contracts.size(); ++i) {
    s.total += values[i].mean;
    csv << contracts[i].id << ',' << text::shortest(values[i].mean) << ','
        << text::shortest(values[i].std_error) << '\n';
  }
  s.csv_path = out_dir / "liabilities.csv";
  s.json_path = out_dir / "liabilities.json";
  write_file_atomic(s.csv_path, csv.str());

  nlohmann::json j{{"portfolio", portfolio_csv.string()},
                   {"contracts", s.contracts},
                   {"total_mvl0", s.total},
                   {"n_paths", cfg.n_paths},
                   {"master_seed", cfg.master_seed}};
  write_file_atomic(s.json_path, j.dump(2) + "\n");
  return s;
}

void write_trace_csv(std::ostream& os, const TrainingTrace& t) {
  os << "iteration,training_mse,validation_mse,smoothed_validation,trend\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << t.iterations[k] << ',' << text::shortest(t.training_mse[k]) << ','
       << text::shortest(t.validation_mse[k]) << ',';
    if (k < t.smoothed_validation.size()) os << text::shortest(t.smoothed_validation[k]);
    os << ',';
    if (k < t.trend.size()) os << text::shortest(t.trend[k]);
    os << '\n';
  }
}

nlohmann::json cmd_scr(const RunConfig& cfg, const fs::path& out_dir) {
  staged("config", [&] { validate(cfg); });
  Portfolios p = staged("portfolios", [&] { return build_portfolios(cfg); });
  NestedInputs in = staged("inputs", [&] { return build_nested_inputs(cfg, std::move(p)); });
  const ScrResult r = staged("nested", [&] { return run_nested(in, cfg.mode); });

  nlohmann::json report = report_to_json(r);
  report["config"] = {{"master_seed", cfg.master_seed}, {"text", serialize_config(cfg)}};
  staged("write", [&] {
    if (r.network) {
      std::ostringstream net;
      write_network(net, *r.network, r.normalizer);
      write_file_atomic(out_dir / "network.txt", net.str());
    }
    if (r.trace) {
      std::ostringstream tr;
      write_trace_csv(tr, *r.trace);
      write_file_atomic(out_dir / "trace.csv", tr.str());
    }
    write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
  });
  return report;
}

Comparison compare_reports(const nlohmann::json& est, const nlohmann::json& ref) {
  Comparison c;
  c.scr_error = relative_error(number_field(est, "scr"), number_field(ref, "scr"));
  c.mvl0_error = relative_error(number_field(est, "mvl0"), number_field(ref, "mvl0"));
  c.mvl1_q995_error = relative_error(number_field(est, "mvl1_q995"), number_field(ref, "mvl1_q995"));
  const double te = total_seconds(est);
  if (te <= 0.0) throw SchemaError("estimate report has a non-positive total time");
  c.speedup = total_seconds(ref) / te;
  return c;
}

Comparison cmd_compare(const fs::path& estimate, const fs::path& reference, std::ostream& out) {
  auto load = [](const fs::path& p) {
    try {
      return nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(p.string() + ": " + e.what());
    }
  };
  const Comparison c = compare_reports(load(estimate), load(reference));
  out << std::left << std::setw(12) << "quantity" << "relative_error\n";
  out << std::setw(12) << "scr" << text::shortest(c.scr_error) << '\n';
  out << std::setw(12) << "mvl0" << text::shortest(c.mvl0_error) << '\n';
  out << std::setw(12) << "mvl1_q995" << text::shortest(c.mvl1_q995_error) << '\n';
  out << std::setw(12) << "speedup" << text::shortest(c.speedup) << '\n';
  return c;
}

nlohmann::json without_timings(nlohmann::json report) {
  report.erase("timings");
  return report;
}

}  // namespace vascr
