#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "vascr/config.hpp"

namespace vascr {

// Input portfolio and the three sampled sets of a run.
struct Portfolios {
  std::vector<VaContract> input;
  std::vector<VaContract> representatives;
  std::vector<VaContract> training;
  std::vector<VaContract> validation;
};

Portfolios build_portfolios(const RunConfig& cfg);
MortalityTable load_mortality(const RunConfig& cfg);
NestedInputs build_nested_inputs(const RunConfig& cfg, Portfolios portfolios);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// input.csv, representatives.csv, training.csv, validation.csv, mortality.csv.
std::vector<std::filesystem::path> cmd_generate(const RunConfig& cfg,
                                                const std::filesystem::path& out_dir);

struct ValueSummary {
  std::size_t contracts = 0;
  double total = 0.0;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

// liabilities.csv (id,mvl0,std_error) and liabilities.json.
ValueSummary cmd_value(const RunConfig& cfg, const std::filesystem::path& portfolio_csv,
                       const std::filesystem::path& out_dir);

// report.json with a config echo; network.txt and trace.csv in neural mode.
nlohmann::json cmd_scr(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct Comparison {
  double scr_error = 0.0;
  double mvl0_error = 0.0;
  double mvl1_q995_error = 0.0;
  double speedup = 0.0;  // reference total seconds / estimate total seconds
};

// SchemaError when a required field is missing or not a number.
Comparison compare_reports(const nlohmann::json& estimate, const nlohmann::json& reference);
Comparison cmd_compare(const std::filesystem::path& estimate, const std::filesystem::path& reference,
                       std::ostream& out);

// Copy of a report without its "timings" object.
nlohmann::json without_timings(nlohmann::json report);

void write_trace_csv(std::ostream& os, const TrainingTrace& trace);

}  // namespace vascr
