#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "vascr/nested_sim.hpp"
#include "vascr/portfolio.hpp"
#include "vascr/training.hpp"
#include "vascr/valuation.hpp"

namespace vascr {

// Every tunable of a run. Serialized as an INI-style text file:
//
//   # comment
//   [section]
//   key = value            lists are comma separated
//
// Sections: run, portfolio, sampling, representative_grid, training_grid,
// market, valuation, training, nested. Unknown sections or keys are errors.
struct RunConfig {
  // [run]
  Mode mode = Mode::Neural;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency

  // [portfolio]
  std::size_t portfolio_size = 100'000;
  AttributeRanges ranges;
  std::string input_csv;  // load the input portfolio instead of generating it

  // [sampling], [representative_grid], [training_grid]
  std::size_t n_representatives = 300;
  std::size_t n_training = 200;
  std::size_t n_validation = 250;
  SamplingGrid representative_grid = vascr::representative_grid();
  SamplingGrid training_grid = vascr::training_grid();

  // [market], [valuation]
  MarketModel market;
  std::size_t n_paths = 10'000;
  bool common_random_numbers = true;
  std::string mortality_csv;  // empty = built-in Gompertz-Makeham table

  // [training]; the mini-batch seed is derived from master_seed
  TrainingConfig training;

  // [nested]
  std::size_t n_scenarios = 40'000;
  std::size_t n_knots = 100;

  bool operator==(const RunConfig&) const = default;
};

// "paper": 100,000 contracts, 300/200/250 sampled sets, 10,000 inner paths,
// 40,000 scenarios, 100 knots. "desk": 1,000 contracts, 30/50/50, 1,000
// paths, 4,000 scenarios, 20 knots.
RunConfig preset(std::string_view name);

// ConfigError unless every bound holds and every referenced file exists.
void validate(const RunConfig& cfg);

// Apply the file's keys on top of `base`.
RunConfig parse_config(std::istream& is, RunConfig base = preset("paper"));
RunConfig parse_config_text(std::string_view text, RunConfig base = preset("paper"));
std::string serialize_config(const RunConfig& cfg);

// Seeds of all stochastic stages, each derive_seed(master, "<name>").
struct ModuleSeeds {
  std::uint64_t portfolio = 0;        // "portfolio"
  std::uint64_t representatives = 0;  // "representatives"
  std::uint64_t training_sample = 0;  // "training_sample"
  std::uint64_t validation = 0;       // "validation"
  std::uint64_t valuation = 0;        // "valuation"
  std::uint64_t minibatch = 0;        // "minibatch"
  std::uint64_t scenarios = 0;        // "scenarios"
};
ModuleSeeds derive_module_seeds(std::uint64_t master);

}  // namespace vascr
