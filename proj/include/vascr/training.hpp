#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vascr/interpolator.hpp"
#include "vascr/stopping.hpp"

namespace vascr {

struct TrainingConfig {
  double learning_rate = 20.0;
  std::size_t batch_size = 20;
  double mu_max = 0.99;
  std::size_t mse_interval = 50;  // record MSEs every this many iterations
  StoppingConfig stopping;
  double delta_initial = 0.005;
  double delta_finetune = 0.01;
  std::size_t max_finetune_iters = 200;
  std::size_t max_total_iters = 20'000;
  std::uint64_t rng_seed = 0;
  double target_normalizer = 6e5 - 0.5e4;
  bool batch_with_replacement = true;

  bool operator==(const TrainingConfig&) const = default;
};

void validate(const TrainingConfig& cfg);

// Everything the optimizer sees: representatives with their (normalized) MC
// values, and the labeled training and validation sets. Features depend on
// contract terms only, so they are built once and reused across scenarios;
// set_values() swaps in the MC values of a new market scenario.
struct TrainingProblem {
  std::vector<VaContract> reps;
  FeatureRanges ranges;
  double normalizer = 1.0;
  std::vector<double> rep_values;
  LabeledSet training;
  LabeledSet validation;

  static TrainingProblem build(std::span<const VaContract> reps,
                               std::span<const VaContract> training,
                               std::span<const VaContract> validation, const FeatureRanges& ranges,
                               double normalizer);

  // Raw currency values; stored divided by the normalizer.
  void set_values(std::span<const double> rep_liabilities,
                  std::span<const double> training_liabilities,
                  std::span<const double> validation_liabilities);

  // Relative distance between mean network and mean MC validation liability.
  double validation_distance(const NetworkParameters& params) const;
};

struct TrainingResult {
  NetworkParameters params;
  TrainingTrace trace;
  std::optional<StoppingEvent> event;
  std::size_t iterations = 0;
  bool converged = false;  // validation distance reached delta_initial
};

// Mini-batch NAG from zero parameters. MSEs are recorded every mse_interval
// iterations; after the first stopping event, training continues until the
// validation distance is within delta_initial or max_total_iters is reached.
TrainingResult train(const TrainingProblem& problem, const TrainingConfig& cfg);

struct FineTuneResult {
  NetworkParameters params;
  bool success = false;
  std::size_t iterations = 0;
};

// Final training phase only, from `params`, for at most max_finetune_iters
// iterations, stopping as soon as the validation distance is within
// delta_finetune. success == false asks the caller to retrain from scratch.
FineTuneResult fine_tune(const NetworkParameters& params, const TrainingProblem& problem,
                         const TrainingConfig& cfg);

}  // namespace vascr
