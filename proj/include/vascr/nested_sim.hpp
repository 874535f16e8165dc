#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vascr/interpolator.hpp"
#include "vascr/training.hpp"
#include "vascr/valuation.hpp"

namespace vascr {

// One-year growth coefficients C1 of the account value, one per outer scenario.
struct ScenarioSet {
  std::vector<double> coefficients;
  std::uint64_t rng_seed = 0;
};

// C1 = exp((mu - sigma^2 / 2) + sigma Z) under the real-world drift.
ScenarioSet generate_scenarios(std::size_t n, const MarketModel& model, std::uint64_t seed);

// n_knots equally spaced coefficients from min(C1) to max(C1), ascending.
std::vector<double> build_sample_paths(const ScenarioSet& scenarios, std::size_t n_knots);

// Portfolio liability at time 0 and at one year under a given C1; implemented
// by the MC valuator and by the trained interpolator.
class LiabilityEngine {
 public:
  virtual ~LiabilityEngine() = default;
  virtual double time_zero() = 0;
  virtual double one_year(double c1) = 0;
};

struct SamplePathSet {
  std::vector<double> knots;
  std::vector<double> mvl1;
  std::vector<double> deltas;
  double mvl0 = 0.0;
};

// Delta_s = -MVL_0 + MVL_1(C) / (1 + r) at every knot, knots visited in
// ascending order; MVL_0 is evaluated once, before the first knot.
SamplePathSet compute_delta_at_knots(std::span<const double> knots, LiabilityEngine& engine,
                                     double risk_free_rate);

struct DeltaDistribution {
  std::vector<double> values;
  std::vector<double> sorted;
};

// Piecewise-linear interpolation of knot values at x; DomainError outside the knots.
double interpolate_linear(std::span<const double> knots, std::span<const double> values, double x);

DeltaDistribution interpolate_deltas(const SamplePathSet& paths, const ScenarioSet& scenarios);

// 1-based order statistic floor(N * 0.995 + 0.5) of the ascending values.
std::size_t quantile_index(std::size_t n);
double scr_quantile(const DeltaDistribution& dist);
double scr_quantile(std::span<const double> values);

// (estimate - reference) / |reference|; DomainError when reference == 0.
double relative_error(double estimate, double reference);

class McPortfolioEngine : public LiabilityEngine {
 public:
  McPortfolioEngine(const McValuator& valuator, std::span<const VaContract> portfolio)
      : valuator_(valuator), portfolio_(portfolio) {}
  double time_zero() override { return valuator_.total(portfolio_); }
  double one_year(double c1) override { return valuator_.total(portfolio_, c1); }

 private:
  const McValuator& valuator_;
  std::span<const VaContract> portfolio_;
};

struct FineTuneStats {
  std::size_t attempts = 0;
  std::size_t successes = 0;
  std::size_t retrains = 0;
  std::size_t iterations = 0;
};

// Interpolator-backed engine. Only the representative, training and
// validation contracts are valued by MC; the input portfolio is estimated
// through the network. Each one-year call warm-starts from the previous
// network and retrains from zero when fine-tuning fails.
class NeuralPortfolioEngine : public LiabilityEngine {
 public:
  NeuralPortfolioEngine(const McValuator& valuator, std::span<const VaContract> portfolio,
                        std::span<const VaContract> reps, std::span<const VaContract> training,
                        std::span<const VaContract> validation, const FeatureRanges& ranges,
                        TrainingConfig cfg);

  double time_zero() override;
  double one_year(double c1) override;

  const NetworkParameters& network() const { return params_; }
  const TrainingResult& initial_training() const { return initial_; }
  const FineTuneStats& fine_tune_stats() const { return stats_; }
  std::size_t full_trainings() const { return full_trainings_; }
  double normalizer() const { return problem_.normalizer; }

 private:
  void load_values(std::optional<double> c1);
  double estimate() const;

  const McValuator& valuator_;
  std::span<const VaContract> portfolio_;
  std::vector<VaContract> training_set_;
  std::vector<VaContract> validation_set_;
  TrainingConfig cfg_;
  TrainingProblem problem_;
  NetworkParameters params_;
  TrainingResult initial_;
  FineTuneStats stats_;
  std::size_t full_trainings_ = 0;
  bool trained_ = false;
};

enum class Mode { McBaseline, Neural };
std::string_view to_string(Mode m);

struct NestedInputs {
  std::vector<VaContract> portfolio;
  // Neural mode only.
  std::vector<VaContract> representatives;
  std::vector<VaContract> training;
  std::vector<VaContract> validation;
  FeatureRanges feature_ranges;
  TrainingConfig training_config;

  MarketModel market;
  MortalityTable mortality;
  ValuationConfig valuation;
  std::size_t n_scenarios = 40'000;
  std::size_t n_knots = 100;
  std::uint64_t scenario_seed = 0;
  unsigned threads = 0;
};

struct KnotResult {
  double c1 = 0.0;
  double mvl1 = 0.0;
  double delta = 0.0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ScrResult {
  Mode mode = Mode::McBaseline;
  double scr = 0.0;
  double mvl0 = 0.0;
  double mvl1_q995 = 0.0;
  std::size_t n_scenarios = 0;
  std::vector<KnotResult> knots;
  std::vector<StageTiming> timings;  // last entry is "total"
  std::size_t mc_contract_valuations = 0;
  FineTuneStats fine_tune;
  std::size_t full_trainings = 0;
  // Neural mode: final network and the trace of the time-0 training.
  std::optional<NetworkParameters> network;
  std::optional<TrainingTrace> trace;
  std::size_t training_iterations = 0;
  bool training_converged = false;
  double normalizer = 0.0;

  double total_seconds() const;
};

// Full pipeline: scenarios, knots, MVL_0, per-knot MVL_1, knot deltas,
// interpolation onto every scenario, and the 99.5% order statistic.
ScrResult run_nested(const NestedInputs& inputs, Mode mode);

// Report document: results, per-knot values, counters and a "timings" object.
nlohmann::json report_to_json(const ScrResult& result);

}  // namespace vascr
