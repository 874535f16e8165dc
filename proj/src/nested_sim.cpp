#include "vascr/nested_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <random>

#include "vascr/errors.hpp"
#include "vascr/seeding.hpp"

namespace vascr {

ScenarioSet generate_scenarios(std::size_t n, const MarketModel& model, std::uint64_t seed) {
  if (n < 2) throw ConfigError("at least two outer scenarios are required");
  if (model.volatility < 0) throw ConfigError("volatility must be non-negative");
  ScenarioSet s;
  s.rng_seed = seed;
  s.coefficients.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double drift = model.drift - 0.5 * model.volatility * model.volatility;
  for (auto& c : s.coefficients) c = std::exp(drift + model.volatility * normal(rng));
  return s;
}

std::vector<double> build_sample_paths(const ScenarioSet& scenarios, std::size_t n_knots) {
  if (n_knots < 2) throw ConfigError("at least two knots are required");
  if (scenarios.coefficients.empty()) throw ConfigError("scenario set is empty");
  const auto [lo_it, hi_it] =
      std::minmax_element(scenarios.coefficients.begin(), scenarios.coefficients.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw ConfigError("scenario range has zero width");
  std::vector<double> knots(n_knots);
  const double step = (hi - lo) / static_cast<double>(n_knots - 1);
  for (std::size_t i = 0; i < n_knots; ++i) knots[i] = lo + static_cast<double>(i) * step;
  knots.front() = lo;
  knots.back() = hi;
  return knots;
}

SamplePathSet compute_delta_at_knots(std::span<const double> knots, LiabilityEngine& engine,
                                     double risk_free_rate) {
  if (knots.empty()) throw ConfigError("no knots");
  if (!std::is_sorted(knots.begin(), knots.end())) throw ConfigError("knots must be ascending");
  SamplePathSet out;
  out.knots.assign(knots.begin(), knots.end());
  out.mvl0 = engine.time_zero();
  for (double c : knots) {
    const double mvl1 = engine.one_year(c);
    out.mvl1.push_back(mvl1);
    out.deltas.push_back(-out.mvl0 + mvl1 / (1.0 + risk_free_rate));
  }
  return out;
}

double interpolate_linear(std::span<const double> knots, std::span<const double> values, double x) {
  if (knots.empty() || knots.size() != values.size())
    throw ConfigError("knots and values must be non-empty and of equal length");
  if (x < knots.front() || x > knots.back())
    throw DomainError("point outside the knot range");
  if (knots.size() == 1 || x == knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const auto hi = static_cast<std::size_t>(it - knots.begin());
  const auto lo = hi - 1;
  if (x == knots[lo]) return values[lo];
  const double w = (x - knots[lo]) / (knots[hi] - knots[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

DeltaDistribution interpolate_deltas(const SamplePathSet& paths, const ScenarioSet& scenarios) {
  DeltaDistribution d;
  d.values.reserve(scenarios.coefficients.size());
  for (double c : scenarios.coefficients)
    d.values.push_back(interpolate_linear(paths.knots, paths.deltas, c));
  d.sorted = d.values;
  std::stable_sort(d.sorted.begin(), d.sorted.end());
  return d;
}

std::size_t quantile_index(std::size_t n) {
  // floor(0.995 n + 0.5) in exact integer arithmetic.
  return (995 * n + 500) / 1000;
}

double scr_quantile(const DeltaDistribution& dist) {
  if (dist.sorted.empty()) throw DomainError("empty loss distribution");
  return dist.sorted[quantile_index(dist.sorted.size()) - 1];
}

double scr_quantile(std::span<const double> values) {
  DeltaDistribution d;
  d.sorted.assign(values.begin(), values.end());
  std::stable_sort(d.sorted.begin(), d.sorted.end());
  return scr_quantile(d);
}

double relative_error(double estimate, double reference) {
  if (reference == 0.0) throw DomainError("relative error against zero is undefined");
  return (estimate - reference) / std::abs(reference);
}

NeuralPortfolioEngine::NeuralPortfolioEngine(const McValuator& valuator,
                                             std::span<const VaContract> portfolio,
                                             std::span<const VaContract> reps,
                                             std::span<const VaContract> training,
                                             std::span<const VaContract> validation,
                                             const FeatureRanges& ranges, TrainingConfig cfg)
    : valuator_(valuator),
      portfolio_(portfolio),
      training_set_(training.begin(), training.end()),
      validation_set_(validation.begin(), validation.end()),
      cfg_(cfg),
      problem_(TrainingProblem::build(reps, training, validation, ranges, cfg.target_normalizer)) {
  validate(cfg_);
}

void NeuralPortfolioEngine::load_values(std::optional<double> c1) {
  const auto rep = valuator_.value_all(problem_.reps, c1);
  const auto tr = valuator_.value_all(training_set_, c1);
  const auto va = valuator_.value_all(validation_set_, c1);
  problem_.set_values(rep, tr, va);
}

double NeuralPortfolioEngine::estimate() const {
  return estimate_portfolio_liability(params_, portfolio_, problem_.reps, problem_.rep_values,
                                      problem_.ranges, problem_.normalizer);
}

double NeuralPortfolioEngine::time_zero() {
  load_values(std::nullopt);
  initial_ = train(problem_, cfg_);
  ++full_trainings_;
  params_ = initial_.params;
  trained_ = true;
  return estimate();
}

double NeuralPortfolioEngine::one_year(double c1) {
  load_values(c1);
  if (!trained_) {
    params_ = train(problem_, cfg_).params;
    ++full_trainings_;
    trained_ = true;
    return estimate();
  }
  TrainingConfig ft = cfg_;
  ft.rng_seed = mix64(cfg_.rng_seed ^ (stats_.attempts + 1));
  const FineTuneResult tuned = fine_tune(params_, problem_, ft);
  ++stats_.attempts;
  stats_.iterations += tuned.iterations;
  if (tuned.success) {
    ++stats_.successes;
    params_ = tuned.params;
  } else {
    ++stats_.retrains;
    ++full_trainings_;
    params_ = train(problem_, cfg_).params;
  }
  return estimate();
}

std::string_view to_string(Mode m) { return m == Mode::Neural ? "nn" : "mc"; }

double ScrResult::total_seconds() const { return timings.empty() ? 0.0 : timings.back().seconds; }

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink)
      : sink_(sink), start_(Clock::now()), last_(start_) {}
  void lap(std::string stage) {
    const auto now = Clock::now();
    sink_.push_back({std::move(stage), std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }
  void skip() { last_ = Clock::now(); }
  void total() {
    sink_.push_back({"total", std::chrono::duration<double>(Clock::now() - start_).count()});
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::vector<StageTiming>& sink_;
  Clock::time_point start_;
  Clock::time_point last_;
};

// Splits wall-clock time between the time-0 and one-year calls.
class TimedEngine : public LiabilityEngine {
 public:
  explicit TimedEngine(LiabilityEngine& inner) : inner_(inner) {}
  double time_zero() override { return timed(time_zero_seconds, [&] { return inner_.time_zero(); }); }
  double one_year(double c1) override {
    return timed(one_year_seconds, [&] { return inner_.one_year(c1); });
  }
  double time_zero_seconds = 0.0;
  double one_year_seconds = 0.0;

 private:
  template <typename F>
  static double timed(double& acc, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = f();
    acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return v;
  }
  LiabilityEngine& inner_;
};

}  // namespace

ScrResult run_nested(const NestedInputs& in, Mode mode) {
  if (in.portfolio.empty()) throw ConfigError("input portfolio is empty");
  ScrResult out;
  out.mode = mode;
  StageClock clock(out.timings);

  const ScenarioSet scenarios = generate_scenarios(in.n_scenarios, in.market, in.scenario_seed);
  out.n_scenarios = scenarios.coefficients.size();
  clock.lap("scenarios");

  std::vector<double> knots;
  const auto [lo, hi] =
      std::minmax_element(scenarios.coefficients.begin(), scenarios.coefficients.end());
  if (*hi > *lo)
    knots = build_sample_paths(scenarios, in.n_knots);
  else
    knots = {*lo};  // zero volatility: every scenario is the same market
  clock.lap("knots");

  const McValuator valuator(in.market, in.mortality, in.valuation, in.threads);
  std::unique_ptr<LiabilityEngine> engine;
  NeuralPortfolioEngine* neural = nullptr;
  if (mode == Mode::Neural) {
    auto nn = std::make_unique<NeuralPortfolioEngine>(valuator, in.portfolio, in.representatives,
                                                      in.training, in.validation,
                                                      in.feature_ranges, in.training_config);
    neural = nn.get();
    engine = std::move(nn);
  } else {
    engine = std::make_unique<McPortfolioEngine>(valuator, in.portfolio);
  }

  clock.lap("setup");
  TimedEngine timed(*engine);
  const SamplePathSet paths = compute_delta_at_knots(knots, timed, in.market.risk_free_rate);
  out.timings.push_back({"mvl0", timed.time_zero_seconds});
  out.timings.push_back({"mvl1_knots", timed.one_year_seconds});
  clock.skip();

  const DeltaDistribution dist = interpolate_deltas(paths, scenarios);
  std::vector<double> mvl1_all;
  mvl1_all.reserve(scenarios.coefficients.size());
  for (double c : scenarios.coefficients) mvl1_all.push_back(interpolate_linear(paths.knots, paths.mvl1, c));
  clock.lap("interpolation");

  out.scr = scr_quantile(dist);
  out.mvl1_q995 = scr_quantile(mvl1_all);
  out.mvl0 = paths.mvl0;
  clock.lap("quantile");

  for (std::size_t i = 0; i < knots.size(); ++i)
    out.knots.push_back({paths.knots[i], paths.mvl1[i], paths.deltas[i]});
  out.mc_contract_valuations = valuator.calls();
  if (neural) {
    out.fine_tune = neural->fine_tune_stats();
    out.full_trainings = neural->full_trainings();
    out.network = neural->network();
    out.trace = neural->initial_training().trace;
    out.training_iterations = neural->initial_training().iterations;
    out.training_converged = neural->initial_training().converged;
    out.normalizer = neural->normalizer();
  }
  clock.total();
  return out;
}

nlohmann::json report_to_json(const ScrResult& r) {
  nlohmann::json j;
  j["mode"] = std::string(to_string(r.mode));
  j["scr"] = r.scr;
  j["mvl0"] = r.mvl0;
  j["mvl1_q995"] = r.mvl1_q995;
  j["n_scenarios"] = r.n_scenarios;
  j["mc_contract_valuations"] = r.mc_contract_valuations;
  auto& knots = j["knots"] = nlohmann::json::array();
  for (const auto& k : r.knots) knots.push_back({{"c1", k.c1}, {"mvl1", k.mvl1}, {"delta", k.delta}});
  if (r.mode == Mode::Neural) {
    j["fine_tune"] = {{"attempts", r.fine_tune.attempts},
                      {"successes", r.fine_tune.successes},
                      {"retrains", r.fine_tune.retrains},
                      {"iterations", r.fine_tune.iterations}};
    j["training"] = {{"iterations", r.training_iterations},
                     {"converged", r.training_converged},
                     {"full_trainings", r.full_trainings},
                     {"target_normalizer", r.normalizer}};
    if (r.trace && r.trace->stopping_iteration)
      j["training"]["stopping_iteration"] = *r.trace->stopping_iteration;
    else
      j["training"]["stopping_iteration"] = nullptr;
  }
  auto& t = j["timings"] = nlohmann::json::object();
  for (const auto& s : r.timings) t[s.stage] = s.seconds;
  return j;
}

}  // namespace vascr
