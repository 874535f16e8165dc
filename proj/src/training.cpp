#include "vascr/training.hpp"

#include <cmath>
#include <random>

#include "vascr/errors.hpp"

namespace vascr {

void validate(const TrainingConfig& c) {
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (c.batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(c.mu_max >= 0.0 && c.mu_max <= 1.0)) throw ConfigError("mu_max must lie in [0, 1]");
  if (c.mse_interval == 0) throw ConfigError("MSE interval must be at least 1");
  if (c.stopping.smoothing_window == 0 || c.stopping.trend_window < 2)
    throw ConfigError("smoothing window must be >= 1 and trend window >= 2");
  if (c.stopping.poly_degree < 0) throw ConfigError("polynomial degree must be non-negative");
  if (!(c.stopping.drop_factor > 1.0)) throw ConfigError("drop factor must exceed 1");
  if (!(c.delta_initial >= 0.0) || !(c.delta_finetune >= 0.0))
    throw ConfigError("distance thresholds must be non-negative");
  if (!(c.target_normalizer > 0.0)) throw ConfigError("target normalizer must be positive");
}

TrainingProblem TrainingProblem::build(std::span<const VaContract> reps,
                                       std::span<const VaContract> training,
                                       std::span<const VaContract> validation,
                                       const FeatureRanges& ranges, double normalizer) {
  if (reps.empty() || training.empty() || validation.empty())
    throw ConfigError("representative, training and validation sets must be non-empty");
  if (!(normalizer > 0.0)) throw ConfigError("target normalizer must be positive");
  TrainingProblem p;
  p.reps.assign(reps.begin(), reps.end());
  p.ranges = ranges;
  p.normalizer = normalizer;
  p.rep_values.assign(reps.size(), 0.0);
  p.training.features = FeatureMatrix(training, reps, ranges);
  p.training.targets.assign(training.size(), 0.0);
  p.validation.features = FeatureMatrix(validation, reps, ranges);
  p.validation.targets.assign(validation.size(), 0.0);
  return p;
}

void TrainingProblem::set_values(std::span<const double> rep_liabilities,
                                 std::span<const double> training_liabilities,
                                 std::span<const double> validation_liabilities) {
  if (rep_liabilities.size() != rep_values.size() ||
      training_liabilities.size() != training.targets.size() ||
      validation_liabilities.size() != validation.targets.size())
    throw ConfigError("liability vectors do not match the problem sets");
  for (std::size_t i = 0; i < rep_values.size(); ++i) rep_values[i] = rep_liabilities[i] / normalizer;
  for (std::size_t k = 0; k < training.targets.size(); ++k)
    training.targets[k] = training_liabilities[k] / normalizer;
  for (std::size_t k = 0; k < validation.targets.size(); ++k)
    validation.targets[k] = validation_liabilities[k] / normalizer;
}

double TrainingProblem::validation_distance(const NetworkParameters& params) const {
  double nn = 0.0;
  double mc = 0.0;
  for (std::size_t k = 0; k < validation.targets.size(); ++k) {
    nn += forward(params, validation.features.row(k), rep_values);
    mc += validation.targets[k];
  }
  return relative_distance(nn, mc);
}

namespace {

class BatchSampler {
 public:
  BatchSampler(std::size_t population, const TrainingConfig& cfg)
      : population_(population),
        size_(cfg.batch_with_replacement ? cfg.batch_size : std::min(cfg.batch_size, population)),
        with_replacement_(cfg.batch_with_replacement),
        rng_(cfg.rng_seed),
        batch_(size_),
        pool_(population) {
    for (std::size_t k = 0; k < population; ++k) pool_[k] = k;
  }

  std::span<const std::size_t> next() {
    if (with_replacement_) {
      std::uniform_int_distribution<std::size_t> pick(0, population_ - 1);
      for (auto& b : batch_) b = pick(rng_);
    } else {
      for (std::size_t i = 0; i < size_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, population_ - 1);
        std::swap(pool_[i], pool_[pick(rng_)]);
        batch_[i] = pool_[i];
      }
    }
    return batch_;
  }

 private:
  std::size_t population_;
  std::size_t size_;
  bool with_replacement_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> batch_;
  std::vector<std::size_t> pool_;
};

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingError(std::string("non-finite ") + what + " (divergence)");
}

}  // namespace

TrainingResult train(const TrainingProblem& problem, const TrainingConfig& cfg) {
  validate(cfg);
  TrainingResult out;
  out.params = NetworkParameters::zeros(problem.reps.size());
  NetworkParameters velocity = NetworkParameters::zeros(problem.reps.size());
  BatchSampler sampler(problem.training.targets.size(), cfg);

  for (std::size_t t = 0;; ++t) {
    if (t % cfg.mse_interval == 0) {
      const double tr = mse(out.params, problem.training, problem.rep_values);
      const double va = mse(out.params, problem.validation, problem.rep_values);
      check_finite(tr, "training MSE");
      check_finite(va, "validation MSE");
      out.trace.record(t, tr, va);
      if (!out.event) out.event = stopping_event_at(out.trace, out.trace.size(), cfg.stopping);
    }
    if (out.event && problem.validation_distance(out.params) <= cfg.delta_initial) {
      out.converged = true;
      out.iterations = t;
      break;
    }
    if (t >= cfg.max_total_iters) {
      out.iterations = t;
      break;
    }
    nag_step(out.params, velocity, problem.training, sampler.next(), problem.rep_values,
             cfg.learning_rate, momentum_coeff(t, cfg.mu_max));
  }
  if (out.event) out.trace.stopping_iteration = out.event->iteration;
  finalize_trace(out.trace, cfg.stopping);
  return out;
}

FineTuneResult fine_tune(const NetworkParameters& params, const TrainingProblem& problem,
                         const TrainingConfig& cfg) {
  validate(cfg);
  FineTuneResult out;
  out.params = params;
  NetworkParameters velocity = NetworkParameters::zeros(params.size());
  BatchSampler sampler(problem.training.targets.size(), cfg);
  for (std::size_t t = 0;; ++t) {
    const double d = problem.validation_distance(out.params);
    check_finite(d, "validation distance");
    if (d <= cfg.delta_finetune) {
      out.success = true;
      out.iterations = t;
      return out;
    }
    if (t >= cfg.max_finetune_iters) {
      out.iterations = t;
      return out;
    }
    nag_step(out.params, velocity, problem.training, sampler.next(), problem.rep_values,
             cfg.learning_rate, momentum_coeff(t, cfg.mu_max));
  }
}

}  // namespace vascr
