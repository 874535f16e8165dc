#include "vascr/stopping.hpp"

#include <Eigen/Dense>
#include <algorithm>

#include "vascr/errors.hpp"

namespace vascr {

void TrainingTrace::record(std::size_t iteration, double train, double validation) {
  iterations.push_back(iteration);
  training_mse.push_back(train);
  validation_mse.push_back(validation);
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw ConfigError("moving-average window must be at least 1");
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    running += values[k];
    if (k >= window) running -= values[k - window];
    out[k] = running / static_cast<double>(std::min(k + 1, window));
  }
  return out;
}

std::vector<double> polynomial_trend(std::span<const double> x, std::span<const double> y,
                                     int degree) {
  if (x.size() != y.size() || x.empty()) throw ConfigError("trend fit needs matching, non-empty data");
  const auto n = static_cast<Eigen::Index>(x.size());
  const int deg = std::clamp(degree, 0, static_cast<int>(n) - 1);
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;

  Eigen::MatrixXd v(n, deg + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double u = span > 0.0 ? (x[static_cast<std::size_t>(r)] - lo) / span : 0.0;
    double p = 1.0;
    for (int c = 0; c <= deg; ++c) {
      v(r, c) = p;
      p *= u;
    }
  }
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::VectorXd coef = v.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd fit = v * coef;
  return std::vector<double>(fit.data(), fit.data() + n);
}

namespace {

std::vector<double> trend_of_prefix(const TrainingTrace& trace, std::size_t count,
                                    const StoppingConfig& cfg) {
  std::span<const double> val(trace.validation_mse.data(), count);
  const auto smoothed = moving_average(val, cfg.smoothing_window);
  std::vector<double> x(count);
  for (std::size_t k = 0; k < count; ++k) x[k] = static_cast<double>(trace.iterations[k]);
  return polynomial_trend(x, smoothed, cfg.poly_degree);
}

}  // namespace

bool upturn_at(const TrainingTrace& trace, std::size_t count, const StoppingConfig& cfg) {
  if (cfg.trend_window < 2) throw ConfigError("trend window must be at least 2");
  if (count > trace.size()) count = trace.size();
  if (count < cfg.smoothing_window + cfg.trend_window) return false;
  const auto p = trend_of_prefix(trace, count, cfg);
  const std::size_t last = count - 1;
  const std::size_t first = count - cfg.trend_window;
  if (first == 0) return false;
  if (!(p[first - 1] > p[first])) return false;
  for (std::size_t k = first + 1; k <= last; ++k)
    if (!(p[k] > p[k - 1])) return false;
  return true;
}

std::optional<StoppingEvent> stopping_event_at(const TrainingTrace& trace, std::size_t count,
                                               const StoppingConfig& cfg) {
  if (count == 0 || count > trace.size()) return std::nullopt;
  const std::size_t k = count - 1;
  if (k > 0 && trace.training_mse[k] < trace.training_mse[0] / cfg.drop_factor)
    return StoppingEvent{k, trace.iterations[k], StoppingReason::TrainingDrop};
  if (upturn_at(trace, count, cfg))
    return StoppingEvent{k, trace.iterations[k], StoppingReason::ValidationUpturn};
  return std::nullopt;
}

std::optional<StoppingEvent> detect_stopping_event(const TrainingTrace& trace,
                                                   const StoppingConfig& cfg) {
  for (std::size_t count = 1; count <= trace.size(); ++count)
    if (auto ev = stopping_event_at(trace, count, cfg)) return ev;
  return std::nullopt;
}

void finalize_trace(TrainingTrace& trace, const StoppingConfig& cfg) {
  trace.smoothed_validation = moving_average(trace.validation_mse, cfg.smoothing_window);
  trace.trend.clear();
  if (trace.size() == 0) return;
  std::vector<double> x(trace.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(trace.iterations[k]);
  trace.trend = polynomial_trend(x, trace.smoothed_validation, cfg.poly_degree);
}

}  // namespace vascr
