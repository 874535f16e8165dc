#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vascr {

// MSE history recorded every few training iterations.
struct TrainingTrace {
  std::vector<std::size_t> iterations;
  std::vector<double> training_mse;
  std::vector<double> validation_mse;
  // Filled by finalize_trace(): smoothed validation MSE and its polynomial trend.
  std::vector<double> smoothed_validation;
  std::vector<double> trend;
  std::optional<std::size_t> stopping_iteration;

  void record(std::size_t iteration, double train, double validation);
  std::size_t size() const { return iterations.size(); }
};

struct StoppingConfig {
  std::size_t smoothing_window = 10;  // moving-average window over recorded points
  int poly_degree = 6;
  std::size_t trend_window = 4;  // points on the trend that must show the rise
  double drop_factor = 10.0;     // training MSE below initial / drop_factor

  bool operator==(const StoppingConfig&) const = default;
};

enum class StoppingReason { None, ValidationUpturn, TrainingDrop };

struct StoppingEvent {
  std::size_t index = 0;      // position in the trace
  std::size_t iteration = 0;  // training iteration at that position
  StoppingReason reason = StoppingReason::None;
};

// Trailing simple moving average; out[k] averages values[max(0, k-w+1)..k].
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

// Least-squares polynomial through (x, y) with x mapped affinely onto [0, 1];
// returns the fitted values at the given x.
std::vector<double> polynomial_trend(std::span<const double> x, std::span<const double> y,
                                     int degree);

// Does the trend of the first `count` recorded points end in an upturn? The
// last trend_window values must be strictly increasing, starting from a point
// that was reached by a decrease (a local minimum).
bool upturn_at(const TrainingTrace& trace, std::size_t count, const StoppingConfig& cfg);

// Stopping test as seen online after the first `count` points were recorded.
std::optional<StoppingEvent> stopping_event_at(const TrainingTrace& trace, std::size_t count,
                                               const StoppingConfig& cfg);

// First position at which a stopping event fires, scanning the trace as it
// would have been seen during training.
std::optional<StoppingEvent> detect_stopping_event(const TrainingTrace& trace,
                                                   const StoppingConfig& cfg);

// Fill smoothed_validation and trend over the whole trace.
void finalize_trace(TrainingTrace& trace, const StoppingConfig& cfg);

}  // namespace vascr
