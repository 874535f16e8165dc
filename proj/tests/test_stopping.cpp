#include <cmath>

#include "doctest.h"
#include "vascr/errors.hpp"
#include "vascr/stopping.hpp"

using namespace vascr;

namespace {

TrainingTrace make_trace(std::size_t n, auto train, auto valid) {
  TrainingTrace t;
  for (std::size_t k = 0; k < n; ++k) t.record(50 * k, train(k), valid(k));
  return t;
}

}  // namespace

TEST_CASE("moving average is trailing and shortens at the start") {
  const double v[] = {1, 2, 3, 4, 5};
  const auto m = moving_average(v, 2);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 1.5);
  CHECK(m[4] == 4.5);
  CHECK(moving_average(v, 1) == std::vector<double>(v, v + 5));
  CHECK_THROWS_AS(moving_average(v, 0), ConfigError);
}

TEST_CASE("polynomial trend reproduces an exact polynomial") {
  std::vector<double> x, y;
  for (int k = 0; k < 30; ++k) {
    x.push_back(50.0 * k);
    const double u = k / 29.0;
    y.push_back(1.0 - 3.0 * u + 2.0 * u * u * u + 0.5 * std::pow(u, 6));
  }
  const auto p = polynomial_trend(x, y, 6);
  for (std::size_t k = 0; k < y.size(); ++k) CHECK(p[k] == doctest::Approx(y[k]).epsilon(1e-9));
  const auto c = polynomial_trend(std::span(x).first(3), std::span(y).first(3), 6);
  for (std::size_t k = 0; k < 3; ++k) CHECK(c[k] == doctest::Approx(y[k]).epsilon(1e-9));
}

TEST_CASE("monotone decreasing validation MSE never fires") {
  const auto t = make_trace(200, [](std::size_t k) { return 1.0 / (1.0 + 0.01 * k); },
                            [](std::size_t k) { return 1.0 / (1.0 + 0.02 * k); });
  CHECK_FALSE(detect_stopping_event(t, StoppingConfig{}).has_value());
}

TEST_CASE("exact parabola fires once the rise spans the window") {
  // Smoothing window 1 and degree 2 keep the trend equal to the data, so the
  // first prefix ending in trend_window rising points after the minimum at m
  // has length m + trend_window.
  StoppingConfig cfg{1, 2, 4, 10.0};
  for (std::size_t m : {3u, 10u, 25u}) {
    const auto t = make_trace(60, [](std::size_t) { return 1.0; },
                              [m](std::size_t k) { return 1.0 + std::pow(double(k) - double(m), 2); });
    const auto ev = detect_stopping_event(t, cfg);
    REQUIRE(ev.has_value());
    CHECK(ev->reason == StoppingReason::ValidationUpturn);
    CHECK(ev->index == m + cfg.trend_window - 1);
    CHECK(ev->iteration == 50 * ev->index);
  }
}

TEST_CASE("V-shaped validation MSE fires after the minimum with default settings") {
  const std::size_t m = 40;
  const auto t = make_trace(120, [](std::size_t) { return 1.0; }, [](std::size_t k) {
    return 1.0 + 0.01 * std::abs(double(k) - double(m));
  });
  const auto ev = detect_stopping_event(t, StoppingConfig{});
  REQUIRE(ev.has_value());
  CHECK(ev->reason == StoppingReason::ValidationUpturn);
  CHECK(ev->index > m);
  CHECK(ev->index < m + 20);
}

TEST_CASE("a dramatic training-MSE drop fires at the drop") {
  const std::size_t k_drop = 17;
  const auto t = make_trace(60, [](std::size_t k) { return k < k_drop ? 1.0 : 0.01; },
                            [](std::size_t k) { return 1.0 / (1.0 + 0.02 * k); });
  const auto ev = detect_stopping_event(t, StoppingConfig{});
  REQUIRE(ev.has_value());
  CHECK(ev->reason == StoppingReason::TrainingDrop);
  CHECK(ev->index == k_drop);
  // A drop of only 5x stays below the default factor of 10.
  const auto mild = make_trace(60, [](std::size_t k) { return k < k_drop ? 1.0 : 0.2; },
                               [](std::size_t k) { return 1.0 / (1.0 + 0.02 * k); });
  CHECK_FALSE(detect_stopping_event(mild, StoppingConfig{}).has_value());
}

TEST_CASE("finalize fills smoothed and trend series") {
  auto t = make_trace(30, [](std::size_t) { return 1.0; }, [](std::size_t k) { return 1.0 / (1 + k); });
  finalize_trace(t, StoppingConfig{});
  CHECK(t.smoothed_validation.size() == 30);
  CHECK(t.trend.size() == 30);
}
