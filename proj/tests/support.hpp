#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vascr/interpolator.hpp"
#include "vascr/portfolio.hpp"
#include "vascr/valuation.hpp"

namespace testkit {

inline std::vector<vascr::VaContract> random_contracts(std::size_t n, std::uint64_t seed) {
  vascr::PortfolioSpec spec;
  spec.size = n;
  spec.rng_seed = seed;
  return vascr::generate_synthetic_portfolio(spec);
}

// A small random network problem: representatives, a labeled set with random
// targets, and random parameters of moderate size.
struct RandomProblem {
  std::vector<vascr::VaContract> reps;
  std::vector<vascr::VaContract> train;
  vascr::LabeledSet set;
  std::vector<double> rep_values;
  vascr::NetworkParameters params;
  std::vector<std::size_t> batch;
};

inline RandomProblem random_problem(std::mt19937_64& rng, std::size_t n_reps, std::size_t n_train,
                                    double param_scale = 1.0) {
  RandomProblem p;
  p.reps = random_contracts(n_reps, rng());
  p.train = random_contracts(n_train, rng());
  const auto ranges = vascr::FeatureRanges::from(vascr::AttributeRanges{});
  p.set.features = vascr::FeatureMatrix(p.train, p.reps, ranges);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, param_scale);
  for (std::size_t k = 0; k < n_train; ++k) p.set.targets.push_back(unit(rng));
  for (std::size_t i = 0; i < n_reps; ++i) p.rep_values.push_back(unit(rng));
  p.params = vascr::NetworkParameters::zeros(n_reps);
  for (auto& w : p.params.weights)
    for (double& x : w) x = normal(rng);
  for (double& b : p.params.biases) b = normal(rng);
  std::uniform_int_distribution<std::size_t> pick(0, n_train - 1);
  const std::size_t nb = 1 + pick(rng);
  for (std::size_t k = 0; k < nb; ++k) p.batch.push_back(pick(rng));
  return p;
}

// Visit every scalar parameter.
template <typename F>
void for_each_parameter(vascr::NetworkParameters& p, F&& f) {
  for (auto& w : p.weights)
    for (double& x : w) f(x);
  for (double& b : p.biases) f(b);
}

// Fourth-order central difference (Richardson on steps h and h/2) of the batch MSE.
inline vascr::NetworkParameters finite_difference_gradient(const RandomProblem& p, double h = 1e-2) {
  vascr::NetworkParameters probe = p.params;
  vascr::NetworkParameters out = vascr::NetworkParameters::zeros(p.params.size());
  std::vector<double*> slots;
  for_each_parameter(out, [&](double& x) { slots.push_back(&x); });
  std::size_t j = 0;
  auto loss = [&] { return vascr::mse(probe, p.set, p.batch, p.rep_values); };
  for_each_parameter(probe, [&](double& x) {
    const double x0 = x;
    auto central = [&](double step) {
      x = x0 + step;
      const double up = loss();
      x = x0 - step;
      const double down = loss();
      x = x0;
      return (up - down) / (2.0 * step);
    };
    const double d1 = central(h);
    const double d2 = central(h / 2.0);
    *slots[j++] = (4.0 * d2 - d1) / 3.0;
  });
  return out;
}

// Component-wise relative error, each denominator floored at a small fraction
// of the largest reference component.
inline double max_relative_error(vascr::NetworkParameters a, vascr::NetworkParameters b) {
  std::vector<double> xa, xb;
  for_each_parameter(a, [&](double& x) { xa.push_back(x); });
  for_each_parameter(b, [&](double& x) { xb.push_back(x); });
  double scale = 0.0;
  for (double x : xb) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    const double den = std::max({std::abs(xa[i]), std::abs(xb[i]), 1e-6 * scale, 1e-300});
    worst = std::max(worst, std::abs(xa[i] - xb[i]) / den);
  }
  return worst;
}

// Deterministic cash-flow ledger at zero volatility, coded year by year from
// the guarantee rules: growth by e^r, death benefit on the pre-withdrawal base,
// withdrawal shortfall while alive, dollar-for-dollar base reduction.
inline double deterministic_liability(const vascr::VaContract& c, double r,
                                      const vascr::MortalityTable& table) {
  const bool wb = c.rider == vascr::Rider::GmdbGmwb;
  double account = c.account_value;
  double death_base = c.death_benefit_base;
  double remaining = wb ? c.withdrawal_benefit_base : 0.0;
  double in_force = 1.0;
  double total = 0.0;
  for (int t = 1; t <= c.maturity; ++t) {
    const double q = vascr::q_x(table, c.age + t - 1, c.gender);
    account = account * std::exp(r);
    const double withdrawal = wb ? std::min(c.withdrawal_rate * c.withdrawal_benefit_base, remaining) : 0.0;
    const double death_claim = in_force * q * std::max(0.0, death_base - account);
    const double survivors = in_force * (1.0 - q);
    const double wb_claim = survivors * std::max(0.0, withdrawal - account);
    total += (death_claim + wb_claim) * std::exp(-r * t);
    in_force = survivors;
    account = std::max(0.0, account - withdrawal);
    death_base = std::max(0.0, death_base - withdrawal);
    remaining -= withdrawal;
  }
  return total;
}

inline double relative_gap(double a, double b) {
  const double den = std::max(std::abs(a), std::abs(b));
  return den == 0.0 ? 0.0 : std::abs(a - b) / den;
}

}  // namespace testkit
