#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vascr/portfolio.hpp"

namespace vascr {

// One-year death probabilities by integer age, starting at min_age.
struct MortalityTable {
  int min_age = 0;
  std::vector<double> q_male;
  std::vector<double> q_female;

  int max_age() const { return min_age + static_cast<int>(q_male.size()) - 1; }

  // q_x = min(cap, A + B c^x) for ages [min_age, max_age].
  static MortalityTable gompertz_makeham(int min_age = 15, int max_age = 105, double a = 5e-4,
                                         double b_male = 3.5e-5, double b_female = 2.5e-5,
                                         double c = 1.1, double cap = 0.98);
};

// Throws ConfigError on a malformed table (probabilities outside [0, 1), gaps,
// or missing coverage of ages 20..85).
void validate(const MortalityTable& table);

// Mortality CSV: age,q_male,q_female with consecutive ages.
void write_mortality_csv(std::ostream& os, const MortalityTable& table);
MortalityTable read_mortality_csv(std::istream& is);

double q_x(const MortalityTable& table, int age, Gender gender);

struct MarketModel {
  double risk_free_rate = 0.03;  // valuation drift and discount rate
  double drift = 0.03;           // real-world drift of one-year scenarios
  double volatility = 0.20;

  bool operator==(const MarketModel&) const = default;
};

struct ValuationConfig {
  std::size_t n_paths = 10'000;
  std::uint64_t rng_seed = 0;
  bool use_common_random_numbers = true;

  bool operator==(const ValuationConfig&) const = default;
};

struct LiabilityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Seed of the inner-simulation stream of one contract. With common random
// numbers it depends on (cfg.rng_seed, contract.id) only, so every one-year
// scenario reuses the same normal draws; otherwise c1 is mixed in as well.
std::uint64_t contract_stream_seed(const VaContract& contract, const ValuationConfig& cfg,
                                   std::optional<double> c1 = std::nullopt);

// Annual account values AV_1..AV_maturity under the risk-neutral log-normal
// model, after the GMWB withdrawal of each year and absorbed at zero.
std::vector<double> simulate_account_path(const VaContract& contract, const MarketModel& model,
                                          std::mt19937_64& rng);

// Time-0 market value of the guarantee cash flows: GMDB shortfall on death,
// GMWB withdrawal shortfall while alive, decrement-weighted and discounted.
LiabilityEstimate value_contract(const VaContract& contract, const MarketModel& model,
                                 const MortalityTable& table, const ValuationConfig& cfg);

// Time-1 market value given the first-year account growth factor c1.
// Year-one cash flows are settled at time 1 and the survivor's remaining
// guarantee is revalued from there on (see README for the exact rule).
LiabilityEstimate value_contract_at_one_year(const VaContract& contract, double c1,
                                             const MarketModel& model, const MortalityTable& table,
                                             const ValuationConfig& cfg);

// Sum of per-contract liabilities, at time 0 or at one year under c1.
double value_portfolio(std::span<const VaContract> contracts, const MarketModel& model,
                       const MortalityTable& table, const ValuationConfig& cfg,
                       std::optional<double> c1 = std::nullopt);

// Deterministic evaluation of the same cash-flow rules at zero volatility.
double closed_form_oracle(const VaContract& contract, const MarketModel& model,
                          const MortalityTable& table);
double closed_form_oracle_at_one_year(const VaContract& contract, double c1,
                                      const MarketModel& model, const MortalityTable& table);

// Contract valuer with call accounting. Per-contract values of a batch are
// computed on worker threads and returned in input order.
class McValuator {
 public:
  McValuator(MarketModel model, MortalityTable table, ValuationConfig cfg,
             unsigned threads = 0);

  std::vector<double> value_all(std::span<const VaContract> contracts,
                                std::optional<double> c1 = std::nullopt) const;
  double total(std::span<const VaContract> contracts, std::optional<double> c1 = std::nullopt) const;

  // Number of per-contract valuations performed so far.
  std::size_t calls() const { return calls_.load(); }

  const MarketModel& model() const { return model_; }
  const MortalityTable& table() const { return table_; }
  const ValuationConfig& config() const { return cfg_; }

 private:
  MarketModel model_;
  MortalityTable table_;
  ValuationConfig cfg_;
  unsigned threads_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace vascr
