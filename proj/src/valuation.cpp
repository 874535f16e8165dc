#include "vascr/valuation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>

#include "vascr/errors.hpp"
#include "vascr/seeding.hpp"
#include "vascr/text.hpp"

namespace vascr {

MortalityTable MortalityTable::gompertz_makeham(int min_age, int max_age, double a, double b_male,
                                                double b_female, double c, double cap) {
  MortalityTable t;
  t.min_age = min_age;
  for (int x = min_age; x <= max_age; ++x) {
    t.q_male.push_back(std::min(cap, a + b_male * std::pow(c, x)));
    t.q_female.push_back(std::min(cap, a + b_female * std::pow(c, x)));
  }
  return t;
}

void validate(const MortalityTable& t) {
  if (t.q_male.size() != t.q_female.size() || t.q_male.empty())
    throw ConfigError("mortality table columns are empty or of unequal length");
  if (t.min_age > 20 || t.max_age() < 85)
    throw ConfigError("mortality table must cover ages 20..85");
  for (std::size_t i = 0; i < t.q_male.size(); ++i) {
    for (double q : {t.q_male[i], t.q_female[i]})
      if (!(q >= 0.0 && q < 1.0))
        throw ConfigError("mortality rate at age " + std::to_string(t.min_age + int(i)) +
                          " outside [0, 1)");
  }
}

void write_mortality_csv(std::ostream& os, const MortalityTable& t) {
  os << "age,q_male,q_female\n";
  for (std::size_t i = 0; i < t.q_male.size(); ++i)
    os << t.min_age + static_cast<int>(i) << ',' << text::shortest(t.q_male[i]) << ','
       << text::shortest(t.q_female[i]) << '\n';
}

MortalityTable read_mortality_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty mortality file", 1);
  if (text::trim(line) != "age,q_male,q_female") throw ParseError("unexpected mortality header", 1);
  MortalityTable t;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line), ',');
    if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
    long long age = 0;
    double qm = 0, qf = 0;
    if (!text::parse_int(f[0], age) || !text::parse_double(f[1], qm) ||
        !text::parse_double(f[2], qf))
      throw ParseError("malformed mortality row", lineno);
    if (t.q_male.empty())
      t.min_age = static_cast<int>(age);
    else if (age != t.max_age() + 1)
      throw ParseError("ages must be consecutive", lineno);
    t.q_male.push_back(qm);
    t.q_female.push_back(qf);
  }
  try {
    validate(t);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), lineno);
  }
  return t;
}

double q_x(const MortalityTable& t, int age, Gender gender) {
  if (age < t.min_age || age > t.max_age())
    throw DomainError("age " + std::to_string(age) + " outside mortality table [" +
                      std::to_string(t.min_age) + ", " + std::to_string(t.max_age()) + "]");
  auto i = static_cast<std::size_t>(age - t.min_age);
  return gender == Gender::Male ? t.q_male[i] : t.q_female[i];
}

std::uint64_t contract_stream_seed(const VaContract& c, const ValuationConfig& cfg,
                                   std::optional<double> c1) {
  std::uint64_t s = stream_seed(cfg.rng_seed, static_cast<std::uint64_t>(c.id));
  if (!cfg.use_common_random_numbers && c1) s = mix64(s ^ std::bit_cast<std::uint64_t>(*c1));
  return s;
}

namespace {

// Remaining guarantee of a policyholder alive at the valuation date.
struct GuaranteeState {
  Gender gender = Gender::Male;
  int age = 0;
  int years = 0;
  double account_value = 0.0;
  double death_base = 0.0;
  double withdrawal_left = 0.0;
  double annual_withdrawal = 0.0;
};

GuaranteeState initial_state(const VaContract& c) {
  GuaranteeState s;
  s.gender = c.gender;
  s.age = c.age;
  s.years = c.maturity;
  s.account_value = c.account_value;
  s.death_base = c.death_benefit_base;
  if (c.rider == Rider::GmdbGmwb) {
    s.withdrawal_left = c.withdrawal_benefit_base;
    s.annual_withdrawal = c.withdrawal_rate * c.withdrawal_benefit_base;
  }
  return s;
}

// Guarantee schedule that does not depend on the account path: per year t the
// discounted death and survival weights, the withdrawal, and the death base.
struct Schedule {
  std::vector<double> death_weight;
  std::vector<double> survival_weight;
  std::vector<double> withdrawal;
  std::vector<double> death_base;
};

Schedule make_schedule(const GuaranteeState& s, const MarketModel& m, const MortalityTable& t) {
  Schedule out;
  const auto n = static_cast<std::size_t>(s.years);
  out.death_weight.resize(n);
  out.survival_weight.resize(n);
  out.withdrawal.resize(n);
  out.death_base.resize(n);
  double alive = 1.0;
  double gd = s.death_base;
  double left = s.withdrawal_left;
  for (std::size_t k = 0; k < n; ++k) {
    const double q = q_x(t, s.age + static_cast<int>(k), s.gender);
    const double disc = std::exp(-m.risk_free_rate * static_cast<double>(k + 1));
    const double w = std::min(s.annual_withdrawal, left);
    out.death_weight[k] = alive * q * disc;
    alive *= 1.0 - q;
    out.survival_weight[k] = alive * disc;
    out.withdrawal[k] = w;
    out.death_base[k] = gd;
    left -= w;
    gd = std::max(gd - w, 0.0);
  }
  return out;
}

LiabilityEstimate value_state(const GuaranteeState& s, const MarketModel& m,
                              const MortalityTable& t, std::size_t n_paths, std::uint64_t seed) {
  if (s.years <= 0) return {};
  const Schedule sch = make_schedule(s, m, t);
  const double drift = m.risk_free_rate - 0.5 * m.volatility * m.volatility;
  const double vol = m.volatility;
  const auto n = sch.withdrawal.size();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    double av = s.account_value;
    double pv = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      av *= std::exp(drift + vol * normal(rng));
      pv += sch.death_weight[k] * std::max(sch.death_base[k] - av, 0.0) +
            sch.survival_weight[k] * std::max(sch.withdrawal[k] - av, 0.0);
      av = std::max(av - sch.withdrawal[k], 0.0);
    }
    sum += pv;
    sum_sq += pv * pv;
  }
  const double np = static_cast<double>(n_paths);
  const double mean = sum / np;
  double se = 0.0;
  if (n_paths > 1) {
    const double var = std::max(0.0, (sum_sq - np * mean * mean) / (np - 1.0));
    se = std::sqrt(var / np);
  }
  return {mean, se};
}

struct OneYearSplit {
  double year_one = 0.0;  // settled at time 1
  double survival = 0.0;  // weight of the continuation value
  GuaranteeState next;
};

OneYearSplit split_first_year(const VaContract& c, double c1, const MortalityTable& t) {
  if (!(c1 > 0.0)) throw DomainError("growth coefficient must be positive");
  if (c.maturity < 2) throw DomainError("one-year valuation requires maturity >= 2");
  const GuaranteeState s = initial_state(c);
  const double q = q_x(t, s.age, s.gender);
  const double a1 = c1 * s.account_value;
  const double w = std::min(s.annual_withdrawal, s.withdrawal_left);

  OneYearSplit out;
  out.survival = 1.0 - q;
  out.year_one = q * std::max(s.death_base - a1, 0.0) + out.survival * std::max(w - a1, 0.0);
  out.next = s;
  out.next.age += 1;
  out.next.years -= 1;
  out.next.account_value = std::max(a1 - w, 0.0);
  out.next.death_base = std::max(s.death_base - w, 0.0);
  out.next.withdrawal_left = s.withdrawal_left - w;
  return out;
}

}  // namespace

std::vector<double> simulate_account_path(const VaContract& c, const MarketModel& m,
                                          std::mt19937_64& rng) {
  const GuaranteeState s = initial_state(c);
  const double drift = m.risk_free_rate - 0.5 * m.volatility * m.volatility;
  std::normal_distribution<double> normal;
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(std::max(s.years, 0)));
  double av = s.account_value;
  double left = s.withdrawal_left;
  for (int k = 0; k < s.years; ++k) {
    const double w = std::min(s.annual_withdrawal, left);
    av = std::max(av * std::exp(drift + m.volatility * normal(rng)) - w, 0.0);
    left -= w;
    path.push_back(av);
  }
  return path;
}

LiabilityEstimate value_contract(const VaContract& c, const MarketModel& m,
                                 const MortalityTable& t, const ValuationConfig& cfg) {
  if (cfg.n_paths == 0) throw ConfigError("n_paths must be at least 1");
  return value_state(initial_state(c), m, t, cfg.n_paths, contract_stream_seed(c, cfg));
}

LiabilityEstimate value_contract_at_one_year(const VaContract& c, double c1, const MarketModel& m,
                                             const MortalityTable& t, const ValuationConfig& cfg) {
  if (cfg.n_paths == 0) throw ConfigError("n_paths must be at least 1");
  const OneYearSplit split = split_first_year(c, c1, t);
  const LiabilityEstimate cont =
      value_state(split.next, m, t, cfg.n_paths, contract_stream_seed(c, cfg, c1));
  return {split.year_one + split.survival * cont.mean, split.survival * cont.std_error};
}

double value_portfolio(std::span<const VaContract> contracts, const MarketModel& m,
                       const MortalityTable& t, const ValuationConfig& cfg,
                       std::optional<double> c1) {
  if (contracts.empty()) throw ConfigError("portfolio is empty");
  double total = 0.0;
  for (const auto& c : contracts)
    total += c1 ? value_contract_at_one_year(c, *c1, m, t, cfg).mean
                : value_contract(c, m, t, cfg).mean;
  return total;
}

double closed_form_oracle(const VaContract& c, const MarketModel& m, const MortalityTable& t) {
  if (m.volatility != 0.0) throw DomainError("closed-form oracle requires zero volatility");
  double av = c.account_value;
  double gd = c.death_benefit_base;
  double left = c.rider == Rider::GmdbGmwb ? c.withdrawal_benefit_base : 0.0;
  const double annual = c.rider == Rider::GmdbGmwb ? c.withdrawal_rate * c.withdrawal_benefit_base : 0.0;
  const double growth = std::exp(m.risk_free_rate);
  double alive = 1.0;
  double value = 0.0;
  for (int year = 1; year <= c.maturity; ++year) {
    const double q = q_x(t, c.age + year - 1, c.gender);
    const double disc = std::exp(-m.risk_free_rate * year);
    av *= growth;
    const double died = alive * q;
    alive -= died;
    const double w = std::min(annual, left);
    value += disc * (died * std::max(gd - av, 0.0) + alive * std::max(w - av, 0.0));
    av = std::max(av - w, 0.0);
    gd = std::max(gd - w, 0.0);
    left -= w;
  }
  return value;
}

double closed_form_oracle_at_one_year(const VaContract& c, double c1, const MarketModel& m,
                                      const MortalityTable& t) {
  if (m.volatility != 0.0) throw DomainError("closed-form oracle requires zero volatility");
  if (!(c1 > 0.0)) throw DomainError("growth coefficient must be positive");
  const double q = q_x(t, c.age, c.gender);
  const double a1 = c1 * c.account_value;
  const bool gmwb = c.rider == Rider::GmdbGmwb;
  const double w = gmwb ? std::min(c.withdrawal_rate * c.withdrawal_benefit_base,
                                   c.withdrawal_benefit_base)
                        : 0.0;

  // Continuation: the survivor's remaining schedule from time 1, discounted to time 1.
  double av = std::max(a1 - w, 0.0);
  double gd = std::max(c.death_benefit_base - w, 0.0);
  double left = gmwb ? c.withdrawal_benefit_base - w : 0.0;
  const double annual = gmwb ? c.withdrawal_rate * c.withdrawal_benefit_base : 0.0;
  double alive = 1.0;
  double cont = 0.0;
  for (int year = 1; year <= c.maturity - 1; ++year) {
    const double qy = q_x(t, c.age + year, c.gender);
    av *= std::exp(m.risk_free_rate);
    const double died = alive * qy;
    alive -= died;
    const double wy = std::min(annual, left);
    cont += std::exp(-m.risk_free_rate * year) *
            (died * std::max(gd - av, 0.0) + alive * std::max(wy - av, 0.0));
    av = std::max(av - wy, 0.0);
    gd = std::max(gd - wy, 0.0);
    left -= wy;
  }
  return q * std::max(c.death_benefit_base - a1, 0.0) +
         (1.0 - q) * (std::max(w - a1, 0.0) + cont);
}

McValuator::McValuator(MarketModel model, MortalityTable table, ValuationConfig cfg,
                       unsigned threads)
    : model_(model), table_(std::move(table)), cfg_(cfg), threads_(threads) {
  validate(table_);
  if (cfg_.n_paths == 0) throw ConfigError("n_paths must be at least 1");
  if (model_.volatility < 0) throw ConfigError("volatility must be non-negative");
  if (threads_ == 0) threads_ = std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> McValuator::value_all(std::span<const VaContract> contracts,
                                          std::optional<double> c1) const {
  std::vector<double> out(contracts.size());
  auto one = [&](std::size_t i) {
    out[i] = c1 ? value_contract_at_one_year(contracts[i], *c1, model_, table_, cfg_).mean
                : value_contract(contracts[i], model_, table_, cfg_).mean;
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(threads_, contracts.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < contracts.size(); ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          try {
            for (std::size_t i = next++; i < contracts.size(); i = next++) one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = contracts.size();
          }
        });
    }
    if (failure) std::rethrow_exception(failure);
  }
  calls_ += contracts.size();
  return out;
}

double McValuator::total(std::span<const VaContract> contracts, std::optional<double> c1) const {
  if (contracts.empty()) throw ConfigError("portfolio is empty");
  const auto values = value_all(contracts, c1);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace vascr
