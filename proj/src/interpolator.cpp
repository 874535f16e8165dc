#include "vascr/interpolator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "vascr/errors.hpp"
#include "vascr/text.hpp"

namespace vascr {

FeatureRanges FeatureRanges::from(const AttributeRanges& r) {
  validate(r);
  FeatureRanges out;
  out.maturity = r.maturity.hi - r.maturity.lo;
  out.age = r.age.hi - r.age.lo;
  out.account_value = r.account_value.hi - r.account_value.lo;
  out.death_benefit = r.guarantee.hi - r.guarantee.lo;
  const bool has_gmdb_only = std::find(r.riders.begin(), r.riders.end(), Rider::Gmdb) != r.riders.end();
  out.withdrawal_benefit = has_gmdb_only ? r.guarantee.hi : r.guarantee.hi - r.guarantee.lo;
  auto [lo, hi] = std::minmax_element(r.withdrawal_rates.begin(), r.withdrawal_rates.end());
  out.withdrawal_rate = *hi - *lo;
  return out;
}

void validate(const FeatureRanges& r) {
  for (double w : {r.maturity, r.age, r.account_value, r.death_benefit, r.withdrawal_benefit,
                   r.withdrawal_rate})
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("feature range has zero width");
}

namespace {

void fill_features(const VaContract& z, const VaContract& rep, const FeatureRanges& r,
                   FeatureVector& f) {
  f[0] = z.rider == rep.rider ? 0.0 : 1.0;
  f[1] = z.gender == rep.gender ? 0.0 : 1.0;
  const std::array<double, kNumericAttributes> x{
      double(z.maturity), double(z.age), z.account_value, z.death_benefit_base,
      z.withdrawal_benefit_base, z.withdrawal_rate};
  const std::array<double, kNumericAttributes> xi{
      double(rep.maturity), double(rep.age), rep.account_value, rep.death_benefit_base,
      rep.withdrawal_benefit_base, rep.withdrawal_rate};
  const std::array<double, kNumericAttributes> width{
      r.maturity, r.age, r.account_value, r.death_benefit, r.withdrawal_benefit, r.withdrawal_rate};
  for (std::size_t j = 0; j < kNumericAttributes; ++j) {
    f[2 + j] = std::max(x[j] - xi[j], 0.0) / width[j];
    f[2 + kNumericAttributes + j] = std::max(xi[j] - x[j], 0.0) / width[j];
  }
}

double activation(const FeatureVector& w, double b, const FeatureVector& f) {
  double a = b;
  for (std::size_t j = 0; j < kFeatureCount; ++j) a += w[j] * f[j];
  return a;
}

// Softmax outputs into `o`; returns y_hat.
double forward_into(const NetworkParameters& p, std::span<const FeatureVector> features,
                    std::span<const double> y, std::vector<double>& o) {
  const std::size_t n = p.size();
  o.resize(n);
  double amax = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    o[i] = activation(p.weights[i], p.biases[i], features[i]);
    amax = std::max(amax, o[i]);
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    o[i] = std::exp(o[i] - amax);
    denom += o[i];
  }
  double yhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    o[i] /= denom;
    yhat += o[i] * y[i];
  }
  return yhat;
}

void check_dims(const NetworkParameters& p, std::size_t features, std::size_t values) {
  if (p.weights.size() != p.biases.size() || features != p.size() || values != p.size())
    throw ConfigError("network, feature and representative dimensions disagree");
}

}  // namespace

std::vector<FeatureVector> extract_features(const VaContract& z, std::span<const VaContract> reps,
                                            const FeatureRanges& ranges) {
  validate(ranges);
  std::vector<FeatureVector> out(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) fill_features(z, reps[i], ranges, out[i]);
  return out;
}

FeatureMatrix::FeatureMatrix(std::span<const VaContract> contracts,
                             std::span<const VaContract> reps, const FeatureRanges& ranges)
    : rows_(contracts.size()), reps_(reps.size()), data_(contracts.size() * reps.size()) {
  validate(ranges);
  for (std::size_t k = 0; k < rows_; ++k)
    for (std::size_t i = 0; i < reps_; ++i)
      fill_features(contracts[k], reps[i], ranges, data_[k * reps_ + i]);
}

NetworkParameters NetworkParameters::zeros(std::size_t n_reps) {
  NetworkParameters p;
  p.weights.assign(n_reps, FeatureVector{});
  p.biases.assign(n_reps, 0.0);
  return p;
}

void axpy(double alpha, const NetworkParameters& y, NetworkParameters& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) x.weights[i][j] += alpha * y.weights[i][j];
    x.biases[i] += alpha * y.biases[i];
  }
}

bool all_finite(const NetworkParameters& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p.biases[i])) return false;
    for (double w : p.weights[i])
      if (!std::isfinite(w)) return false;
  }
  return true;
}

std::vector<double> softmax_outputs(const NetworkParameters& params,
                                    std::span<const FeatureVector> features) {
  check_dims(params, features.size(), features.size());
  std::vector<double> o;
  std::vector<double> zeros(params.size(), 0.0);
  forward_into(params, features, zeros, o);
  return o;
}

double forward(const NetworkParameters& params, std::span<const FeatureVector> features,
               std::span<const double> rep_values) {
  check_dims(params, features.size(), rep_values.size());
  std::vector<double> o;
  return forward_into(params, features, rep_values, o);
}

double mse(const NetworkParameters& params, const LabeledSet& set,
           std::span<const std::size_t> batch, std::span<const double> rep_values) {
  if (batch.empty()) throw ConfigError("batch is empty");
  check_dims(params, set.features.reps(), rep_values.size());
  std::vector<double> o;
  double sum = 0.0;
  for (std::size_t k : batch) {
    const double e = forward_into(params, set.features.row(k), rep_values, o) - set.targets[k];
    sum += e * e;
  }
  return sum / (2.0 * static_cast<double>(batch.size()));
}

double mse(const NetworkParameters& params, const LabeledSet& set,
           std::span<const double> rep_values) {
  std::vector<std::size_t> all(set.targets.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return mse(params, set, all, rep_values);
}

NetworkParameters gradient(const NetworkParameters& params, const LabeledSet& set,
                           std::span<const std::size_t> batch, std::span<const double> rep_values) {
  if (batch.empty()) throw ConfigError("batch is empty");
  check_dims(params, set.features.reps(), rep_values.size());
  NetworkParameters g = NetworkParameters::zeros(params.size());
  std::vector<double> o;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k : batch) {
    const auto f = set.features.row(k);
    const double yhat = forward_into(params, f, rep_values, o);
    const double err = (yhat - set.targets[k]) * scale;
    // d y_hat / d a_i = o_i (y_i - y_hat)
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double da = err * o[i] * (rep_values[i] - yhat);
      g.biases[i] += da;
      for (std::size_t j = 0; j < kFeatureCount; ++j) g.weights[i][j] += da * f[i][j];
    }
  }
  return g;
}

double momentum_coeff(std::size_t t, double mu_max) {
  // 2^(-1 - log2(k)) == 1 / (2k) exactly.
  const double k = static_cast<double>(t / 50 + 1);
  return std::min(1.0 - 0.5 / k, mu_max);
}

void nag_step(NetworkParameters& params, NetworkParameters& velocity, const LabeledSet& set,
              std::span<const std::size_t> batch, std::span<const double> rep_values,
              double learning_rate, double mu) {
  NetworkParameters lookahead = params;
  axpy(mu, velocity, lookahead);
  const NetworkParameters g = gradient(lookahead, set, batch, rep_values);
  if (!all_finite(g)) throw TrainingError("non-finite gradient");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      velocity.weights[i][j] = mu * velocity.weights[i][j] - learning_rate * g.weights[i][j];
      params.weights[i][j] += velocity.weights[i][j];
    }
    velocity.biases[i] = mu * velocity.biases[i] - learning_rate * g.biases[i];
    params.biases[i] += velocity.biases[i];
  }
}

double relative_distance(double a, double b) {
  if (b == 0.0) throw DomainError("relative distance to zero is undefined");
  return std::abs((a - b) / b);
}

double estimate_portfolio_liability(const NetworkParameters& params,
                                    std::span<const VaContract> portfolio,
                                    std::span<const VaContract> reps,
                                    std::span<const double> rep_values,
                                    const FeatureRanges& ranges, double normalizer) {
  validate(ranges);
  check_dims(params, reps.size(), rep_values.size());
  std::vector<FeatureVector> f(reps.size());
  std::vector<double> o;
  double total = 0.0;
  for (const auto& z : portfolio) {
    for (std::size_t i = 0; i < reps.size(); ++i) fill_features(z, reps[i], ranges, f[i]);
    total += forward_into(params, f, rep_values, o);
  }
  return total * normalizer;
}

void write_network(std::ostream& os, const NetworkParameters& p, double normalizer) {
  os << "vascr-network 1\n"
     << p.size() << ' ' << kFeatureCount << ' ' << text::shortest(normalizer) << '\n';
  for (const auto& w : p.weights) {
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      os << (j ? " " : "") << text::shortest(w[j]);
    os << '\n';
  }
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << text::shortest(p.biases[i]);
  os << '\n';
}

NetworkParameters read_network(std::istream& is, double* normalizer) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vascr-network") throw ParseError("not a network file", 1);
  if (version != 1) throw ParseError("unsupported network file version", 1);
  std::size_t n = 0, features = 0;
  std::string norm;
  if (!(is >> n >> features >> norm)) throw ParseError("bad network header", 2);
  if (features != kFeatureCount) throw ParseError("feature count mismatch", 2);
  double nv = 0.0;
  if (!text::parse_double(norm, nv)) throw ParseError("bad normalizer", 2);
  if (normalizer) *normalizer = nv;

  NetworkParameters p = NetworkParameters::zeros(n);
  std::string tok;
  auto next = [&](std::size_t line) {
    double v = 0.0;
    if (!(is >> tok) || !text::parse_double(tok, v)) throw ParseError("bad parameter value", line);
    return v;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j) p.weights[i][j] = next(3 + i);
  for (std::size_t i = 0; i < n; ++i) p.biases[i] = next(3 + n);
  return p;
}

}  // namespace vascr
