#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "vascr/portfolio.hpp"

namespace vascr {

// Features of an input contract relative to one representative contract:
//   [0]  rider differs, [1] gender differs,
//   [2..7]  (x - x_i)^+ / R for maturity, age, AV, GD, GW, withdrawal rate,
//   [8..13] (x_i - x)^+ / R for the same attributes.
inline constexpr std::size_t kFeatureCount = 14;
inline constexpr std::size_t kNumericAttributes = 6;
using FeatureVector = std::array<double, kFeatureCount>;

// Width R of each numeric attribute's value interval.
struct FeatureRanges {
  double maturity = 0.0;
  double age = 0.0;
  double account_value = 0.0;
  double death_benefit = 0.0;
  double withdrawal_benefit = 0.0;
  double withdrawal_rate = 0.0;

  bool operator==(const FeatureRanges&) const = default;

  // Widths of the given attribute space. GMDB-only contracts carry GW = 0, so
  // the GW interval always starts at 0 when GMDB contracts are present.
  static FeatureRanges from(const AttributeRanges& ranges);
};

void validate(const FeatureRanges& r);

std::vector<FeatureVector> extract_features(const VaContract& z, std::span<const VaContract> reps,
                                            const FeatureRanges& ranges);

// Features of many contracts against a fixed representative set, stored
// contiguously as [contract][representative].
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::span<const VaContract> contracts, std::span<const VaContract> reps,
                const FeatureRanges& ranges);

  std::size_t rows() const { return rows_; }
  std::size_t reps() const { return reps_; }
  std::span<const FeatureVector> row(std::size_t k) const {
    return {data_.data() + k * reps_, reps_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t reps_ = 0;
  std::vector<FeatureVector> data_;
};

// Weights (one 14-vector per representative) and biases of the softmax layer.
struct NetworkParameters {
  std::vector<FeatureVector> weights;
  std::vector<double> biases;

  static NetworkParameters zeros(std::size_t n_reps);
  std::size_t size() const { return biases.size(); }
  bool operator==(const NetworkParameters&) const = default;
};

// x += alpha * y, element-wise over weights and biases.
void axpy(double alpha, const NetworkParameters& y, NetworkParameters& x);
bool all_finite(const NetworkParameters& p);

// Softmax of the activations a_i = w_i . f_i + b_i (max-shifted).
std::vector<double> softmax_outputs(const NetworkParameters& params,
                                    std::span<const FeatureVector> features);

// y_hat = sum_i o_i * y(z_i).
double forward(const NetworkParameters& params, std::span<const FeatureVector> features,
               std::span<const double> rep_values);

// Training or validation set: features of each contract plus its target.
struct LabeledSet {
  FeatureMatrix features;
  std::vector<double> targets;
};

// (1 / 2|B|) sum_{k in B} (y_hat(z_k) - y(z_k))^2; batch = indices into the set.
double mse(const NetworkParameters& params, const LabeledSet& set, std::span<const std::size_t> batch,
           std::span<const double> rep_values);
double mse(const NetworkParameters& params, const LabeledSet& set,
           std::span<const double> rep_values);

// Exact gradient of the batch MSE with respect to every weight and bias.
NetworkParameters gradient(const NetworkParameters& params, const LabeledSet& set,
                           std::span<const std::size_t> batch, std::span<const double> rep_values);

// mu_t = min(1 - 2^(-1 - log2(floor(t / 50) + 1)), mu_max).
double momentum_coeff(std::size_t t, double mu_max);

// One Nesterov step with the gradient taken at the look-ahead point:
//   v' = mu v - eps grad E(theta + mu v),  theta' = theta + v'.
// Throws TrainingError on a non-finite gradient.
void nag_step(NetworkParameters& params, NetworkParameters& velocity, const LabeledSet& set,
              std::span<const std::size_t> batch, std::span<const double> rep_values,
              double learning_rate, double mu);

// |(a - b) / b|; DomainError when b == 0.
double relative_distance(double a, double b);

// Sum over the portfolio of y_hat(z), with rep_values in normalized units,
// multiplied back by the normalizer.
double estimate_portfolio_liability(const NetworkParameters& params,
                                    std::span<const VaContract> portfolio,
                                    std::span<const VaContract> reps,
                                    std::span<const double> rep_values,
                                    const FeatureRanges& ranges, double normalizer);

// Network parameter file (text, version 1):
//   vascr-network 1
//   <n_reps> <feature_count> <normalizer>
//   n lines of 14 weights, then one line of n biases
// Numbers use the shortest round-trip decimal form.
void write_network(std::ostream& os, const NetworkParameters& params, double normalizer);
NetworkParameters read_network(std::istream& is, double* normalizer = nullptr);

}  // namespace vascr
