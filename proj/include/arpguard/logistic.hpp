#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "arpguard/dataset.hpp"

namespace arpguard {

/// Weights followed by the bias term.
using LogisticParams = std::array<double, kFeatureCount + 1>;

/// Mean binary cross-entropy of sigmoid(w.z + b) over standardized rows `z`.
inline double logistic_loss(const LogisticParams& theta, const std::vector<FeatureArray>& z,
                            std::span<const int> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double s = theta[kFeatureCount];
    for (std::size_t f = 0; f < kFeatureCount; ++f) s += theta[f] * z[i][f];
    sum += bce(sigmoid(s), y[i]);
  }
  return sum / static_cast<double>(z.size());
}

/// Analytic gradient of logistic_loss: mean of (p - y) * [z, 1]. Exact wherever the
/// probability clamp is inactive.
inline LogisticParams logistic_gradient(const LogisticParams& theta, const std::vector<FeatureArray>& z,
                                        std::span<const int> y) {
  LogisticParams g{};
  for (std::size_t i = 0; i < z.size(); ++i) {
    double s = theta[kFeatureCount];
    for (std::size_t f = 0; f < kFeatureCount; ++f) s += theta[f] * z[i][f];
    const double err = sigmoid(s) - y[i];
    for (std::size_t f = 0; f < kFeatureCount; ++f) g[f] += err * z[i][f];
    g[kFeatureCount] += err;
  }
  for (double& v : g) v /= static_cast<double>(z.size());
  return g;
}

struct LogisticModel {
  FeatureArray weights{};
  double bias = 0.0;
  int epochs = 0;
  Scaling scaling;
  double final_loss = 0.0;

  double spoof_probability(std::span<const double> x) const {
    const auto z = scaling.apply(checked_features(x));
    double s = bias;
    for (std::size_t f = 0; f < kFeatureCount; ++f) s += weights[f] * z[f];
    return sigmoid(s);
  }

  /// Label 1 iff p >= 0.5.
  Prediction predict(std::span<const double> x) const {
    const double p = spoof_probability(x);
    const int label = p >= 0.5 ? 1 : 0;
    return {label, label == 1 ? p : 1.0 - p, p};
  }

  LogisticParams params() const {
    LogisticParams theta{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) theta[f] = weights[f];
    theta[kFeatureCount] = bias;
    return theta;
  }

  /// Mean BCE on a dataset, through this model's own scaling.
  double loss(const Dataset& data) const {
    std::vector<FeatureArray> z;
    z.reserve(data.size());
    for (const auto& row : data.x) z.push_back(scaling.apply(row));
    return logistic_loss(params(), z, data.y);
  }

  bool operator==(const LogisticModel&) const = default;
};

struct LogisticFit {
  LogisticModel model;
  /// Loss before each update, then the final loss; size epochs + 1.
  std::vector<double> loss_history;
};

/// Full-batch gradient descent on BCE from zero-initialized parameters.
inline LogisticFit fit_logistic(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate_for_training();

  LogisticFit fit;
  fit.model.scaling = Scaling::fit(data.x);
  std::vector<FeatureArray> z;
  z.reserve(data.size());
  for (const auto& row : data.x) z.push_back(fit.model.scaling.apply(row));

  LogisticParams theta{};
  fit.loss_history.reserve(static_cast<std::size_t>(config.epochs) + 1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    fit.loss_history.push_back(logistic_loss(theta, z, data.y));
    const auto g = logistic_gradient(theta, z, data.y);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= config.learning_rate * g[k];
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) fit.model.weights[f] = theta[f];
  fit.model.bias = theta[kFeatureCount];
  fit.model.epochs = config.epochs;
  fit.model.final_loss = logistic_loss(theta, z, data.y);
  fit.loss_history.push_back(fit.model.final_loss);
  for (double w : theta) {
    if (!std::isfinite(w)) throw DataError("logistic training diverged");
  }
  return fit;
}

inline LogisticModel train_logistic(const Dataset& data, const TrainConfig& config) {
  return fit_logistic(data, config).model;
}

}  // namespace arpguard
