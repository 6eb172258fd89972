#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "arpguard/dataset.hpp"
#include "arpguard/rng.hpp"

namespace arpguard {

/// Single-hidden-layer perceptron with sigmoid units, trained on the same BCE objective.
struct Mlp {
  Scaling scaling;
  std::vector<FeatureArray> hidden_weights;  ///< one row per hidden unit
  std::vector<double> hidden_bias;
  std::vector<double> output_weights;
  double output_bias = 0.0;
  int epochs = 0;
  double final_loss = 0.0;

  std::size_t hidden_units() const { return hidden_bias.size(); }

  double spoof_probability(std::span<const double> x) const {
    return forward(scaling.apply(checked_features(x)), nullptr);
  }

  Prediction predict(std::span<const double> x) const {
    const double p = spoof_probability(x);
    const int label = p >= 0.5 ? 1 : 0;
    return {label, label == 1 ? p : 1.0 - p, p};
  }

  /// Output probability for a standardized row; fills hidden activations when asked.
  double forward(const FeatureArray& z, std::vector<double>* hidden) const {
    double s = output_bias;
    for (std::size_t h = 0; h < hidden_units(); ++h) {
      double a = hidden_bias[h];
      for (std::size_t f = 0; f < kFeatureCount; ++f) a += hidden_weights[h][f] * z[f];
      a = sigmoid(a);
      if (hidden) (*hidden)[h] = a;
      s += output_weights[h] * a;
    }
    return sigmoid(s);
  }

  bool operator==(const Mlp&) const = default;
};

inline Mlp train_mlp(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate_for_training();

  const auto units = static_cast<std::size_t>(config.hidden_units);
  Mlp net;
  net.scaling = Scaling::fit(data.x);
  Rng rng(config.seed);
  net.hidden_weights.resize(units);
  net.hidden_bias.assign(units, 0.0);
  net.output_weights.resize(units);
  for (auto& row : net.hidden_weights) {
    for (auto& w : row) w = rng.uniform(-0.5, 0.5);
  }
  for (auto& w : net.output_weights) w = rng.uniform(-0.5, 0.5);

  std::vector<FeatureArray> z;
  z.reserve(data.size());
  for (const auto& row : data.x) z.push_back(net.scaling.apply(row));

  const double n = static_cast<double>(data.size());
  std::vector<double> hidden(units);
  std::vector<FeatureArray> g_hw(units);
  std::vector<double> g_hb(units), g_ow(units);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& row : g_hw) row.fill(0.0);
    std::fill(g_hb.begin(), g_hb.end(), 0.0);
    std::fill(g_ow.begin(), g_ow.end(), 0.0);
    double g_ob = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double err = net.forward(z[i], &hidden) - data.y[i];
      g_ob += err;
      for (std::size_t h = 0; h < units; ++h) {
        g_ow[h] += err * hidden[h];
        const double back = err * net.output_weights[h] * hidden[h] * (1.0 - hidden[h]);
        g_hb[h] += back;
        for (std::size_t f = 0; f < kFeatureCount; ++f) g_hw[h][f] += back * z[i][f];
      }
    }
    const double step = config.learning_rate / n;
    net.output_bias -= step * g_ob;
    for (std::size_t h = 0; h < units; ++h) {
      net.output_weights[h] -= step * g_ow[h];
      net.hidden_bias[h] -= step * g_hb[h];
      for (std::size_t f = 0; f < kFeatureCount; ++f) net.hidden_weights[h][f] -= step * g_hw[h][f];
    }
  }
  net.epochs = config.epochs;
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += bce(net.forward(z[i], nullptr), data.y[i]);
  net.final_loss = loss / n;
  return net;
}

}  // namespace arpguard
