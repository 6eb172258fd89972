#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arpguard/error.hpp"
#include "arpguard/features.hpp"

namespace arpguard {

/// Labeled feature rows used for training.
struct Dataset {
  std::vector<FeatureArray> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }

  void push_back(const FeatureArray& row, int label) {
    x.push_back(row);
    y.push_back(label);
  }

  /// Throws unless labels are binary and every feature is finite.
  void validate_values() const {
    if (x.size() != y.size()) throw DataError("feature/label length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
      for (double v : x[i]) {
        if (!std::isfinite(v)) throw DataError("non-finite feature in row " + std::to_string(i));
      }
    }
  }

  /// validate_values() plus at least one example of each class.
  void validate_for_training() const {
    validate_values();
    const auto ones = std::count(y.begin(), y.end(), 1);
    if (ones == 0 || ones == static_cast<std::ptrdiff_t>(y.size())) throw DataError("degenerate labels");
  }
};

struct TrainConfig {
  explicit TrainConfig(std::uint64_t seed_value) : seed(seed_value) {}

  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed;
  int max_depth = 4;
  int forest_size = 5;
  double validation_split = 0.2;
  int hidden_units = 8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (max_depth < 0) throw ConfigError("max depth must be >= 0");
    if (forest_size < 1) throw ConfigError("forest size must be >= 1");
    if (!(validation_split >= 0.0 && validation_split < 1.0)) throw ConfigError("validation split must be in [0,1)");
    if (hidden_units < 1) throw ConfigError("hidden units must be >= 1");
  }
};

/// Per-feature standardization fitted on training data.
struct Scaling {
  FeatureArray mean{};
  FeatureArray std{1.0, 1.0, 1.0, 1.0, 1.0};

  static Scaling fit(const std::vector<FeatureArray>& rows) {
    Scaling s;
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      double sum = 0.0;
      for (const auto& r : rows) sum += r[f];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& r : rows) ss += (r[f] - mean) * (r[f] - mean);
      const double sd = std::sqrt(ss / n);
      s.mean[f] = mean;
      s.std[f] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  FeatureArray apply(std::span<const double, kFeatureCount> x) const {
    FeatureArray z{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = (x[f] - mean[f]) / std[f];
    return z;
  }

  bool operator==(const Scaling&) const = default;
};

/// Inference result. `spoof_probability` is the model's estimate of P(spoof);
/// `probability` is its confidence in the returned label (leaf purity for trees).
struct Prediction {
  int label = 0;
  double probability = 0.0;
  double spoof_probability = 0.0;
};

inline constexpr double kProbabilityClamp = 1e-12;

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Binary cross-entropy of one prediction, with p clamped to [1e-12, 1 - 1e-12].
inline double bce(double p, int y) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y == 1 ? -std::log(p) : -std::log1p(-p);
}

inline std::span<const double, kFeatureCount> checked_features(std::span<const double> x) {
  if (x.size() != kFeatureCount) {
    throw DataError("expected " + std::to_string(kFeatureCount) + " features, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  return std::span<const double, kFeatureCount>(x.data(), kFeatureCount);
}

}  // namespace arpguard
