#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arpguard/error.hpp"
#include "arpguard/format.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }

  void add(int prediction, int label) {
    if (label == 1) {
      ++(prediction == 1 ? tp : fn);
    } else {
      ++(prediction == 1 ? fp : tn);
    }
  }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }

  bool operator==(const ConfusionCounts&) const = default;
};

/// Ratios with zero denominators are absent, never reported as 0.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> fpr;
  std::optional<double> precision;
  std::optional<double> recall;

  static Metrics from(const ConfusionCounts& c) {
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
      if (den == 0) return std::nullopt;
      return static_cast<double>(num) / static_cast<double>(den);
    };
    return {ratio(c.tp + c.tn, c.total()), ratio(c.fp, c.fp + c.tn), ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn)};
  }
};

namespace detail {

inline std::vector<int> require_labels(std::span<const std::optional<Label>> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    if (!l) throw DataError("evaluation requires labels");
    out.push_back(static_cast<int>(*l));
  }
  return out;
}

}  // namespace detail

inline ConfusionCounts confusion(std::span<const int> predictions, std::span<const std::optional<Label>> labels) {
  if (predictions.size() != labels.size()) throw DataError("prediction/label length mismatch");
  const auto y = detail::require_labels(labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) c.add(predictions[i], y[i]);
  return c;
}

struct Score {
  ConfusionCounts counts;
  Metrics metrics;
};

inline Score score(std::span<const int> predictions, std::span<const std::optional<Label>> labels) {
  const auto c = confusion(predictions, labels);
  return {c, Metrics::from(c)};
}

struct WindowAccuracy {
  std::int64_t window = 0;
  double accuracy = 0.0;
  ConfusionCounts counts;
};

/// Per-window packet accuracy; windows without events are omitted.
inline std::vector<WindowAccuracy> accuracy_over_time(std::span<const int> predictions,
                                                      std::span<const std::optional<Label>> labels,
                                                      std::span<const double> timestamps, double window) {
  if (!(window > 0.0)) throw ConfigError("window length must be > 0");
  if (predictions.size() != labels.size() || timestamps.size() != labels.size()) {
    throw DataError("prediction/label length mismatch");
  }
  const auto y = detail::require_labels(labels);
  std::map<std::int64_t, ConfusionCounts> per_window;
  for (std::size_t i = 0; i < y.size(); ++i) {
    per_window[static_cast<std::int64_t>(std::floor(timestamps[i] / window))].add(predictions[i], y[i]);
  }
  std::vector<WindowAccuracy> out;
  for (const auto& [w, c] : per_window) {
    out.push_back({w, static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()), c});
  }
  return out;
}

inline std::vector<std::optional<Label>> labels_of(const Trace& trace) {
  std::vector<std::optional<Label>> out;
  out.reserve(trace.size());
  for (const auto& e : trace.events()) out.push_back(e.label);
  return out;
}

inline std::vector<double> timestamps_of(const Trace& trace) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& e : trace.events()) out.push_back(e.ts);
  return out;
}

/// JSON rendering with ratios rounded to 6 decimals; absent ratios are omitted.
inline nlohmann::ordered_json to_json(const Score& s) {
  nlohmann::ordered_json j;
  j["tp"] = s.counts.tp;
  j["fp"] = s.counts.fp;
  j["tn"] = s.counts.tn;
  j["fn"] = s.counts.fn;
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) j[name] = round_to(*v, 6);
  };
  put("accuracy", s.metrics.accuracy);
  put("fpr", s.metrics.fpr);
  put("precision", s.metrics.precision);
  put("recall", s.metrics.recall);
  return j;
}

}  // namespace arpguard
