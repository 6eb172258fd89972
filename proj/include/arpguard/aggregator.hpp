#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "arpguard/edge_detector.hpp"
#include "arpguard/error.hpp"
#include "arpguard/format.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

struct ThreatEntry {
  std::uint64_t phi = 0;  ///< detections attributed to the node as packet source
  double psi = 0.0;       ///< phi / max phi, or 0 when every phi is 0

  bool operator==(const ThreatEntry&) const = default;
};

using ThreatTable = std::map<NodeId, ThreatEntry>;

/// Max-normalizes raw counts. All-zero counts give all-zero scores.
inline ThreatTable normalize(const std::map<NodeId, std::uint64_t>& phi) {
  std::uint64_t max_phi = 0;
  for (const auto& [node, n] : phi) max_phi = std::max(max_phi, n);
  ThreatTable table;
  for (const auto& [node, n] : phi) {
    table[node] = {n, max_phi == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(max_phi)};
  }
  return table;
}

inline std::map<NodeId, std::uint64_t> sum_counters(std::span<const EdgeLog> logs) {
  std::map<NodeId, std::uint64_t> phi;
  for (const auto& log : logs) {
    for (const auto& [node, n] : log.counters) phi[node] += n;
  }
  return phi;
}

inline ThreatTable aggregate(std::span<const EdgeLog> logs) { return normalize(sum_counters(logs)); }

enum class MitigationAction { drop_rules, isolate };

inline std::string_view to_string(MitigationAction a) { return a == MitigationAction::isolate ? "isolate" : "drop_rules"; }

struct MitigationDirective {
  NodeId node;
  MitigationAction action = MitigationAction::drop_rules;
  double psi = 0.0;
  std::int64_t round = 0;

  bool operator==(const MitigationDirective&) const = default;
};

struct AggregatorConfig {
  double tau = 0.6;
  /// psi above this escalates from drop rules to isolation.
  double isolate_above = 0.8;

  void validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0,1]");
    if (!(isolate_above >= 0.0 && isolate_above <= 1.0)) throw ConfigError("isolation boundary must be in [0,1]");
  }

  MitigationAction action_for(double psi) const {
    return psi > isolate_above ? MitigationAction::isolate : MitigationAction::drop_rules;
  }
};

/// One directive per node with psi > tau, sorted by descending psi then node id.
inline std::vector<MitigationDirective> decide_mitigation(const ThreatTable& table, const AggregatorConfig& config,
                                                          std::int64_t round = 0) {
  config.validate();
  std::vector<MitigationDirective> out;
  for (const auto& [node, entry] : table) {
    if (entry.psi > config.tau) out.push_back({node, config.action_for(entry.psi), entry.psi, round});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.psi > b.psi; });
  return out;
}

struct RoundResult {
  std::int64_t round = 0;
  ThreatTable table;
  std::vector<MitigationDirective> directives;
};

/// Periodic fusion: counts accumulate across rounds, scores and directives are
/// recomputed each round, and isolated nodes are not re-issued directives.
class Aggregator {
 public:
  explicit Aggregator(AggregatorConfig config) : config_(config) { config_.validate(); }

  RoundResult run_round(std::int64_t round, std::span<const EdgeLog> logs) {
    if (last_round_ && round <= *last_round_) {
      throw DataError("round regression: " + std::to_string(round) + " after " + std::to_string(*last_round_));
    }
    last_round_ = round;
    for (const auto& [node, n] : sum_counters(logs)) phi_[node] += n;

    RoundResult result;
    result.round = round;
    result.table = normalize(phi_);
    for (auto& d : decide_mitigation(result.table, config_, round)) {
      if (isolated_.contains(d.node)) continue;
      if (d.action == MitigationAction::isolate) isolated_.insert(d.node);
      result.directives.push_back(std::move(d));
    }
    return result;
  }

  const std::map<NodeId, std::uint64_t>& phi() const { return phi_; }
  bool is_isolated(const NodeId& n) const { return isolated_.contains(n); }

 private:
  AggregatorConfig config_;
  std::map<NodeId, std::uint64_t> phi_;
  std::set<NodeId> isolated_;
  std::optional<std::int64_t> last_round_;
};

/// Batches logs by their round stamp (ascending) and runs each round.
inline std::vector<RoundResult> run_rounds(std::span<const EdgeLog> logs, const AggregatorConfig& config) {
  std::map<std::int64_t, std::vector<EdgeLog>> batches;
  for (const auto& log : logs) batches[log.round].push_back(log);
  Aggregator agg(config);
  std::vector<RoundResult> out;
  for (const auto& [round, batch] : batches) out.push_back(agg.run_round(round, batch));
  return out;
}

inline constexpr std::string_view kThreatCsvHeader = "node,phi,psi,action";

inline void write_threat_csv(std::ostream& out, const ThreatTable& table, const std::vector<MitigationDirective>& directives) {
  std::map<NodeId, MitigationAction> action;
  for (const auto& d : directives) action[d.node] = d.action;
  out << kThreatCsvHeader << '\n';
  for (const auto& [node, entry] : table) {
    auto it = action.find(node);
    out << node.str() << ',' << entry.phi << ',' << format_double(entry.psi) << ','
        << (it == action.end() ? std::string_view("none") : to_string(it->second)) << '\n';
  }
}

inline nlohmann::ordered_json directive_to_json(const MitigationDirective& d) {
  nlohmann::ordered_json j;
  j["node"] = d.node.str();
  j["action"] = to_string(d.action);
  j["psi"] = d.psi;
  j["round"] = d.round;
  return j;
}

inline void write_directive_log(std::ostream& out, const std::vector<MitigationDirective>& directives) {
  for (const auto& d : directives) out << directive_to_json(d).dump() << '\n';
}

}  // namespace arpguard
