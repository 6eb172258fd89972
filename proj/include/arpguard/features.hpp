#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "arpguard/error.hpp"
#include "arpguard/format.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{"r", "v", "c", "dt", "h"};

using FeatureArray = std::array<double, kFeatureCount>;

/// Per-packet behavioral features, in model input order.
struct FeatureVector {
  double r = 0.0;   ///< inconsistency ratio of the sender IP, [0,1]
  double v = 0.0;   ///< volatility of the sender IP, sub-delta claims per second
  double c = 0.0;   ///< distinct (mac, ip) bindings per packet of the source node, (0,1]
  double dt = 0.0;  ///< gap since the previous claim of the sender IP, seconds
  double h = 0.0;   ///< unsolicited-reply flag, 0 or 1

  FeatureArray to_array() const { return {r, v, c, dt, h}; }
  bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
  /// Gap below which a repeated claim of an IP counts toward volatility.
  double delta = 0.1;
  /// Streaming: statistics over events seen so far. Batch: whole-window statistics.
  bool streaming = true;
  /// Pending ARP requests stay matchable for this many seconds after they are seen.
  double request_window = 60.0;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be > 0");
    if (!(request_window > 0.0)) throw ConfigError("request window must be > 0");
  }
};

namespace detail {
inline void require_positive_duration(const Trace& trace) {
  if (!(trace.duration() > 0.0)) throw DataError("undefined frequency: trace duration is zero");
}
}  // namespace detail

/// Observed claims per second of the (ip, mac) binding over the trace window.
inline double pair_frequency(const Trace& trace, const IpAddr4& ip, const MacAddr& mac) {
  detail::require_positive_duration(trace);
  std::size_t n = 0;
  for (const auto& e : trace.events()) {
    if (e.sender_ip == ip && e.sender_mac == mac) ++n;
  }
  return static_cast<double>(n) / trace.duration();
}

/// One minus the dominant MAC's share of the claims for `ip`. Zero when nobody claims it.
inline double inconsistency_ratio(const Trace& trace, const IpAddr4& ip) {
  std::map<MacAddr, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& e : trace.events()) {
    if (e.sender_ip == ip) {
      ++counts[e.sender_mac];
      ++total;
    }
  }
  if (total == 0) return 0.0;
  std::size_t best = 0;
  for (const auto& [mac, n] : counts) best = std::max(best, n);
  return 1.0 - static_cast<double>(best) / static_cast<double>(total);
}

inline double volatility(const Trace& trace, const IpAddr4& ip, const FeatureConfig& config) {
  config.validate();
  detail::require_positive_duration(trace);
  std::optional<double> last;
  std::size_t rapid = 0;
  for (const auto& e : trace.events()) {
    if (e.sender_ip != ip) continue;
    if (last && e.ts - *last < config.delta) ++rapid;
    last = e.ts;
  }
  return static_cast<double>(rapid) / trace.duration();
}

inline double consistency_score(const Trace& trace, const NodeId& node) {
  std::set<std::pair<MacAddr, IpAddr4>> bindings;
  std::size_t total = 0;
  for (const auto& e : trace.events()) {
    if (e.src_node != node) continue;
    bindings.emplace(e.sender_mac, e.sender_ip);
    ++total;
  }
  if (total == 0) throw DataError("unknown node '" + node.str() + "'");
  return static_cast<double>(bindings.size()) / static_cast<double>(total);
}

/// Outstanding (requester, target ip) pairs. Each request justifies at most one reply,
/// oldest first, and expires `window` seconds after it was seen.
class PendingRequests {
 public:
  explicit PendingRequests(double window = 60.0) : window_(window) {}

  void add(const NodeId& requester, const IpAddr4& target_ip, double ts) {
    pending_[{requester, target_ip}].push_back(ts);
    ++size_;
    maybe_purge(ts);
  }

  /// Consumes the oldest live request matching (requester, target_ip); false if none.
  bool consume(const NodeId& requester, const IpAddr4& target_ip, double ts) {
    auto it = pending_.find({requester, target_ip});
    if (it == pending_.end()) return false;
    auto& q = it->second;
    while (!q.empty() && ts - q.front() > window_) {
      q.pop_front();
      --size_;
    }
    bool matched = false;
    if (!q.empty()) {
      q.pop_front();
      --size_;
      matched = true;
    }
    if (q.empty()) pending_.erase(it);
    return matched;
  }

  std::size_t size() const { return size_; }
  double window() const { return window_; }

 private:
  void maybe_purge(double now) {
    if (now < next_purge_) return;
    next_purge_ = now + window_;
    for (auto it = pending_.begin(); it != pending_.end();) {
      auto& q = it->second;
      while (!q.empty() && now - q.front() > window_) {
        q.pop_front();
        --size_;
      }
      it = q.empty() ? pending_.erase(it) : std::next(it);
    }
  }

  double window_;
  double next_purge_ = 0.0;
  std::size_t size_ = 0;
  std::map<std::pair<NodeId, IpAddr4>, std::deque<double>> pending_;
};

/// 1 for a reply no pending request accounts for; gratuitous broadcast replies always score 1.
/// Requests are recorded in `pending` and score 0.
inline int unsolicited_reply_heuristic(const ArpEvent& event, PendingRequests& pending) {
  if (event.op == ArpOp::request) {
    pending.add(event.src_node, event.target_ip, event.ts);
    return 0;
  }
  if (event.is_broadcast()) return 1;
  return pending.consume(event.dst_node, event.sender_ip, event.ts) ? 0 : 1;
}

/// Running feature state over a stream of events; one instance per observer.
/// `horizon` plays the role of the window length T in the rate features.
class StreamingFeaturizer {
 public:
  StreamingFeaturizer(FeatureConfig config, double horizon)
      : config_(config), horizon_(horizon), pending_(config.request_window) {
    config_.validate();
    if (!(horizon_ > 0.0)) throw DataError("undefined frequency: trace duration is zero");
  }

  FeatureVector update(const ArpEvent& e) {
    FeatureVector x;
    auto& ip = ips_[e.sender_ip];
    const std::size_t n = ++ip.by_mac[e.sender_mac];
    ++ip.total;
    ip.max_count = std::max(ip.max_count, n);
    if (ip.last_ts) {
      x.dt = e.ts - *ip.last_ts;
      if (x.dt < config_.delta) ++ip.rapid;
    } else {
      x.dt = horizon_;
    }
    ip.last_ts = e.ts;
    x.r = 1.0 - static_cast<double>(ip.max_count) / static_cast<double>(ip.total);
    x.v = static_cast<double>(ip.rapid) / horizon_;

    auto& node = nodes_[e.src_node];
    node.bindings.emplace(e.sender_mac, e.sender_ip);
    ++node.total;
    x.c = static_cast<double>(node.bindings.size()) / static_cast<double>(node.total);

    x.h = unsolicited_reply_heuristic(e, pending_);
    return x;
  }

  const FeatureConfig& config() const { return config_; }
  double horizon() const { return horizon_; }

 private:
  struct IpState {
    std::unordered_map<MacAddr, std::size_t> by_mac;
    std::size_t total = 0;
    std::size_t max_count = 0;
    std::size_t rapid = 0;
    std::optional<double> last_ts;
  };
  struct NodeState {
    std::set<std::pair<MacAddr, IpAddr4>> bindings;
    std::size_t total = 0;
  };

  FeatureConfig config_;
  double horizon_;
  PendingRequests pending_;
  std::unordered_map<IpAddr4, IpState> ips_;
  std::unordered_map<NodeId, NodeState> nodes_;
};

/// One feature vector per event, aligned with trace.events().
inline std::vector<FeatureVector> featurize(const Trace& trace, const FeatureConfig& config) {
  config.validate();
  detail::require_positive_duration(trace);
  std::vector<FeatureVector> out;
  out.reserve(trace.size());

  if (config.streaming) {
    StreamingFeaturizer s(config, trace.duration());
    for (const auto& e : trace.events()) out.push_back(s.update(e));
    return out;
  }

  // Batch: R, V and C over the whole window; dt and h are inherently sequential.
  StreamingFeaturizer whole(config, trace.duration());
  std::unordered_map<IpAddr4, std::pair<double, double>> ip_stats;
  std::unordered_map<NodeId, double> node_stats;
  for (const auto& e : trace.events()) {
    auto x = whole.update(e);
    ip_stats[e.sender_ip] = {x.r, x.v};
    node_stats[e.src_node] = x.c;
    out.push_back(x);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& e = trace.events()[i];
    std::tie(out[i].r, out[i].v) = ip_stats[e.sender_ip];
    out[i].c = node_stats[e.src_node];
  }
  return out;
}

// Feature dump: CSV `ts,src_node,r,v,c,dt,h,label`, label -1 when unknown.

inline constexpr std::string_view kFeatureCsvHeader = "ts,src_node,r,v,c,dt,h,label";

struct FeatureRow {
  double ts = 0.0;
  NodeId src_node;
  FeatureVector x;
  std::optional<Label> label;
};

inline std::vector<FeatureRow> feature_rows(const Trace& trace, const std::vector<FeatureVector>& xs) {
  if (xs.size() != trace.size()) throw DataError("feature count does not match trace length");
  std::vector<FeatureRow> rows;
  rows.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& e = trace.events()[i];
    rows.push_back({e.ts, e.src_node, xs[i], e.label});
  }
  return rows;
}

inline void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << kFeatureCsvHeader << '\n';
  for (const auto& row : rows) {
    out << format_double(row.ts) << ',' << row.src_node.str() << ',' << format_double(row.x.r) << ','
        << format_double(row.x.v) << ',' << format_double(row.x.c) << ',' << format_double(row.x.dt) << ','
        << format_double(row.x.h) << ',' << (row.label ? static_cast<int>(*row.label) : -1) << '\n';
  }
}

inline std::vector<FeatureRow> read_feature_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("feature CSV is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kFeatureCsvHeader) throw ParseError("line 1: unexpected feature CSV header");

  std::vector<FeatureRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::string where = "line " + std::to_string(line_no);
    if (cells.size() != 8) throw ParseError(where + ": expected 8 columns, got " + std::to_string(cells.size()));
    try {
      FeatureRow row;
      row.ts = parse_double(cells[0], "ts");
      if (cells[1].empty()) throw ParseError("empty src_node");
      row.src_node = NodeId(std::string(cells[1]));
      row.x.r = parse_double(cells[2], "r");
      row.x.v = parse_double(cells[3], "v");
      row.x.c = parse_double(cells[4], "c");
      row.x.dt = parse_double(cells[5], "dt");
      row.x.h = parse_double(cells[6], "h");
      if (cells[7] == "1") {
        row.label = Label::spoof;
      } else if (cells[7] == "0") {
        row.label = Label::benign;
      } else if (cells[7] != "-1") {
        throw ParseError("invalid label '" + std::string(cells[7]) + "'");
      }
      rows.push_back(std::move(row));
    } catch (const ParseError& err) {
      throw ParseError(where + ": " + err.what());
    }
  }
  return rows;
}

}  // namespace arpguard
