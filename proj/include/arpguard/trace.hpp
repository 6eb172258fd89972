#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arpguard/addr.hpp"
#include "arpguard/error.hpp"

namespace arpguard {

/// Opaque node identifier. The value "*" is reserved for the broadcast destination.
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw ParseError("node id must be nonempty");
  }

  static NodeId broadcast() { return NodeId("*"); }

  const std::string& str() const { return value_; }
  bool is_broadcast() const { return value_ == "*"; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const NodeId&) const = default;

 private:
  std::string value_;
};

inline std::ostream& operator<<(std::ostream& os, const NodeId& n) { return os << n.str(); }

enum class ArpOp : std::uint8_t { request = 1, reply = 2 };
enum class Label : std::uint8_t { benign = 0, spoof = 1 };

inline std::string_view to_string(ArpOp op) { return op == ArpOp::request ? "request" : "reply"; }

/// One observed ARP packet.
struct ArpEvent {
  double ts = 0.0;
  NodeId src_node;
  NodeId dst_node;
  ArpOp op = ArpOp::request;
  IpAddr4 sender_ip;
  MacAddr sender_mac;
  IpAddr4 target_ip;
  MacAddr target_mac;
  std::optional<Label> label;

  bool is_broadcast() const { return dst_node.is_broadcast(); }
  bool is_gratuitous() const { return sender_ip == target_ip; }

  bool operator==(const ArpEvent&) const = default;
};

/// Ordered, validated sequence of ARP events over a window of `duration` seconds.
/// Immutable after construction.
class Trace {
 public:
  Trace() = default;

  /// Validates ordering and membership. Without an explicit duration, T is the
  /// largest timestamp; without explicit nodes, the node set is inferred from
  /// the src/dst fields.
  explicit Trace(std::vector<ArpEvent> events, std::optional<double> duration = std::nullopt,
                 std::optional<std::vector<NodeId>> nodes = std::nullopt)
      : events_(std::move(events)) {
    double max_ts = 0.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (i > 0 && e.ts < events_[i - 1].ts) {
        throw DataError("timestamp regression at event " + std::to_string(i + 1));
      }
      max_ts = std::max(max_ts, e.ts);
    }
    duration_ = duration.value_or(max_ts);
    if (!std::isfinite(duration_) || duration_ < 0.0) throw DataError("invalid trace duration");
    if (max_ts > duration_) throw DataError("event timestamp exceeds trace duration");

    if (nodes) {
      nodes_ = std::move(*nodes);
      std::sort(nodes_.begin(), nodes_.end());
      nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
      for (const auto& e : events_) {
        if (!has_node(e.src_node)) throw DataError("source node '" + e.src_node.str() + "' not in node set");
        if (!e.dst_node.is_broadcast() && !has_node(e.dst_node)) {
          throw DataError("destination node '" + e.dst_node.str() + "' not in node set");
        }
      }
    } else {
      for (const auto& e : events_) {
        nodes_.push_back(e.src_node);
        if (!e.dst_node.is_broadcast()) nodes_.push_back(e.dst_node);
      }
      std::sort(nodes_.begin(), nodes_.end());
      nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    }
  }

  const std::vector<ArpEvent>& events() const { return events_; }
  double duration() const { return duration_; }
  /// Sorted, unique.
  const std::vector<NodeId>& nodes() const { return nodes_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  bool has_node(const NodeId& n) const { return std::binary_search(nodes_.begin(), nodes_.end(), n); }

  bool operator==(const Trace&) const = default;

 private:
  std::vector<ArpEvent> events_;
  double duration_ = 0.0;
  std::vector<NodeId> nodes_;
};

namespace detail {

[[noreturn]] inline void field_error(std::size_t line_no, std::string_view field, std::string_view what) {
  throw ParseError("line " + std::to_string(line_no) + ": field '" + std::string(field) + "': " +
                   std::string(what));
}

inline const nlohmann::json& require(const nlohmann::json& obj, std::string_view field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) field_error(line_no, field, "missing");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, std::string_view field, std::size_t line_no) {
  const auto& v = require(obj, field, line_no);
  if (!v.is_string()) field_error(line_no, field, "expected string");
  return v.get<std::string>();
}

inline nlohmann::json parse_json_line(std::string_view line, std::size_t line_no) {
  auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed JSON record");
  }
  return j;
}

inline bool is_header(const nlohmann::json& j) {
  auto it = j.find("header");
  return it != j.end() && it->is_boolean() && it->get<bool>();
}

}  // namespace detail

inline ArpEvent event_from_json(const nlohmann::json& j, std::size_t line_no) {
  using detail::field_error;
  ArpEvent e;
  const auto& ts = detail::require(j, "ts", line_no);
  if (!ts.is_number()) field_error(line_no, "ts", "expected number");
  e.ts = ts.get<double>();
  if (!std::isfinite(e.ts) || e.ts < 0.0) field_error(line_no, "ts", "must be finite and non-negative");

  auto node = [&](std::string_view field) {
    auto s = detail::require_string(j, field, line_no);
    if (s.empty()) field_error(line_no, field, "empty node id");
    return NodeId(std::move(s));
  };
  e.src_node = node("src");
  if (e.src_node.is_broadcast()) field_error(line_no, "src", "broadcast marker is not a valid source");
  e.dst_node = node("dst");

  const auto op = detail::require_string(j, "op", line_no);
  if (op == "request") {
    e.op = ArpOp::request;
  } else if (op == "reply") {
    e.op = ArpOp::reply;
  } else {
    field_error(line_no, "op", "invalid op '" + op + "'");
  }

  auto ip = [&](std::string_view field) {
    try {
      return IpAddr4::parse(detail::require_string(j, field, line_no));
    } catch (const ParseError& err) {
      field_error(line_no, field, err.what());
    }
  };
  auto mac = [&](std::string_view field) {
    try {
      return MacAddr::parse(detail::require_string(j, field, line_no));
    } catch (const ParseError& err) {
      field_error(line_no, field, err.what());
    }
  };
  e.sender_ip = ip("sip");
  e.sender_mac = mac("smac");
  e.target_ip = ip("tip");
  e.target_mac = mac("tmac");

  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) field_error(line_no, "label", "expected 0 or 1");
    const auto v = it->get<long long>();
    if (v != 0 && v != 1) field_error(line_no, "label", "expected 0 or 1");
    e.label = v == 1 ? Label::spoof : Label::benign;
  }

  if (e.is_broadcast() && e.op == ArpOp::reply && !e.is_gratuitous()) {
    field_error(line_no, "dst", "broadcast reply must be gratuitous");
  }
  return e;
}

/// Parses one record of the native JSON-lines trace format.
inline ArpEvent parse_trace_line(std::string_view line, std::size_t line_no = 1) {
  const auto j = detail::parse_json_line(line, line_no);
  if (detail::is_header(j)) {
    throw ParseError("line " + std::to_string(line_no) + ": header is only allowed on the first line");
  }
  return event_from_json(j, line_no);
}

/// Canonical single-line rendering; inverse of parse_trace_line.
inline std::string format_trace_line(const ArpEvent& e) {
  nlohmann::ordered_json j;
  j["ts"] = e.ts;
  j["src"] = e.src_node.str();
  j["dst"] = e.dst_node.str();
  j["op"] = to_string(e.op);
  j["sip"] = e.sender_ip.to_string();
  j["smac"] = e.sender_mac.to_string();
  j["tip"] = e.target_ip.to_string();
  j["tmac"] = e.target_mac.to_string();
  if (e.label) j["label"] = static_cast<int>(*e.label);
  return j.dump();
}

inline std::string format_trace_header(const Trace& t) {
  nlohmann::ordered_json j;
  j["header"] = true;
  j["duration"] = t.duration();
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : t.nodes()) nodes.push_back(n.str());
  j["nodes"] = std::move(nodes);
  return j.dump();
}

/// Reads a trace from a JSON-lines stream. `source` names the input in error messages.
inline Trace read_trace(std::istream& in, std::string_view source = "<stream>") {
  std::vector<ArpEvent> events;
  std::optional<double> duration;
  std::optional<std::vector<NodeId>> nodes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto j = detail::parse_json_line(line, line_no);
    if (detail::is_header(j)) {
      if (line_no != 1) {
        throw ParseError("line " + std::to_string(line_no) + ": header is only allowed on the first line");
      }
      if (auto it = j.find("duration"); it != j.end()) {
        if (!it->is_number() || it->get<double>() < 0.0) detail::field_error(line_no, "duration", "invalid");
        duration = it->get<double>();
      }
      if (auto it = j.find("nodes"); it != j.end()) {
        if (!it->is_array()) detail::field_error(line_no, "nodes", "expected array");
        std::vector<NodeId> ns;
        for (const auto& n : *it) {
          if (!n.is_string() || n.get<std::string>().empty()) detail::field_error(line_no, "nodes", "invalid node id");
          ns.emplace_back(n.get<std::string>());
        }
        nodes = std::move(ns);
      }
      continue;
    }
    auto e = event_from_json(j, line_no);
    if (!events.empty() && e.ts < events.back().ts) {
      throw DataError(std::string(source) + ": timestamp regression at line " + std::to_string(line_no));
    }
    events.push_back(std::move(e));
  }
  if (events.empty()) throw DataError(std::string(source) + ": empty trace");
  return Trace(std::move(events), duration, std::move(nodes));
}

inline Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace '" + path + "'");
  return read_trace(in, path);
}

/// Writes the canonical form: header line followed by one event per line.
inline void write_trace(std::ostream& out, const Trace& t) {
  out << format_trace_header(t) << '\n';
  for (const auto& e : t.events()) out << format_trace_line(e) << '\n';
}

inline void write_trace(const std::string& path, const Trace& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace '" + path + "'");
  write_trace(out, t);
}

inline std::string to_jsonl(const Trace& t) {
  std::ostringstream os;
  write_trace(os, t);
  return os.str();
}

}  // namespace arpguard

template <>
struct std::hash<arpguard::NodeId> {
  std::size_t operator()(const arpguard::NodeId& n) const noexcept { return std::hash<std::string>{}(n.str()); }
};
