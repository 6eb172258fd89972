#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arpguard/ensemble.hpp"
#include "arpguard/error.hpp"
#include "arpguard/features.hpp"
#include "arpguard/format.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

struct DetectorConfig {
  /// Window length in seconds; window l covers [l*window, (l+1)*window).
  double window = 10.0;
  /// Alert threshold on the governing rate (strict >).
  double gamma = 0.3;
  /// EMA weight of the newest window.
  double alpha = 0.3;
  /// Alert on the smoothed rate instead of the raw one.
  bool smoothing = true;

  void validate() const {
    if (!(window > 0.0) || !std::isfinite(window)) throw ConfigError("window length must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0,1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  }
};

struct WindowState {
  std::int64_t index = 0;
  std::size_t packets = 0;
  std::size_t positives = 0;
  double rho = 0.0;
  double rho_bar = 0.0;
  bool alert = false;

  bool operator==(const WindowState&) const = default;
};

inline double ema_update(double prev_rho_bar, double rho, double alpha) {
  return alpha * rho + (1.0 - alpha) * prev_rho_bar;
}

inline bool should_alert(const WindowState& w, const DetectorConfig& config) {
  const double governing = config.smoothing ? w.rho_bar : w.rho;
  return governing > config.gamma;
}

struct Detection {
  std::size_t event_index = 0;
  double ts = 0.0;
  NodeId src_node;
  double confidence = 0.0;

  bool operator==(const Detection&) const = default;
};

struct AlertRecord {
  std::string edge;
  std::int64_t window = 0;
  double rho = 0.0;  ///< the governing rate that crossed gamma
  bool smoothed = false;
  std::vector<Detection> detections;

  bool operator==(const AlertRecord&) const = default;
};

struct PacketPrediction {
  std::size_t event_index = 0;
  int label = 0;
  double confidence = 0.0;

  bool operator==(const PacketPrediction&) const = default;
};

/// Everything an edge reports upstream: per-source-node detection counters and its alerts.
struct EdgeLog {
  std::string edge;
  std::int64_t round = 0;
  std::map<NodeId, std::uint64_t> counters;
  std::vector<AlertRecord> alerts;
  std::size_t skipped = 0;

  std::uint64_t total_detections() const {
    std::uint64_t n = 0;
    for (const auto& [node, count] : counters) n += count;
    return n;
  }

  bool operator==(const EdgeLog&) const = default;
};

/// Streaming detector for one edge. It watches every event on the shared segment so
/// its feature state sees the full ARP picture, but classifies, counts and windows
/// only the packets whose source node it owns.
class EdgeDetector {
 public:
  EdgeDetector(std::string edge, Model model, FeatureConfig features, DetectorConfig detector, double horizon,
               std::optional<std::set<NodeId>> owned = std::nullopt)
      : model_(std::move(model)),
        detector_(detector),
        featurizer_(features, horizon),
        owned_(std::move(owned)) {
    detector_.validate();
    log_.edge = std::move(edge);
    if (owned_) {
      for (const auto& n : *owned_) log_.counters[n] = 0;
    }
  }

  bool owns(const NodeId& node) const { return !owned_ || owned_->contains(node); }

  /// Feeds one event. Returns this edge's verdict when it owns the source node.
  std::optional<PacketPrediction> observe(const ArpEvent& e, std::size_t event_index) {
    if (finished_) throw DataError("edge detector already finished");
    if (last_ts_ && e.ts < *last_ts_) throw DataError("timestamp regression in stream");
    last_ts_ = e.ts;

    const auto x = featurizer_.update(e);
    if (!owns(e.src_node)) return std::nullopt;

    advance_to(window_of(e.ts));
    const auto features = x.to_array();
    const auto p = predict(model_, features);
    PacketPrediction out{event_index, p.label, p.probability};
    ++current_.packets;
    if (p.label == 1) {
      ++current_.positives;
      ++log_.counters[e.src_node];
      pending_detections_.push_back({event_index, e.ts, e.src_node, p.probability});
    }
    predictions_.push_back(out);
    return out;
  }

  void skip() { ++log_.skipped; }

  /// Closes the open window and every later window that starts before `until`.
  void finish(double until) {
    if (finished_) return;
    const auto last = std::max(current_.index, static_cast<std::int64_t>(std::ceil(until / detector_.window)) - 1);
    while (current_.index <= last) close_current();
    finished_ = true;
  }

  const EdgeLog& log() const { return log_; }
  const std::vector<WindowState>& windows() const { return windows_; }
  const std::vector<PacketPrediction>& predictions() const { return predictions_; }
  const std::string& edge() const { return log_.edge; }

 private:
  std::int64_t window_of(double ts) const { return static_cast<std::int64_t>(std::floor(ts / detector_.window)); }

  void advance_to(std::int64_t index) {
    while (current_.index < index) close_current();
  }

  void close_current() {
    WindowState w = current_;
    // An empty window has no evidence: rate 0.
    w.rho = w.packets == 0 ? 0.0 : static_cast<double>(w.positives) / static_cast<double>(w.packets);
    w.rho_bar = ema_update(rho_bar_, w.rho, detector_.alpha);
    w.alert = should_alert(w, detector_);
    rho_bar_ = w.rho_bar;
    if (w.alert) {
      log_.alerts.push_back({log_.edge, w.index, detector_.smoothing ? w.rho_bar : w.rho, detector_.smoothing,
                             std::move(pending_detections_)});
    }
    pending_detections_.clear();
    windows_.push_back(w);
    current_ = WindowState{};
    current_.index = w.index + 1;
  }

  Model model_;
  DetectorConfig detector_;
  StreamingFeaturizer featurizer_;
  std::optional<std::set<NodeId>> owned_;
  EdgeLog log_;
  std::vector<WindowState> windows_;
  std::vector<PacketPrediction> predictions_;
  std::vector<Detection> pending_detections_;
  WindowState current_;
  double rho_bar_ = 0.0;
  std::optional<double> last_ts_;
  bool finished_ = false;
};

struct EdgeRun {
  EdgeLog log;
  std::vector<WindowState> windows;
  std::vector<PacketPrediction> predictions;
};

inline EdgeRun collect(const EdgeDetector& d) { return {d.log(), d.windows(), d.predictions()}; }

/// Single edge that owns every node in the trace.
inline EdgeRun run_edge(const Trace& trace, const Model& model, const FeatureConfig& features,
                        const DetectorConfig& detector, const std::string& edge = "edge") {
  EdgeDetector d(edge, model, features, detector, trace.duration());
  for (std::size_t i = 0; i < trace.size(); ++i) d.observe(trace.events()[i], i);
  d.finish(trace.duration());
  return collect(d);
}

/// JSON-lines stream variant: malformed lines and timestamp regressions are skipped and
/// counted rather than aborting the run. Header lines are ignored.
inline EdgeRun run_edge_stream(std::istream& in, const Model& model, const FeatureConfig& features,
                               const DetectorConfig& detector, double horizon, const std::string& edge = "edge") {
  EdgeDetector d(edge, model, features, detector, horizon);
  std::string line;
  std::size_t line_no = 0;
  std::size_t index = 0;
  double until = 0.0;
  std::optional<double> last_ts;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = detail::parse_json_line(line, line_no);
      if (detail::is_header(j)) continue;
      const auto e = event_from_json(j, line_no);
      if (last_ts && e.ts < *last_ts) throw DataError("timestamp regression");
      last_ts = e.ts;
      d.observe(e, index++);
      until = std::max(until, e.ts);
    } catch (const Error&) {
      d.skip();
    }
  }
  d.finish(std::max(until, horizon));
  return collect(d);
}

/// Maps each node to its edge: round-robin over sorted nodes into `gateways` edges named
/// gw0..gwN-1, or one edge per node (named after it) when gateways == 0.
inline std::map<NodeId, std::string> assign_edges(const std::vector<NodeId>& nodes, int gateways) {
  if (gateways < 0) throw ConfigError("gateway count must be >= 0");
  std::map<NodeId, std::string> out;
  std::size_t i = 0;
  for (const auto& n : nodes) {
    out[n] = gateways == 0 ? n.str() : "gw" + std::to_string(i % static_cast<std::size_t>(gateways));
    ++i;
  }
  return out;
}

struct MultiEdgeRun {
  std::vector<EdgeRun> edges;
  /// Aligned with trace events; each event is judged by the edge owning its source node.
  std::vector<PacketPrediction> predictions;
  std::vector<std::string> event_edge;
};

inline MultiEdgeRun run_edges(const Trace& trace, const Model& model, const FeatureConfig& features,
                              const DetectorConfig& detector, int gateways) {
  const auto assignment = assign_edges(trace.nodes(), gateways);
  std::map<std::string, std::set<NodeId>> owned;
  for (const auto& [node, edge] : assignment) owned[edge].insert(node);

  std::vector<EdgeDetector> detectors;
  detectors.reserve(owned.size());
  for (auto& [edge, nodes] : owned) {
    detectors.emplace_back(edge, model, features, detector, trace.duration(), std::move(nodes));
  }

  MultiEdgeRun run;
  run.predictions.resize(trace.size());
  run.event_edge.resize(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.events()[i];
    for (auto& d : detectors) {
      if (auto p = d.observe(e, i)) {
        run.predictions[i] = *p;
        run.event_edge[i] = d.edge();
      }
    }
  }
  for (auto& d : detectors) {
    d.finish(trace.duration());
    run.edges.push_back(collect(d));
  }
  return run;
}

// Serialization: alert log JSON-lines, window summary CSV, edge log JSON, predictions CSV.

inline nlohmann::ordered_json alert_to_json(const AlertRecord& a) {
  nlohmann::ordered_json j;
  j["edge"] = a.edge;
  j["window"] = a.window;
  j["rho"] = a.rho;
  j["smoothed"] = a.smoothed;
  auto dets = nlohmann::ordered_json::array();
  for (const auto& d : a.detections) {
    nlohmann::ordered_json dj;
    dj["event"] = d.event_index;
    dj["ts"] = d.ts;
    dj["src"] = d.src_node.str();
    dj["confidence"] = d.confidence;
    dets.push_back(std::move(dj));
  }
  j["detections"] = std::move(dets);
  return j;
}

inline AlertRecord alert_from_json(const nlohmann::json& j) {
  try {
    AlertRecord a;
    a.edge = j.at("edge").get<std::string>();
    a.window = j.at("window").get<std::int64_t>();
    a.rho = j.at("rho").get<double>();
    a.smoothed = j.at("smoothed").get<bool>();
    for (const auto& d : j.at("detections")) {
      a.detections.push_back({d.at("event").get<std::size_t>(), d.at("ts").get<double>(),
                              NodeId(d.at("src").get<std::string>()), d.at("confidence").get<double>()});
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed alert record: ") + e.what());
  }
}

inline void write_alert_log(std::ostream& out, const std::vector<AlertRecord>& alerts) {
  for (const auto& a : alerts) out << alert_to_json(a).dump() << '\n';
}

inline constexpr std::string_view kWindowCsvHeader = "l,packets,positives,rho,rho_bar,alert";

inline void write_window_csv(std::ostream& out, const std::vector<WindowState>& windows) {
  out << kWindowCsvHeader << '\n';
  for (const auto& w : windows) {
    out << w.index << ',' << w.packets << ',' << w.positives << ',' << format_double(w.rho) << ','
        << format_double(w.rho_bar) << ',' << (w.alert ? 1 : 0) << '\n';
  }
}

inline nlohmann::ordered_json edge_log_to_json(const EdgeLog& log) {
  nlohmann::ordered_json j;
  j["edge"] = log.edge;
  j["round"] = log.round;
  nlohmann::ordered_json counters = nlohmann::ordered_json::object();
  for (const auto& [node, n] : log.counters) counters[node.str()] = n;
  j["counters"] = std::move(counters);
  j["skipped"] = log.skipped;
  auto alerts = nlohmann::ordered_json::array();
  for (const auto& a : log.alerts) alerts.push_back(alert_to_json(a));
  j["alerts"] = std::move(alerts);
  return j;
}

inline EdgeLog edge_log_from_json(const nlohmann::json& j) {
  try {
    EdgeLog log;
    log.edge = j.at("edge").get<std::string>();
    if (j.contains("round")) log.round = j.at("round").get<std::int64_t>();
    for (const auto& [node, n] : j.at("counters").items()) log.counters[NodeId(node)] = n.get<std::uint64_t>();
    if (j.contains("skipped")) log.skipped = j.at("skipped").get<std::size_t>();
    if (j.contains("alerts")) {
      for (const auto& a : j.at("alerts")) log.alerts.push_back(alert_from_json(a));
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed edge log: ") + e.what());
  }
}

inline constexpr std::string_view kPredictionCsvHeader = "index,ts,src_node,edge,prediction,confidence";

inline void write_prediction_csv(std::ostream& out, const Trace& trace, const MultiEdgeRun& run) {
  out << kPredictionCsvHeader << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.events()[i];
    const auto& p = run.predictions[i];
    out << i << ',' << format_double(e.ts) << ',' << e.src_node.str() << ',' << run.event_edge[i] << ',' << p.label
        << ',' << format_double(p.confidence) << '\n';
  }
}

}  // namespace arpguard
