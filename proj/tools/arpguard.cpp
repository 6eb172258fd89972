// arpguard: command-line entry point for the ARP spoofing detection pipeline.
//
//   simulate | import | split | featurize | train | detect | aggregate | evaluate
//
// Exit codes: 0 success, 1 data/model error, 2 usage error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "arpguard/arpguard.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using namespace arpguard;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

/// Bookkeeping for one invocation: records inputs, writes outputs, emits the manifest.
class Run {
 public:
  Run(CLI::App* sub, std::string manifest_path)
      : sub_(sub), manifest_path_(std::move(manifest_path)), started_(std::chrono::steady_clock::now()) {}

  void input(const std::string& role, const std::string& path) {
    nlohmann::ordered_json j;
    j["path"] = path;
    j["fnv1a64"] = hex64(fnv1a64(read_file(path)));
    inputs_[role] = std::move(j);
  }

  void write(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + path + "'");
    outputs_[path] = hex64(fnv1a64(content));
  }

  nlohmann::ordered_json& report() { return report_; }

  void finish() {
    nlohmann::ordered_json m;
    m["subcommand"] = sub_->get_name();
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto* opt : sub_->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "help" || name == "manifest") continue;
      if (opt->get_expected_max() == 0) {
        config[name] = opt->count() > 0;
      } else if (opt->count() > 0) {
        const auto& results = opt->results();
        config[name] = results.size() == 1 ? nlohmann::ordered_json(results.front()) : nlohmann::ordered_json(results);
      } else {
        config[name] = opt->get_default_str();
      }
    }
    m["config"] = std::move(config);
    if (m["config"].contains("seed")) m["seed"] = m["config"]["seed"];
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    if (!report_.is_null()) m["report"] = report_;
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    const fs::path p(manifest_path_);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(manifest_path_, std::ios::binary);
    if (!out) throw DataError("cannot write manifest '" + manifest_path_ + "'");
    out << m.dump(2) << '\n';
  }

 private:
  CLI::App* sub_;
  std::string manifest_path_;
  std::chrono::steady_clock::time_point started_;
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::object();
  std::map<std::string, std::string> outputs_;
  nlohmann::ordered_json report_;
};

std::string manifest_or(const std::string& explicit_path, const std::string& fallback) {
  return explicit_path.empty() ? fallback : explicit_path;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Options shared by every subcommand that computes features.
struct FeatureFlags {
  double delta = 0.1;
  double request_window = 60.0;
  bool batch = false;

  void add(CLI::App* app) {
    app->add_option("--delta", delta, "Volatility gap threshold in seconds")->capture_default_str();
    app->add_option("--request-window", request_window, "Seconds a pending ARP request stays matchable")
        ->capture_default_str();
    app->add_flag("--batch", batch, "Whole-window statistics instead of streaming");
  }

  FeatureConfig config() const {
    FeatureConfig c;
    c.delta = delta;
    c.request_window = request_window;
    c.streaming = !batch;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------

struct SimulateOpts {
  int devices = 50;
  int attacks = 20;
  double duration = 3600.0;
  std::uint64_t seed = 0;
  double rate = 0.05;
  double latency_min = 0.001;
  double latency_max = 0.020;
  double burst_rate = 2.0;
  double burst_duration = 30.0;
  double gratuitous_share = 0.5;
  std::string out = "trace.jsonl";
  std::string ownership;
  std::string manifest;
};

void cmd_simulate(CLI::App* sub, const SimulateOpts& o) {
  SimConfig c(o.seed);
  c.devices = o.devices;
  c.attacks = o.attacks;
  c.duration = o.duration;
  c.request_rate = o.rate;
  c.latency_min = o.latency_min;
  c.latency_max = o.latency_max;
  c.burst_rate = o.burst_rate;
  c.burst_duration = o.burst_duration;
  c.gratuitous_share = o.gratuitous_share;
  const auto sim = simulate(c);

  Run run(sub, manifest_or(o.manifest, o.out + ".manifest.json"));
  run.write(o.out, to_jsonl(sim.trace));
  const auto ownership = o.ownership.empty() ? fs::path(o.out).replace_extension(".ownership.json").string() : o.ownership;
  run.write(ownership, ownership_json(sim).dump(2) + "\n");
  std::size_t spoofed = 0;
  for (const auto& e : sim.trace.events()) spoofed += e.label == Label::spoof ? 1 : 0;
  run.report()["events"] = sim.trace.size();
  run.report()["spoofed"] = spoofed;
  run.report()["episodes"] = sim.episodes.size();
  run.finish();
  std::cout << "wrote " << sim.trace.size() << " events (" << spoofed << " spoofed, " << sim.episodes.size()
            << " episodes) to " << o.out << "\n";
}

struct ImportOpts {
  std::string pcap;
  std::string out;
  std::string manifest;
};

void cmd_import(CLI::App* sub, const ImportOpts& o) {
  Run run(sub, manifest_or(o.manifest, o.out + ".manifest.json"));
  run.input("pcap", o.pcap);
  const auto imported = import_pcap(o.pcap);
  run.write(o.out, to_jsonl(imported.trace));
  run.report()["frames"] = imported.frames;
  run.report()["events"] = imported.trace.size();
  run.report()["skipped"] = imported.skipped;
  run.report()["truncated"] = imported.truncated;
  run.finish();
  if (imported.truncated > 0) std::cerr << "warning: " << imported.truncated << " truncated frame(s) skipped\n";
  std::cout << "imported " << imported.trace.size() << " ARP events, skipped " << imported.skipped
            << " non-ARP frame(s)\n";
}

struct SplitOpts {
  std::string trace;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  int blocks = 20;
  std::string train_out;
  std::string test_out;
  std::string manifest;
};

void cmd_split(CLI::App* sub, const SplitOpts& o) {
  Run run(sub, manifest_or(o.manifest, o.train_out + ".manifest.json"));
  run.input("trace", o.trace);
  const auto split = split_trace(read_trace(o.trace), o.fraction, o.seed, o.blocks);
  run.write(o.train_out, to_jsonl(split.train));
  run.write(o.test_out, to_jsonl(split.test));
  run.report()["train_events"] = split.train.size();
  run.report()["test_events"] = split.test.size();
  run.report()["train_episodes"] = split.train_episodes;
  run.report()["test_episodes"] = split.test_episodes;
  run.finish();
  std::cout << "train: " << split.train.size() << " events / " << split.train_episodes << " episodes; test: "
            << split.test.size() << " events / " << split.test_episodes << " episodes\n";
}

struct FeaturizeOpts {
  std::string trace;
  std::string out;
  FeatureFlags features;
  std::string manifest;
};

void cmd_featurize(CLI::App* sub, const FeaturizeOpts& o) {
  Run run(sub, manifest_or(o.manifest, o.out + ".manifest.json"));
  run.input("trace", o.trace);
  const auto trace = read_trace(o.trace);
  const auto xs = featurize(trace, o.features.config());
  std::ostringstream os;
  write_feature_csv(os, feature_rows(trace, xs));
  run.write(o.out, os.str());
  run.finish();
  std::cout << "wrote " << xs.size() << " feature rows to " << o.out << "\n";
}

struct TrainOpts {
  std::string trace;
  std::string features_csv;
  std::string model = "ensemble";
  std::string members = "logistic,tree,forest";
  std::uint64_t seed = 0;
  double lr = 0.1;
  int epochs = 500;
  int depth = 4;
  int forest_size = 5;
  int hidden = 8;
  double validation_split = 0.2;
  FeatureFlags features;
  std::string out;
  std::string manifest;
};

Dataset dataset_from_rows(const std::vector<FeatureRow>& rows) {
  Dataset d;
  for (const auto& r : rows) {
    if (!r.label) throw DataError("training requires labels");
    d.push_back(r.x.to_array(), static_cast<int>(*r.label));
  }
  return d;
}

nlohmann::ordered_json metrics_json(const Score& s) { return to_json(s); }

void cmd_train(CLI::App* sub, const TrainOpts& o) {
  Run run(sub, manifest_or(o.manifest, o.out + ".manifest.json"));
  std::vector<FeatureRow> rows;
  if (!o.features_csv.empty()) {
    run.input("features", o.features_csv);
    std::istringstream in(read_file(o.features_csv));
    rows = read_feature_csv(in);
  } else {
    run.input("trace", o.trace);
    const auto trace = read_trace(o.trace);
    rows = feature_rows(trace, featurize(trace, o.features.config()));
  }
  const auto all = dataset_from_rows(rows);
  all.validate_for_training();

  TrainConfig cfg(o.seed);
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.max_depth = o.depth;
  cfg.forest_size = o.forest_size;
  cfg.hidden_units = o.hidden;
  cfg.validation_split = o.validation_split;
  cfg.validate();

  // Seeded shuffle; the last validation_split share is held out.
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(o.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto held = static_cast<std::size_t>(std::floor(cfg.validation_split * static_cast<double>(all.size())));
  Dataset train, heldout;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < order.size() - held ? train : heldout).push_back(all.x[order[k]], all.y[order[k]]);
  }

  const auto members = split_list(o.members);
  const auto model = train_model(o.model, members, train, cfg);
  run.write(o.out, model_to_string(model));

  auto& report = run.report();
  report["kind"] = std::string(kind_name(model));
  report["train_rows"] = train.size();
  report["heldout_rows"] = heldout.size();
  auto losses = nlohmann::ordered_json::object();
  auto record_loss = [&](std::string_view name, const auto& m) {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, LogisticModel> || std::is_same_v<T, Mlp>) losses[std::string(name)] = m.final_loss;
  };
  if (const auto* e = std::get_if<Ensemble>(&model)) {
    report["members"] = members;
    for (const auto& m : e->members) std::visit([&](const auto& x) { record_loss(kind_name(m), x); }, m);
  } else {
    std::visit([&](const auto& x) { record_loss(kind_name(model), x); }, model);
  }
  report["final_training_loss"] = losses;
  if (heldout.size() > 0) {
    std::vector<int> pred;
    std::vector<std::optional<Label>> labels;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
      pred.push_back(predict(model, heldout.x[i]).label);
      labels.push_back(heldout.y[i] == 1 ? Label::spoof : Label::benign);
    }
    report["heldout"] = metrics_json(score(pred, labels));
  }
  run.finish();
  std::cout << report.dump(2) << "\n";
}

struct DetectOpts {
  std::string model;
  std::string trace;
  std::string out_dir;
  double window = 10.0;
  double gamma = 0.3;
  double alpha = 0.3;
  bool no_smoothing = false;
  int gateways = 5;
  std::int64_t round = 0;
  FeatureFlags features;
  std::string manifest;
};

void cmd_detect(CLI::App* sub, const DetectOpts& o) {
  Run run(sub, manifest_or(o.manifest, in_dir(o.out_dir, "manifest.json")));
  run.input("model", o.model);
  run.input("trace", o.trace);
  const auto model = load_model(o.model);
  const auto trace = read_trace(o.trace);

  DetectorConfig dc;
  dc.window = o.window;
  dc.gamma = o.gamma;
  dc.alpha = o.alpha;
  dc.smoothing = !o.no_smoothing;
  dc.validate();
  auto fc = o.features.config();
  fc.streaming = true;

  auto result = run_edges(trace, model, fc, dc, o.gateways);
  std::ostringstream alerts;
  std::size_t alert_count = 0;
  std::uint64_t detections = 0;
  for (auto& edge : result.edges) {
    edge.log.round = o.round;
    write_alert_log(alerts, edge.log.alerts);
    alert_count += edge.log.alerts.size();
    detections += edge.log.total_detections();
    std::ostringstream windows;
    write_window_csv(windows, edge.windows);
    run.write(in_dir(o.out_dir, "windows-" + edge.log.edge + ".csv"), windows.str());
    run.write(in_dir(o.out_dir, "edge-" + edge.log.edge + ".json"), edge_log_to_json(edge.log).dump(1, '\t') + "\n");
  }
  run.write(in_dir(o.out_dir, "alerts.jsonl"), alerts.str());
  std::ostringstream preds;
  write_prediction_csv(preds, trace, result);
  run.write(in_dir(o.out_dir, "predictions.csv"), preds.str());

  run.report()["edges"] = result.edges.size();
  run.report()["detections"] = detections;
  run.report()["alerts"] = alert_count;
  run.finish();
  std::cout << result.edges.size() << " edge(s), " << detections << " detection(s), " << alert_count
            << " alert(s) -> " << o.out_dir << "\n";
}

/// Expands directories to their edge-*.json files (sorted) and loads every log.
std::vector<EdgeLog> load_edge_logs(const std::vector<std::string>& paths, Run& run) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("edge-", 0) == 0 && entry.path().extension() == ".json") found.push_back(entry.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<EdgeLog> logs;
  for (const auto& f : files) {
    run.input("edge_log:" + f, f);
    const auto j = nlohmann::json::parse(read_file(f), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ParseError("malformed edge log '" + f + "'");
    logs.push_back(edge_log_from_json(j));
  }
  return logs;
}

struct AggregateOpts {
  std::vector<std::string> edge_logs;
  double tau = 0.6;
  double isolate_above = 0.8;
  std::string out_dir;
  std::string manifest;
};

void cmd_aggregate(CLI::App* sub, const AggregateOpts& o) {
  Run run(sub, manifest_or(o.manifest, in_dir(o.out_dir, "aggregate-manifest.json")));
  const auto logs = load_edge_logs(o.edge_logs, run);
  if (logs.empty()) throw DataError("no edge logs");
  AggregatorConfig cfg;
  cfg.tau = o.tau;
  cfg.isolate_above = o.isolate_above;
  cfg.validate();

  const auto rounds = run_rounds(logs, cfg);
  std::vector<MitigationDirective> all;
  for (const auto& r : rounds) all.insert(all.end(), r.directives.begin(), r.directives.end());
  std::ostringstream threat, directives;
  write_threat_csv(threat, rounds.back().table, all);
  write_directive_log(directives, all);
  run.write(in_dir(o.out_dir, "threat.csv"), threat.str());
  run.write(in_dir(o.out_dir, "directives.jsonl"), directives.str());
  run.report()["rounds"] = rounds.size();
  run.report()["directives"] = all.size();
  run.finish();
  std::cout << rounds.size() << " round(s), " << all.size() << " directive(s) at tau=" << o.tau << "\n";
  for (const auto& d : all) std::cout << "  " << d.node << " " << to_string(d.action) << " psi=" << d.psi << "\n";
}

struct EvaluateOpts {
  std::string trace;
  std::string predictions;
  std::vector<std::string> edge_logs;
  std::string model;
  double window = 60.0;
  double detector_window = 10.0;
  FeatureFlags features;
  std::string out_dir;
  std::string manifest;
};

struct PredictionRow {
  double ts = 0.0;
  std::string edge;
  int label = 0;
};

std::vector<PredictionRow> read_predictions(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPredictionCsvHeader) throw ParseError(path + ": line 1: unexpected predictions header");
  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6 || (cells[4] != "0" && cells[4] != "1")) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": malformed prediction row");
    }
    rows.push_back({parse_double(cells[1], "ts"), cells[3], cells[4] == "1" ? 1 : 0});
  }
  return rows;
}

std::string ratio_cell(const std::optional<double>& v) { return v ? format_double(round_to(*v, 6)) : ""; }

void cmd_evaluate(CLI::App* sub, const EvaluateOpts& o) {
  Run run(sub, manifest_or(o.manifest, in_dir(o.out_dir, "evaluate-manifest.json")));
  run.input("trace", o.trace);
  run.input("predictions", o.predictions);
  const auto trace = read_trace(o.trace);
  const auto labels = labels_of(trace);
  const auto rows = read_predictions(o.predictions);
  if (rows.size() != trace.size()) throw DataError("predictions do not align with the trace");
  std::vector<int> pred;
  for (const auto& r : rows) pred.push_back(r.label);

  nlohmann::ordered_json metrics;
  const auto packet = score(pred, labels);
  metrics["packet"] = to_json(packet);

  const auto series = accuracy_over_time(pred, labels, timestamps_of(trace), o.window);
  std::ostringstream fig1;
  fig1 << "window,accuracy\n";
  auto series_json = nlohmann::ordered_json::array();
  for (const auto& w : series) {
    fig1 << w.window << ',' << format_double(round_to(w.accuracy, 6)) << '\n';
    series_json.push_back({w.window, round_to(w.accuracy, 6)});
  }
  metrics["accuracy_over_time"] = {{"window_seconds", o.window}, {"series", series_json}};

  std::ostringstream fig2;
  fig2 << "method,fpr\n" << "detector," << ratio_cell(packet.metrics.fpr) << '\n';
  if (!o.model.empty()) {
    run.input("model", o.model);
    const auto model = load_model(o.model);
    auto fc = o.features.config();
    const auto xs = featurize(trace, fc);
    auto method_fpr = [&](const std::string& name, auto&& predict_one) {
      std::vector<int> p;
      for (const auto& x : xs) p.push_back(predict_one(x.to_array()));
      const auto s = score(p, labels);
      fig2 << name << ',' << ratio_cell(s.metrics.fpr) << '\n';
      metrics["methods"][name] = to_json(s);
    };
    if (const auto* e = std::get_if<Ensemble>(&model)) {
      for (std::size_t k = 0; k < e->members.size(); ++k) {
        method_fpr(std::string(kind_name(e->members[k])) + "#" + std::to_string(k),
                   [&](const FeatureArray& x) { return predict(e->members[k], x).label; });
      }
      method_fpr("ensemble", [&](const FeatureArray& x) { return majority_vote(*e, x); });
      double vs_majority = 0.0, vs_truth = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto x = xs[i].to_array();
        vs_majority += confidence(*e, x, majority_vote(*e, x));
        vs_truth += confidence(*e, x, static_cast<int>(*labels[i]));
      }
      const double n = static_cast<double>(xs.size());
      metrics["confidence"] = {{"mean_vs_ensemble", round_to(vs_majority / n, 6)},
                               {"mean_vs_truth", round_to(vs_truth / n, 6)}};
    } else {
      method_fpr(std::string(kind_name(model)), [&](const FeatureArray& x) { return predict(model, x).label; });
    }
  }

  std::ostringstream fig6;
  fig6 << "tau,directives\n";
  if (!o.edge_logs.empty()) {
    const auto logs = load_edge_logs(o.edge_logs, run);
    const auto table = aggregate(logs);
    auto sweep = nlohmann::ordered_json::array();
    for (int k = 1; k <= 9; ++k) {
      AggregatorConfig cfg;
      cfg.tau = k / 10.0;
      const auto n = decide_mitigation(table, cfg).size();
      fig6 << format_double(cfg.tau) << ',' << n << '\n';
      sweep.push_back({cfg.tau, n});
    }
    metrics["directives_vs_tau"] = sweep;
    auto threat = nlohmann::ordered_json::array();
    for (const auto& [node, entry] : table) {
      if (entry.phi > 0) threat.push_back({{"node", node.str()}, {"phi", entry.phi}, {"psi", round_to(entry.psi, 6)}});
    }
    metrics["threat"] = threat;

    // Window level: an (edge, window) is positive if it holds a spoofed packet, predicted
    // positive if that edge alerted for it.
    std::map<std::pair<std::string, std::int64_t>, std::pair<int, int>> windows;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      auto& w = windows[{rows[i].edge, static_cast<std::int64_t>(std::floor(rows[i].ts / o.detector_window))}];
      if (labels[i] == Label::spoof) w.first = 1;
    }
    for (const auto& log : logs) {
      for (const auto& a : log.alerts) windows[{a.edge, a.window}].second = 1;
    }
    ConfusionCounts wc;
    for (const auto& [key, v] : windows) wc.add(v.second, v.first);
    metrics["window"] = to_json(Score{wc, Metrics::from(wc)});
  }

  run.write(in_dir(o.out_dir, "metrics.json"), metrics.dump(2) + "\n");
  run.write(in_dir(o.out_dir, "accuracy_over_time.csv"), fig1.str());
  run.write(in_dir(o.out_dir, "fpr_by_method.csv"), fig2.str());
  run.write(in_dir(o.out_dir, "directives_vs_tau.csv"), fig6.str());
  run.finish();
  std::cout << metrics["packet"].dump() << "\n";
}

std::string active_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (!a.empty() && a[0] != '-') return a;
    if (a == "--config") ++i;
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arpguard: ARP spoofing detection pipeline"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<cli::JsonConfig>(active_subcommand(argc, argv)));
  app.set_config("--config", "", "JSON file with option defaults (flags override)");

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "Generate a labeled ARP trace");
  s->add_option("--devices", sim.devices, "Number of IoT devices")->capture_default_str();
  s->add_option("--attacks", sim.attacks, "Spoofing episodes to inject")->capture_default_str();
  s->add_option("--duration", sim.duration, "Trace length in seconds")->capture_default_str();
  s->add_option("--seed", sim.seed, "RNG seed")->required();
  s->add_option("--rate", sim.rate, "Benign ARP requests per second per device")->capture_default_str();
  s->add_option("--latency-min", sim.latency_min, "Minimum reply latency (s)")->capture_default_str();
  s->add_option("--latency-max", sim.latency_max, "Maximum reply latency (s)")->capture_default_str();
  s->add_option("--burst-rate", sim.burst_rate, "Spoofed replies per second during an attack")->capture_default_str();
  s->add_option("--burst-duration", sim.burst_duration, "Attack episode length (s)")->capture_default_str();
  s->add_option("--gratuitous-share", sim.gratuitous_share, "Share of spoofed replies sent as broadcasts")
      ->capture_default_str();
  s->add_option("--out", sim.out, "Trace output (JSON-lines)")->capture_default_str();
  s->add_option("--ownership", sim.ownership, "Ground-truth ownership JSON (default: next to --out)");
  s->add_option("--manifest", sim.manifest, "Run manifest path");

  ImportOpts imp;
  auto* i = app.add_subcommand("import", "Convert a classic pcap capture into a trace");
  i->add_option("--pcap", imp.pcap, "Input capture")->required();
  i->add_option("--out", imp.out, "Trace output")->required();
  i->add_option("--manifest", imp.manifest, "Run manifest path");

  SplitOpts spl;
  auto* sp = app.add_subcommand("split", "Episode-aware train/test split of a labeled trace");
  sp->add_option("--trace", spl.trace, "Labeled trace")->required();
  sp->add_option("--fraction", spl.fraction, "Training share")->capture_default_str();
  sp->add_option("--seed", spl.seed, "RNG seed")->required();
  sp->add_option("--blocks", spl.blocks, "Benign time blocks")->capture_default_str();
  sp->add_option("--train-out", spl.train_out, "Training trace output")->required();
  sp->add_option("--test-out", spl.test_out, "Test trace output")->required();
  sp->add_option("--manifest", spl.manifest, "Run manifest path");

  FeaturizeOpts fz;
  auto* f = app.add_subcommand("featurize", "Dump per-packet features as CSV");
  f->add_option("--trace", fz.trace, "Input trace")->required();
  f->add_option("--out", fz.out, "Feature CSV output")->required();
  fz.features.add(f);
  f->add_option("--manifest", fz.manifest, "Run manifest path");

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Train a classifier or ensemble");
  auto* t_trace = t->add_option("--trace", tr.trace, "Labeled trace");
  auto* t_feat = t->add_option("--features", tr.features_csv, "Labeled feature CSV");
  t_trace->excludes(t_feat);
  t->add_option("--model", tr.model, "logistic | tree | forest | mlp | ensemble")
      ->check(CLI::IsMember({"logistic", "tree", "forest", "mlp", "ensemble"}))
      ->capture_default_str();
  t->add_option("--members", tr.members, "Ensemble members, comma separated")->capture_default_str();
  t->add_option("--seed", tr.seed, "RNG seed")->required();
  t->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Gradient descent epochs")->capture_default_str();
  t->add_option("--depth", tr.depth, "Tree max depth")->capture_default_str();
  t->add_option("--forest-size", tr.forest_size, "Bootstrap trees per forest")->capture_default_str();
  t->add_option("--hidden", tr.hidden, "MLP hidden units")->capture_default_str();
  t->add_option("--validation-split", tr.validation_split, "Held-out share of rows")->capture_default_str();
  tr.features.add(t);
  t->add_option("--out", tr.out, "Model output (JSON)")->required();
  t->add_option("--manifest", tr.manifest, "Run manifest path");

  DetectOpts det;
  auto* d = app.add_subcommand("detect", "Run edge detectors over a trace");
  d->add_option("--model", det.model, "Model file")->required();
  d->add_option("--trace", det.trace, "Input trace")->required();
  d->add_option("--out-dir", det.out_dir, "Output directory")->required();
  d->add_option("--window", det.window, "Window length (s)")->capture_default_str();
  d->add_option("--gamma", det.gamma, "Alert threshold on the spoofing rate")->capture_default_str();
  d->add_option("--alpha", det.alpha, "EMA weight of the newest window")->capture_default_str();
  d->add_flag("--no-smoothing", det.no_smoothing, "Alert on the raw rate");
  d->add_option("--gateways", det.gateways, "Edge gateways (0 = one per node)")->capture_default_str();
  d->add_option("--round", det.round, "Round stamp written into edge logs")->capture_default_str();
  det.features.add(d);
  d->add_option("--manifest", det.manifest, "Run manifest path");

  AggregateOpts agg;
  auto* a = app.add_subcommand("aggregate", "Fuse edge logs into threat scores and directives");
  a->add_option("--edge-log", agg.edge_logs, "Edge log file or directory (repeatable)");
  a->add_option("--tau", agg.tau, "Mitigation threshold")->capture_default_str();
  a->add_option("--isolate-above", agg.isolate_above, "Psi above which isolation replaces drop rules")
      ->capture_default_str();
  a->add_option("--out-dir", agg.out_dir, "Output directory")->required();
  a->add_option("--manifest", agg.manifest, "Run manifest path");

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions and emit plot data");
  e->add_option("--trace", ev.trace, "Labeled trace")->required();
  e->add_option("--predictions", ev.predictions, "predictions.csv from detect")->required();
  e->add_option("--edge-log", ev.edge_logs, "Edge log file or directory (repeatable)");
  e->add_option("--model", ev.model, "Model file, for per-member FPR");
  e->add_option("--window", ev.window, "Accuracy-over-time window (s)")->capture_default_str();
  e->add_option("--detector-window", ev.detector_window, "Window length used by detect (s)")->capture_default_str();
  ev.features.add(e);
  e->add_option("--out-dir", ev.out_dir, "Output directory")->required();
  e->add_option("--manifest", ev.manifest, "Run manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  if (t->parsed() && tr.trace.empty() && tr.features_csv.empty()) {
    std::cerr << "train: one of --trace or --features is required\n" << t->help();
    return kExitUsage;
  }

  try {
    if (s->parsed()) cmd_simulate(s, sim);
    if (i->parsed()) cmd_import(i, imp);
    if (sp->parsed()) cmd_split(sp, spl);
    if (f->parsed()) cmd_featurize(f, fz);
    if (t->parsed()) cmd_train(t, tr);
    if (d->parsed()) cmd_detect(d, det);
    if (a->parsed()) cmd_aggregate(a, agg);
    if (e->parsed()) cmd_evaluate(e, ev);
  } catch (const ConfigError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return 0;
}
