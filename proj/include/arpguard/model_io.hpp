#pragma once

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"

#include "arpguard/ensemble.hpp"
#include "arpguard/error.hpp"

namespace arpguard {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

[[noreturn]] inline void corrupt(const std::string& what) { throw ParseError("corrupt model file: " + what); }

inline json array_json(std::span<const double> values) { return json(std::vector<double>(values.begin(), values.end())); }

inline FeatureArray feature_array(const json& j, const char* what) {
  if (!j.is_array() || j.size() != kFeatureCount) corrupt(std::string(what) + " must hold 5 numbers");
  FeatureArray a{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!j[i].is_number()) corrupt(std::string(what) + " must hold numbers");
    a[i] = j[i].get<double>();
  }
  return a;
}

inline const json& field(const json& j, const char* name) {
  if (!j.is_object()) corrupt("expected object");
  auto it = j.find(name);
  if (it == j.end()) corrupt(std::string("missing '") + name + "'");
  return *it;
}

inline double number(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) corrupt(std::string("'") + name + "' must be a number");
  return v.get<double>();
}

inline int integer(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) corrupt(std::string("'") + name + "' must be an integer");
  return v.get<int>();
}

inline json scaling_json(const Scaling& s) { return {{"mean", array_json(s.mean)}, {"std", array_json(s.std)}}; }

inline Scaling scaling_from(const json& j) {
  Scaling s;
  s.mean = feature_array(field(j, "mean"), "scaling.mean");
  s.std = feature_array(field(j, "std"), "scaling.std");
  for (double v : s.std) {
    if (!(v > 0.0)) corrupt("scaling std must be > 0");
  }
  return s;
}

inline json tree_params(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"label", n.label}, {"purity", n.purity}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"label", n.label},
                       {"purity", n.purity}});
    }
  }
  return {{"max_depth", t.max_depth}, {"nodes", std::move(nodes)}};
}

inline DecisionTree tree_from(const json& p) {
  DecisionTree t;
  t.max_depth = integer(p, "max_depth");
  const auto& nodes = field(p, "nodes");
  if (!nodes.is_array() || nodes.empty()) corrupt("tree needs at least one node");
  const int count = static_cast<int>(nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& jn = nodes[static_cast<std::size_t>(i)];
    DecisionTree::Node n;
    n.label = integer(jn, "label");
    n.purity = number(jn, "purity");
    if (n.label != 0 && n.label != 1) corrupt("leaf label must be 0 or 1");
    if (jn.contains("feature")) {
      n.feature = integer(jn, "feature");
      n.threshold = number(jn, "threshold");
      n.left = integer(jn, "left");
      n.right = integer(jn, "right");
      if (n.feature < 0 || n.feature >= static_cast<int>(kFeatureCount)) corrupt("tree feature index out of range");
      // Children always follow their parent, so the structure cannot cycle.
      if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) corrupt("tree child index out of range");
    }
    t.nodes.push_back(n);
  }
  if (t.depth() > t.max_depth) corrupt("tree deeper than its max_depth");
  return t;
}

inline json member_document(const MemberModel& m);

inline json document(const std::string& kind, json scaling, json parameters) {
  json j;
  j["version"] = kModelFormatVersion;
  j["kind"] = kind;
  j["features"] = {"r", "v", "c", "dt", "h"};
  j["scaling"] = std::move(scaling);
  j["parameters"] = std::move(parameters);
  return j;
}

inline json member_document(const MemberModel& m) {
  return std::visit(
      [](const auto& model) -> json {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          return document("logistic", scaling_json(model.scaling),
                          {{"weights", array_json(model.weights)},
                           {"bias", model.bias},
                           {"epochs", model.epochs},
                           {"final_loss", model.final_loss}});
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          return document("tree", nullptr, tree_params(model));
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : model.trees) trees.push_back(document("tree", nullptr, tree_params(t)));
          return document("forest", nullptr, {{"trees", std::move(trees)}});
        } else {
          json hw = json::array();
          for (const auto& row : model.hidden_weights) hw.push_back(array_json(row));
          return document("mlp", scaling_json(model.scaling),
                          {{"hidden_weights", std::move(hw)},
                           {"hidden_bias", model.hidden_bias},
                           {"output_weights", model.output_weights},
                           {"output_bias", model.output_bias},
                           {"epochs", model.epochs},
                           {"final_loss", model.final_loss}});
        }
      },
      m);
}

inline std::vector<double> number_vector(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_array()) corrupt(std::string("'") + name + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) corrupt(std::string("'") + name + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::string check_header(const json& j) {
  if (!j.is_object()) corrupt("expected a JSON object");
  const auto& version = field(j, "version");
  if (!version.is_number_integer()) corrupt("'version' must be an integer");
  if (version.get<int>() != kModelFormatVersion) {
    throw ParseError("unsupported model version " + version.dump() + " (expected " +
                     std::to_string(kModelFormatVersion) + ")");
  }
  const auto& kind = field(j, "kind");
  if (!kind.is_string()) corrupt("'kind' must be a string");
  if (auto it = j.find("features"); it != j.end()) {
    if (*it != json({"r", "v", "c", "dt", "h"})) throw DataError("model features do not match r,v,c,dt,h");
  }
  return kind.get<std::string>();
}

inline MemberModel member_from(const json& j) {
  const auto kind = check_header(j);
  const auto& p = field(j, "parameters");
  if (kind == "logistic") {
    LogisticModel m;
    m.scaling = scaling_from(field(j, "scaling"));
    m.weights = feature_array(field(p, "weights"), "weights");
    m.bias = number(p, "bias");
    m.epochs = integer(p, "epochs");
    m.final_loss = number(p, "final_loss");
    return m;
  }
  if (kind == "tree") return tree_from(p);
  if (kind == "forest") {
    RandomForest f;
    const auto& trees = field(p, "trees");
    if (!trees.is_array() || trees.empty()) corrupt("forest needs at least one tree");
    for (const auto& t : trees) {
      if (check_header(t) != "tree") corrupt("forest members must be trees");
      f.trees.push_back(tree_from(field(t, "parameters")));
    }
    return f;
  }
  if (kind == "mlp") {
    Mlp m;
    m.scaling = scaling_from(field(j, "scaling"));
    const auto& hw = field(p, "hidden_weights");
    if (!hw.is_array() || hw.empty()) corrupt("mlp needs hidden weights");
    for (const auto& row : hw) m.hidden_weights.push_back(feature_array(row, "hidden_weights"));
    m.hidden_bias = number_vector(p, "hidden_bias");
    m.output_weights = number_vector(p, "output_weights");
    if (m.hidden_bias.size() != m.hidden_weights.size() || m.output_weights.size() != m.hidden_weights.size()) {
      corrupt("mlp layer sizes disagree");
    }
    m.output_bias = number(p, "output_bias");
    m.epochs = integer(p, "epochs");
    m.final_loss = number(p, "final_loss");
    return m;
  }
  throw ParseError("unsupported model kind '" + kind + "'");
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
  if (const auto* e = std::get_if<Ensemble>(&model)) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : e->members) members.push_back(detail::member_document(m));
    return detail::document("ensemble", nullptr,
                            {{"tie_break", e->tie_break == TieBreak::spoof ? "spoof" : "benign"},
                             {"members", std::move(members)}});
  }
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Ensemble>) {
          return {};
        } else {
          return detail::member_document(m);
        }
      },
      model);
}

inline Model model_from_json(const nlohmann::json& j) {
  const auto kind = detail::check_header(j);
  if (kind == "ensemble") {
    const auto& p = detail::field(j, "parameters");
    Ensemble e;
    const auto& tie = detail::field(p, "tie_break");
    if (tie == "spoof") {
      e.tie_break = TieBreak::spoof;
    } else if (tie == "benign") {
      e.tie_break = TieBreak::benign;
    } else {
      detail::corrupt("unknown tie_break");
    }
    const auto& members = detail::field(p, "members");
    if (!members.is_array() || members.empty()) detail::corrupt("ensemble needs at least one member");
    for (const auto& m : members) e.members.push_back(detail::member_from(m));
    return e;
  }
  return std::visit([](auto&& m) -> Model { return std::move(m); }, detail::member_from(j));
}

inline std::string model_to_string(const Model& model) { return model_to_json(model).dump(1, '\t') + "\n"; }

inline Model model_from_string(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) detail::corrupt("not valid JSON");
  return model_from_json(j);
}

inline void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model '" + path + "'");
  out << model_to_string(model);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_string(text);
}

}  // namespace arpguard
