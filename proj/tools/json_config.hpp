#pragma once

#include <istream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace arpguard::cli {

/// Reads CLI defaults from a JSON object. Nested objects are keyed by subcommand
/// ({"detect": {"gamma": 0.2}}); top-level scalars apply to the active subcommand.
/// Flags given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string active_subcommand) : active_(std::move(active_subcommand)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [name, v] : value.items()) items.push_back(item({key}, name, v));
      } else if (!active_.empty()) {
        items.push_back(item({active_}, key, value));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const nlohmann::json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  std::string active_;
};

}  // namespace arpguard::cli
