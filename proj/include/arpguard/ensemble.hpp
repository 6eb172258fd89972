#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arpguard/dataset.hpp"
#include "arpguard/logistic.hpp"
#include "arpguard/mlp.hpp"
#include "arpguard/tree.hpp"

namespace arpguard {

using MemberModel = std::variant<LogisticModel, DecisionTree, RandomForest, Mlp>;

enum class TieBreak { spoof, benign };

/// Ordered members combined by majority vote.
struct Ensemble {
  std::vector<MemberModel> members;
  TieBreak tie_break = TieBreak::spoof;

  bool operator==(const Ensemble&) const = default;
};

using Model = std::variant<LogisticModel, DecisionTree, RandomForest, Mlp, Ensemble>;

inline std::string_view kind_name(const MemberModel& m) {
  static constexpr std::string_view kNames[] = {"logistic", "tree", "forest", "mlp"};
  return kNames[m.index()];
}

inline std::string_view kind_name(const Model& m) {
  static constexpr std::string_view kNames[] = {"logistic", "tree", "forest", "mlp", "ensemble"};
  return kNames[m.index()];
}

inline Prediction predict(const MemberModel& m, std::span<const double> x) {
  return std::visit([&](const auto& model) { return model.predict(x); }, m);
}

inline std::vector<int> member_votes(const Ensemble& e, std::span<const double> x) {
  std::vector<int> votes;
  votes.reserve(e.members.size());
  for (const auto& m : e.members) votes.push_back(predict(m, x).label);
  return votes;
}

/// Label with strictly more votes wins; an exact tie follows the tie-break rule.
inline int majority_of(std::span<const int> votes, TieBreak tie_break = TieBreak::spoof) {
  const auto ones = std::count(votes.begin(), votes.end(), 1);
  const auto zeros = static_cast<std::ptrdiff_t>(votes.size()) - ones;
  if (ones != zeros) return ones > zeros ? 1 : 0;
  return tie_break == TieBreak::spoof ? 1 : 0;
}

inline int majority_vote(const Ensemble& e, std::span<const double> x) {
  if (e.members.empty()) throw DataError("ensemble has no members");
  const auto votes = member_votes(e, x);
  return majority_of(votes, e.tie_break);
}

/// Fraction of members whose vote equals `reference_label`.
inline double agreement(std::span<const int> votes, int reference_label) {
  if (votes.empty()) return 0.0;
  const auto agree = std::count(votes.begin(), votes.end(), reference_label);
  return static_cast<double>(agree) / static_cast<double>(votes.size());
}

inline double confidence(const Ensemble& e, std::span<const double> x, int reference_label) {
  if (e.members.empty()) throw DataError("ensemble has no members");
  return agreement(member_votes(e, x), reference_label);
}

/// For an ensemble: majority label, `probability` = member agreement with it,
/// `spoof_probability` = share of spoof votes.
inline Prediction predict(const Model& m, std::span<const double> x) {
  if (const auto* e = std::get_if<Ensemble>(&m)) {
    if (e->members.empty()) throw DataError("ensemble has no members");
    const auto votes = member_votes(*e, x);
    const int label = majority_of(votes, e->tie_break);
    return {label, agreement(votes, label), agreement(votes, 1)};
  }
  return std::visit(
      [&](const auto& model) -> Prediction {
        if constexpr (std::is_same_v<std::decay_t<decltype(model)>, Ensemble>) {
          return {};
        } else {
          return model.predict(x);
        }
      },
      m);
}

inline MemberModel train_member(std::string_view kind, const Dataset& data, const TrainConfig& config) {
  if (kind == "logistic") return train_logistic(data, config);
  if (kind == "tree") return train_tree(data, config);
  if (kind == "forest") return train_forest(data, config);
  if (kind == "mlp") return train_mlp(data, config);
  throw ConfigError("unsupported model kind '" + std::string(kind) + "'");
}

inline Ensemble train_ensemble(std::span<const std::string> kinds, const Dataset& data, const TrainConfig& config) {
  if (kinds.empty()) throw ConfigError("ensemble needs at least one member");
  Ensemble e;
  for (const auto& k : kinds) e.members.push_back(train_member(k, data, config));
  return e;
}

inline Model train_model(std::string_view kind, std::span<const std::string> members, const Dataset& data,
                         const TrainConfig& config) {
  if (kind == "ensemble") return train_ensemble(members, data, config);
  return std::visit([](auto&& m) -> Model { return std::move(m); }, train_member(kind, data, config));
}

}  // namespace arpguard
