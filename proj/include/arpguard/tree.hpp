#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "arpguard/dataset.hpp"
#include "arpguard/rng.hpp"

namespace arpguard {

/// CART-style binary classification tree. Internal nodes send x[feature] <= threshold left.
struct DecisionTree {
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 1;
    double purity = 1.0;  ///< share of training rows at this node carrying `label`

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;  ///< nodes[0] is the root
  int max_depth = 0;

  Prediction predict(std::span<const double> x) const {
    const auto features = checked_features(x);
    std::size_t at = 0;
    while (!nodes.at(at).is_leaf()) {
      const auto& n = nodes[at];
      at = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    const auto& leaf = nodes[at];
    return {leaf.label, leaf.purity, leaf.label == 1 ? leaf.purity : 1.0 - leaf.purity};
  }

  /// Longest root-to-leaf path, counted in edges.
  int depth() const { return nodes.empty() ? 0 : depth_from(0); }

  bool operator==(const DecisionTree&) const = default;

 private:
  int depth_from(std::size_t at) const {
    const auto& n = nodes[at];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }
};

namespace detail {

inline double gini(std::size_t ones, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(ones) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, int max_depth) : data_(data), max_depth_(max_depth) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    tree.max_depth = max_depth_;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  int grow(DecisionTree& tree, std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::size_t ones = 0;
    for (auto r : rows) ones += static_cast<std::size_t>(data_.y[r]);
    const std::size_t zeros = rows.size() - ones;
    {
      auto& node = tree.nodes[static_cast<std::size_t>(index)];
      // Majority label; ties (including an empty node) resolve to spoof.
      node.label = ones >= zeros ? 1 : 0;
      node.purity = rows.empty() ? 1.0
                                 : static_cast<double>(std::max(ones, zeros)) / static_cast<double>(rows.size());
    }
    if (depth >= max_depth_ || ones == 0 || zeros == 0) return index;

    const auto split = best_split(rows, ones);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (data_.x[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, std::move(left), depth + 1);
    const int rgt = grow(tree, std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rgt;
    return index;
  }

  // Lowest weighted Gini wins; ties go to the lowest feature index, then the lowest threshold.
  Split best_split(const std::vector<std::size_t>& rows, std::size_t ones_total) const {
    Split best;
    double best_impurity = std::numeric_limits<double>::infinity();
    const std::size_t n = rows.size();
    std::vector<std::pair<double, int>> column(n);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      for (std::size_t i = 0; i < n; ++i) column[i] = {data_.x[rows[i]][f], data_.y[rows[i]]};
      std::sort(column.begin(), column.end());
      std::size_t left_ones = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_ones += static_cast<std::size_t>(column[i].second);
        const double lo = column[i].first;
        const double hi = column[i + 1].first;
        if (!(lo < hi)) continue;
        const std::size_t left_n = i + 1;
        const std::size_t right_n = n - left_n;
        const double impurity = (static_cast<double>(left_n) * gini(left_ones, left_n) +
                                 static_cast<double>(right_n) * gini(ones_total - left_ones, right_n)) /
                                static_cast<double>(n);
        if (impurity < best_impurity - 1e-12) {
          best_impurity = impurity;
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {static_cast<int>(f), mid, impurity};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  int max_depth_;
};

}  // namespace detail

/// Greedy Gini splitting without the two-class precondition; used for bootstrap members.
inline DecisionTree grow_tree(const Dataset& data, std::vector<std::size_t> rows, int max_depth) {
  return detail::TreeBuilder(data, max_depth).build(std::move(rows));
}

inline DecisionTree train_tree(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate_for_training();
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return grow_tree(data, std::move(rows), config.max_depth);
}

/// Bagged trees combined by majority vote (ties to spoof).
struct RandomForest {
  std::vector<DecisionTree> trees;

  Prediction predict(std::span<const double> x) const {
    std::size_t ones = 0;
    for (const auto& t : trees) ones += static_cast<std::size_t>(t.predict(x).label);
    const std::size_t zeros = trees.size() - ones;
    const int label = ones >= zeros ? 1 : 0;
    const double share = static_cast<double>(std::max(ones, zeros)) / static_cast<double>(trees.size());
    return {label, share, static_cast<double>(ones) / static_cast<double>(trees.size())};
  }

  bool operator==(const RandomForest&) const = default;
};

inline RandomForest train_forest(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate_for_training();
  RandomForest forest;
  Rng rng(config.seed);
  for (int b = 0; b < config.forest_size; ++b) {
    std::vector<std::size_t> rows(data.size());
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(data.size()));
    forest.trees.push_back(grow_tree(data, std::move(rows), config.max_depth));
  }
  return forest;
}

}  // namespace arpguard
