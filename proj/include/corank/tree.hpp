#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "corank/error.hpp"
#include "corank/featurizer.hpp"

namespace corank {

// Array-backed node: feature < 0 marks a leaf. Internal nodes route
// `value <= threshold` to the left child.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // root at index 0
  int leaf_count = 0;

  int leaf_index(const FeatureVector& v) const {
    int idx = 0;
    while (!nodes[idx].is_leaf())
      idx = v[static_cast<std::size_t>(nodes[idx].feature)] <= nodes[idx].threshold
                ? nodes[idx].left
                : nodes[idx].right;
    return idx;
  }

  double predict(const FeatureVector& v) const { return nodes[static_cast<std::size_t>(leaf_index(v))].value; }

  bool operator==(const RegressionTree&) const = default;
};

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct OpenLeaf {
  int node = -1;
  std::vector<std::size_t> rows;
  double sum_w = 0.0;
  double sum_wt = 0.0;
  SplitCandidate best;
};

// Best split for one leaf: scan all features and midpoints of consecutive
// distinct sorted values, maximizing weighted variance reduction. Ties break
// by lowest feature index, then lowest threshold (scan order).
inline SplitCandidate find_best_split(const std::vector<FeatureVector>& rows,
                                      const std::vector<double>& targets,
                                      const std::vector<double>* weights, const OpenLeaf& leaf,
                                      int min_samples_leaf) {
  SplitCandidate best;
  if (leaf.rows.size() < 2 * static_cast<std::size_t>(min_samples_leaf)) return best;
  const double parent_score = leaf.sum_wt * leaf.sum_wt / leaf.sum_w;

  std::vector<std::size_t> order(leaf.rows);
  for (int f = 0; f < kNumFeatures; ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rows[a][static_cast<std::size_t>(f)] < rows[b][static_cast<std::size_t>(f)];
    });
    double left_w = 0.0;
    double left_wt = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t row = order[i];
      const double w = weights != nullptr ? (*weights)[row] : 1.0;
      left_w += w;
      left_wt += w * targets[row];
      const double lo = rows[row][static_cast<std::size_t>(f)];
      const double hi = rows[order[i + 1]][static_cast<std::size_t>(f)];
      if (lo == hi) continue;
      if (i + 1 < static_cast<std::size_t>(min_samples_leaf) ||
          order.size() - i - 1 < static_cast<std::size_t>(min_samples_leaf))
        continue;
      const double right_w = leaf.sum_w - left_w;
      const double right_wt = leaf.sum_wt - left_wt;
      if (left_w <= 0.0 || right_w <= 0.0) continue;
      const double gain =
          left_wt * left_wt / left_w + right_wt * right_wt / right_w - parent_score;
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = f;
        best.threshold = lo + (hi - lo) / 2.0;
      }
    }
  }
  return best;
}

}  // namespace detail

// Greedy best-first growth: repeatedly split the open leaf whose best split
// gives the largest weighted variance reduction, until max_leaves is reached
// or no split improves. Leaf values are weighted target means; callers with
// second-order information can overwrite them afterwards.
inline RegressionTree fit_regression_tree(const std::vector<FeatureVector>& rows,
                                          const std::vector<double>& targets,
                                          const std::vector<double>* weights, int max_leaves,
                                          int min_samples_leaf = 1) {
  if (rows.empty()) throw Error("cannot fit a tree on no rows");
  if (targets.size() != rows.size()) throw Error("targets and rows differ in length");
  if (weights != nullptr && weights->size() != rows.size())
    throw Error("weights and rows differ in length");
  if (max_leaves < 1) throw Error("max_leaves must be at least 1");
  if (min_samples_leaf < 1) throw Error("min_samples_leaf must be at least 1");

  constexpr double kMinGain = 1e-12;

  RegressionTree tree;
  auto make_leaf = [&](std::vector<std::size_t> leaf_rows) {
    detail::OpenLeaf leaf;
    leaf.node = static_cast<int>(tree.nodes.size());
    leaf.rows = std::move(leaf_rows);
    for (const std::size_t r : leaf.rows) {
      const double w = weights != nullptr ? (*weights)[r] : 1.0;
      leaf.sum_w += w;
      leaf.sum_wt += w * targets[r];
    }
    TreeNode node;
    node.value = leaf.sum_w > 0.0 ? leaf.sum_wt / leaf.sum_w : 0.0;
    tree.nodes.push_back(node);
    leaf.best = detail::find_best_split(rows, targets, weights, leaf, min_samples_leaf);
    return leaf;
  };

  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<detail::OpenLeaf> open;
  open.push_back(make_leaf(std::move(all)));

  int leaves = 1;
  while (leaves < max_leaves) {
    // Earliest-created leaf wins gain ties, keeping growth deterministic.
    std::size_t pick = open.size();
    double best_gain = kMinGain;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (open[i].best.feature >= 0 && open[i].best.gain > best_gain) {
        best_gain = open[i].best.gain;
        pick = i;
      }
    }
    if (pick == open.size()) break;

    detail::OpenLeaf leaf = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (const std::size_t r : leaf.rows) {
      if (rows[r][static_cast<std::size_t>(leaf.best.feature)] <= leaf.best.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }

    auto left = make_leaf(std::move(left_rows));
    auto right = make_leaf(std::move(right_rows));
    auto& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
    node.feature = leaf.best.feature;
    node.threshold = leaf.best.threshold;
    node.left = left.node;
    node.right = right.node;
    node.value = 0.0;
    open.push_back(std::move(left));
    open.push_back(std::move(right));
    ++leaves;
  }

  tree.leaf_count = leaves;
  return tree;
}

}  // namespace corank
