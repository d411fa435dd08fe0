#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corank/error.hpp"
#include "corank/featurizer.hpp"
#include "corank/metrics.hpp"
#include "corank/tree.hpp"

namespace corank {

struct BoostParams {
  int max_trees = 1000;
  int leaves_per_tree = 10;
  double shrinkage = 0.1;
  int early_stop_rounds = 50;
  int ndcg_cutoff = 10;
  double sigma = 1.0;  // pairwise logistic steepness
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

struct TreeEnsemble {
  std::vector<RegressionTree> trees;
  double shrinkage = 0.1;
  double base_score = 0.0;

  double predict(const FeatureVector& v) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(v);
    return base_score + shrinkage * sum;
  }

  TreeEnsemble prefix(std::size_t tree_count) const {
    TreeEnsemble out;
    out.shrinkage = shrinkage;
    out.base_score = base_score;
    out.trees.assign(trees.begin(), trees.begin() + static_cast<std::ptrdiff_t>(
                                                        std::min(tree_count, trees.size())));
    return out;
  }

  bool operator==(const TreeEnsemble&) const = default;
};

struct LambdaGradients {
  std::vector<double> lambdas;
  std::vector<double> hessians;
};

// Lambda-gradients of nDCG@k for one query group. For every pair with
// label_i > label_j:
//   rho    = 1 / (1 + exp(sigma * (score_i - score_j)))
//   delta  = |nDCG@k change from swapping i and j in the current ranking|
//   lambda_i += sigma * rho * delta,      lambda_j -= the same
//   hessian_{i,j} += sigma^2 * rho * (1 - rho) * delta
// Positive lambda pushes the item up.
inline LambdaGradients compute_lambdas(const std::vector<double>& scores,
                                       const std::vector<std::int64_t>& labels, int k,
                                       double sigma) {
  if (scores.size() != labels.size())
    throw Error("compute_lambdas: scores and labels differ in length");

  const std::size_t n = scores.size();
  LambdaGradients out;
  out.lambdas.assign(n, 0.0);
  out.hessians.assign(n, 0.0);
  if (n < 2) return out;

  std::vector<std::int64_t> ideal = labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at_k(ideal, k);
  if (idcg == 0.0) return out;  // all labels zero: no ordered pairs

  const auto order = rank_by_score(scores);
  std::vector<std::size_t> position(n);  // 1-based rank in the current ordering
  for (std::size_t pos = 0; pos < n; ++pos) position[order[pos]] = pos + 1;

  const auto discount = [k](std::size_t pos) {
    return pos <= static_cast<std::size_t>(k) ? 1.0 / std::log2(static_cast<double>(pos) + 1.0)
                                              : 0.0;
  };

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (labels[a] == labels[b]) continue;
      const std::size_t hi = labels[a] > labels[b] ? a : b;
      const std::size_t lo = hi == a ? b : a;
      const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[hi] - scores[lo])));
      const double delta = std::abs((dcg_gain(labels[hi]) - dcg_gain(labels[lo])) *
                                    (discount(position[hi]) - discount(position[lo]))) /
                           idcg;
      const double lambda = sigma * rho * delta;
      const double hessian = sigma * sigma * rho * (1.0 - rho) * delta;
      out.lambdas[hi] += lambda;
      out.lambdas[lo] -= lambda;
      out.hessians[hi] += hessian;
      out.hessians[lo] += hessian;
    }
  }
  return out;
}

namespace detail {

struct FlatGroups {
  std::vector<FeatureVector> rows;
  std::vector<std::int64_t> labels;
  std::vector<std::size_t> bounds;  // group g spans rows [bounds[g], bounds[g+1])

  std::size_t group_count() const { return bounds.empty() ? 0 : bounds.size() - 1; }
};

inline FlatGroups flatten(const std::vector<QueryGroup>& groups) {
  FlatGroups flat;
  flat.bounds.push_back(0);
  for (const auto& g : groups) {
    for (const auto& e : g.entries) {
      flat.rows.push_back(e.features);
      flat.labels.push_back(e.label);
    }
    flat.bounds.push_back(flat.rows.size());
  }
  return flat;
}

inline double mean_group_ndcg(const FlatGroups& flat, const std::vector<double>& scores, int k) {
  double sum = 0.0;
  for (std::size_t g = 0; g < flat.group_count(); ++g) {
    const auto lo = flat.bounds[g];
    const auto hi = flat.bounds[g + 1];
    const std::vector<double> s(scores.begin() + static_cast<std::ptrdiff_t>(lo),
                                scores.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::vector<std::int64_t> l(flat.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                                      flat.labels.begin() + static_cast<std::ptrdiff_t>(hi));
    sum += ndcg_at_k(s, l, k);
  }
  return sum / static_cast<double>(flat.group_count());
}

}  // namespace detail

struct TrainResult {
  TreeEnsemble model;
  std::vector<double> train_mse;        // MART: squared-error after each round
  std::vector<double> validation_ndcg;  // [0] is the tree-less model, then one per round
  int best_prefix = 0;                  // tree count kept after truncation
  bool degenerate_labels = false;       // LambdaMART saw no ordered pairs at round 1
};

namespace detail {

// Shared boosting loop. fit_round(residual targets already in place) appends
// one tree and must update the training scores itself.
class EarlyStopper {
 public:
  EarlyStopper(const FlatGroups* valid, int cutoff, int patience)
      : valid_(valid), cutoff_(cutoff), patience_(patience) {}

  bool enabled() const { return valid_ != nullptr && valid_->group_count() > 0; }

  // Returns true when training should stop.
  bool record(const std::vector<double>& valid_scores, std::vector<double>& history,
              int round) {
    if (!enabled()) return false;
    const double value = mean_group_ndcg(*valid_, valid_scores, cutoff_);
    history.push_back(value);
    if (value > best_value_) {
      best_value_ = value;
      best_round_ = round;
    }
    return round - best_round_ >= patience_;
  }

  int best_round() const { return best_round_; }

 private:
  const FlatGroups* valid_;
  int cutoff_;
  int patience_;
  double best_value_ = -1.0;
  int best_round_ = 0;
};

}  // namespace detail

// Pointwise gradient boosting on squared error against the engagement label.
// Validation (when non-empty) drives early stopping on mean nDCG@cutoff and
// the returned ensemble is truncated to the best-validation prefix.
inline TrainResult train_mart(const std::vector<QueryGroup>& train,
                              const std::vector<QueryGroup>& valid, const BoostParams& p) {
  const auto flat = detail::flatten(train);
  if (flat.rows.empty()) throw Error("train_mart: empty training input");
  const auto flat_valid = detail::flatten(valid);

  TrainResult result;
  result.model.shrinkage = p.shrinkage;
  result.model.base_score =
      std::accumulate(flat.labels.begin(), flat.labels.end(), 0.0) /
      static_cast<double>(flat.labels.size());

  std::vector<double> scores(flat.rows.size(), result.model.base_score);

  // Validation scores are composed as base + shrinkage * sum so each round's
  // metric is bitwise identical to re-predicting with the tree prefix.
  std::vector<double> valid_tree_sum(flat_valid.rows.size(), 0.0);
  std::vector<double> valid_scores(flat_valid.rows.size(), result.model.base_score);

  detail::EarlyStopper stopper(&flat_valid, p.ndcg_cutoff, p.early_stop_rounds);
  if (stopper.enabled()) stopper.record(valid_scores, result.validation_ndcg, 0);

  std::vector<double> residuals(flat.rows.size());
  for (int round = 1; round <= p.max_trees; ++round) {
    for (std::size_t i = 0; i < flat.rows.size(); ++i)
      residuals[i] = static_cast<double>(flat.labels[i]) - scores[i];

    RegressionTree tree = fit_regression_tree(flat.rows, residuals, nullptr, p.leaves_per_tree,
                                              p.min_samples_leaf);
    for (std::size_t i = 0; i < flat.rows.size(); ++i)
      scores[i] += p.shrinkage * tree.predict(flat.rows[i]);
    for (std::size_t i = 0; i < flat_valid.rows.size(); ++i) {
      valid_tree_sum[i] += tree.predict(flat_valid.rows[i]);
      valid_scores[i] = result.model.base_score + p.shrinkage * valid_tree_sum[i];
    }
    result.model.trees.push_back(std::move(tree));

    double mse = 0.0;
    for (std::size_t i = 0; i < flat.rows.size(); ++i) {
      const double d = static_cast<double>(flat.labels[i]) - scores[i];
      mse += d * d;
    }
    result.train_mse.push_back(mse / static_cast<double>(flat.rows.size()));

    if (stopper.record(valid_scores, result.validation_ndcg, round)) break;
  }

  if (stopper.enabled()) {
    result.best_prefix = stopper.best_round();
    result.model.trees.resize(static_cast<std::size_t>(result.best_prefix));
    result.train_mse.resize(static_cast<std::size_t>(result.best_prefix));
  } else {
    result.best_prefix = static_cast<int>(result.model.trees.size());
  }
  return result;
}

// LambdaMART: each round fits a tree to the per-triple lambda-gradients and
// replaces leaf outputs with Newton steps sum(lambda) / (sum(hessian) + eps).
inline TrainResult train_lambdamart(const std::vector<QueryGroup>& train,
                                    const std::vector<QueryGroup>& valid, const BoostParams& p) {
  constexpr double kNewtonEps = 1e-9;

  const auto flat = detail::flatten(train);
  if (flat.rows.empty()) throw Error("train_lambdamart: empty training input");
  const auto flat_valid = detail::flatten(valid);

  TrainResult result;
  result.model.shrinkage = p.shrinkage;
  result.model.base_score = 0.0;

  std::vector<double> scores(flat.rows.size(), 0.0);
  std::vector<double> valid_tree_sum(flat_valid.rows.size(), 0.0);
  std::vector<double> valid_scores(flat_valid.rows.size(), 0.0);

  detail::EarlyStopper stopper(&flat_valid, p.ndcg_cutoff, p.early_stop_rounds);
  if (stopper.enabled()) stopper.record(valid_scores, result.validation_ndcg, 0);

  std::vector<double> lambdas(flat.rows.size());
  std::vector<double> hessians(flat.rows.size());
  for (int round = 1; round <= p.max_trees; ++round) {
    for (std::size_t g = 0; g < flat.group_count(); ++g) {
      const auto lo = flat.bounds[g];
      const auto hi = flat.bounds[g + 1];
      const std::vector<double> s(scores.begin() + static_cast<std::ptrdiff_t>(lo),
                                  scores.begin() + static_cast<std::ptrdiff_t>(hi));
      const std::vector<std::int64_t> l(flat.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                                        flat.labels.begin() + static_cast<std::ptrdiff_t>(hi));
      const auto grad = compute_lambdas(s, l, p.ndcg_cutoff, p.sigma);
      std::copy(grad.lambdas.begin(), grad.lambdas.end(),
                lambdas.begin() + static_cast<std::ptrdiff_t>(lo));
      std::copy(grad.hessians.begin(), grad.hessians.end(),
                hessians.begin() + static_cast<std::ptrdiff_t>(lo));
    }

    if (round == 1 &&
        std::all_of(lambdas.begin(), lambdas.end(), [](double v) { return v == 0.0; })) {
      result.degenerate_labels = true;  // nothing to order: keep the base-score model
      result.best_prefix = 0;
      return result;
    }

    RegressionTree tree = fit_regression_tree(flat.rows, lambdas, nullptr, p.leaves_per_tree,
                                              p.min_samples_leaf);
    std::vector<double> leaf_lambda(tree.nodes.size(), 0.0);
    std::vector<double> leaf_hessian(tree.nodes.size(), 0.0);
    std::vector<int> row_leaf(flat.rows.size());
    for (std::size_t i = 0; i < flat.rows.size(); ++i) {
      row_leaf[i] = tree.leaf_index(flat.rows[i]);
      leaf_lambda[static_cast<std::size_t>(row_leaf[i])] += lambdas[i];
      leaf_hessian[static_cast<std::size_t>(row_leaf[i])] += hessians[i];
    }
    for (std::size_t idx = 0; idx < tree.nodes.size(); ++idx)
      if (tree.nodes[idx].is_leaf())
        tree.nodes[idx].value = leaf_lambda[idx] / (leaf_hessian[idx] + kNewtonEps);

    for (std::size_t i = 0; i < flat.rows.size(); ++i)
      scores[i] += p.shrinkage * tree.nodes[static_cast<std::size_t>(row_leaf[i])].value;
    for (std::size_t i = 0; i < flat_valid.rows.size(); ++i) {
      valid_tree_sum[i] += tree.predict(flat_valid.rows[i]);
      valid_scores[i] = result.model.base_score + p.shrinkage * valid_tree_sum[i];
    }
    result.model.trees.push_back(std::move(tree));

    if (stopper.record(valid_scores, result.validation_ndcg, round)) break;
  }

  if (stopper.enabled()) {
    result.best_prefix = stopper.best_round();
    result.model.trees.resize(static_cast<std::size_t>(result.best_prefix));
  } else {
    result.best_prefix = static_cast<int>(result.model.trees.size());
  }
  return result;
}

struct BlendMember {
  TreeEnsemble ensemble;
  double weight = 1.0;
  std::string role;  // "lambdamart" or "mart" in trained models

  bool operator==(const BlendMember&) const = default;
};

struct LinearBlend {
  std::vector<BlendMember> members;

  double score(const FeatureVector& v) const {
    double sum = 0.0;
    for (const auto& m : members) sum += m.weight * m.ensemble.predict(v);
    return sum;
  }

  bool operator==(const LinearBlend&) const = default;
};

// Grid search over (w, 1-w), w in {0.00, 0.05, ..., 1.00}, maximizing
// validation mean nDCG@k. Ties keep the larger weight on the first member.
inline LinearBlend fit_blend_weights(std::vector<BlendMember> members,
                                     const std::vector<QueryGroup>& valid, int k) {
  if (members.empty()) throw Error("fit_blend_weights: no members");
  if (valid.empty()) throw Error("fit_blend_weights: empty validation groups");

  if (members.size() == 1) {
    members.front().weight = 1.0;
    return LinearBlend{std::move(members)};
  }
  if (members.size() > 2) throw Error("fit_blend_weights: grid search supports two members");

  const auto flat = detail::flatten(valid);
  std::vector<double> first(flat.rows.size());
  std::vector<double> second(flat.rows.size());
  for (std::size_t i = 0; i < flat.rows.size(); ++i) {
    first[i] = members[0].ensemble.predict(flat.rows[i]);
    second[i] = members[1].ensemble.predict(flat.rows[i]);
  }

  double best_w = 1.0;
  double best_value = -1.0;
  std::vector<double> blended(flat.rows.size());
  for (int step = 20; step >= 0; --step) {
    const double w = static_cast<double>(step) / 20.0;
    for (std::size_t i = 0; i < flat.rows.size(); ++i)
      blended[i] = w * first[i] + (1.0 - w) * second[i];
    const double value = detail::mean_group_ndcg(flat, blended, k);
    if (value > best_value) {
      best_value = value;
      best_w = w;
    }
  }

  members[0].weight = best_w;
  members[1].weight = 1.0 - best_w;
  return LinearBlend{std::move(members)};
}

// Tweets in descending score order; equal scores order by tweet_id.
inline std::vector<std::string> rank_user(const LinearBlend& model, const QueryGroup& g) {
  std::vector<std::size_t> order(g.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> scores(g.entries.size());
  for (std::size_t i = 0; i < g.entries.size(); ++i) scores[i] = model.score(g.entries[i].features);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return g.entries[a].tweet_id < g.entries[b].tweet_id;
  });
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (const auto i : order) ids.push_back(g.entries[i].tweet_id);
  return ids;
}

// ---------------------------------------------------------------------------
// Model file: a single JSON document holding the parameters, the fitted
// normalizer and the blended ensembles. Unknown format versions are rejected.

inline constexpr int kModelFormatVersion = 1;

struct RankModel {
  BoostParams params;
  Normalizer normalizer;
  LinearBlend blend;
};

namespace detail {

inline nlohmann::json params_to_json(const BoostParams& p) {
  return {{"max_trees", p.max_trees},
          {"leaves_per_tree", p.leaves_per_tree},
          {"shrinkage", p.shrinkage},
          {"early_stop_rounds", p.early_stop_rounds},
          {"ndcg_cutoff", p.ndcg_cutoff},
          {"sigma", p.sigma},
          {"min_samples_leaf", p.min_samples_leaf},
          {"seed", p.seed}};
}

inline BoostParams params_from_json(const nlohmann::json& j) {
  BoostParams p;
  p.max_trees = j.at("max_trees").get<int>();
  p.leaves_per_tree = j.at("leaves_per_tree").get<int>();
  p.shrinkage = j.at("shrinkage").get<double>();
  p.early_stop_rounds = j.at("early_stop_rounds").get<int>();
  p.ndcg_cutoff = j.at("ndcg_cutoff").get<int>();
  p.sigma = j.at("sigma").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

inline nlohmann::json tree_to_json(const RegressionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    if (n.is_leaf())
      nodes.push_back({{"v", n.value}});
    else
      nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
  }
  return {{"nodes", nodes}};
}

inline RegressionTree tree_from_json(const nlohmann::json& j) {
  RegressionTree t;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    if (n.contains("v")) {
      node.value = n.at("v").get<double>();
    } else {
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("t").get<double>();
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
    }
    t.nodes.push_back(node);
  }
  t.leaf_count = static_cast<int>(
      std::count_if(t.nodes.begin(), t.nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  return t;
}

}  // namespace detail

inline void save_model(const RankModel& model, std::ostream& out) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : model.blend.members) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.ensemble.trees) trees.push_back(detail::tree_to_json(t));
    members.push_back({{"role", m.role},
                       {"weight", m.weight},
                       {"base_score", m.ensemble.base_score},
                       {"shrinkage", m.ensemble.shrinkage},
                       {"trees", std::move(trees)}});
  }
  const nlohmann::json doc = {{"format_version", kModelFormatVersion},
                              {"params", detail::params_to_json(model.params)},
                              {"normalizer", {{"mean", model.normalizer.mean},
                                              {"stddev", model.normalizer.stddev}}},
                              {"members", std::move(members)}};
  out << doc.dump(2) << '\n';
}

inline RankModel load_model(std::istream& in) {
  const nlohmann::json doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw Error("model file: malformed JSON");
  if (!doc.contains("format_version") || !doc.at("format_version").is_number_integer())
    throw Error("model file: missing format_version");
  if (const int version = doc.at("format_version").get<int>(); version != kModelFormatVersion)
    throw Error("model file: unknown format_version " + std::to_string(version));

  RankModel model;
  model.params = detail::params_from_json(doc.at("params"));
  const auto& norm = doc.at("normalizer");
  model.normalizer.mean = norm.at("mean").get<std::array<double, kNumFeatures>>();
  model.normalizer.stddev = norm.at("stddev").get<std::array<double, kNumFeatures>>();
  for (const auto& m : doc.at("members")) {
    BlendMember member;
    member.role = m.at("role").get<std::string>();
    member.weight = m.at("weight").get<double>();
    member.ensemble.base_score = m.at("base_score").get<double>();
    member.ensemble.shrinkage = m.at("shrinkage").get<double>();
    for (const auto& t : m.at("trees")) member.ensemble.trees.push_back(detail::tree_from_json(t));
    model.blend.members.push_back(std::move(member));
  }
  return model;
}

}  // namespace corank
