#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "corank/dataset.hpp"
#include "corank/featurizer.hpp"
#include "corank/metrics.hpp"
#include "corank/ranker.hpp"

namespace corank {

struct PipelineResult {
  RankModel model;
  AggregateStore aggregates;  // training-split aggregates behind the features
  TrainResult lambdamart;
  TrainResult mart;
};

// The end-to-end training recipe: aggregates over the full training input,
// outlier pruning, normalizer fitted on the pruned matrix, a chronological
// 80/20 partition for validation, both boosters, then blend-weight search.
inline PipelineResult run_training_pipeline(const Dataset& raw, const BoostParams& params,
                                            std::size_t prune_min = 4,
                                            std::size_t prune_max = 200) {
  PipelineResult result;
  result.aggregates = build_aggregates(raw);
  const auto pruned = prune_outlier_users(raw, prune_min, prune_max);

  std::vector<FeatureVector> matrix;
  matrix.reserve(pruned.size());
  for (const auto& t : pruned.interactions)
    matrix.push_back(extract_features(t, result.aggregates));
  result.model.normalizer = fit_normalizer(matrix);
  result.model.params = params;

  auto [inner_train, inner_valid] = chronological_head_split(pruned, 0.8);
  if (inner_train.empty()) {  // too small to hold out a validation slice
    inner_train = pruned;
    inner_valid.interactions.clear();
  }
  const auto train_groups =
      featurize_dataset(inner_train, result.aggregates, &result.model.normalizer);
  const auto valid_groups =
      featurize_dataset(inner_valid, result.aggregates, &result.model.normalizer);

  result.lambdamart = train_lambdamart(train_groups, valid_groups, params);
  result.mart = train_mart(train_groups, valid_groups, params);

  std::vector<BlendMember> members;
  members.push_back({result.lambdamart.model, 1.0, "lambdamart"});
  members.push_back({result.mart.model, 0.0, "mart"});
  if (!valid_groups.empty())
    result.model.blend = fit_blend_weights(std::move(members), valid_groups, params.ndcg_cutoff);
  else
    result.model.blend.members = std::move(members);
  return result;
}

inline std::vector<std::vector<double>> score_groups(const LinearBlend& blend,
                                                     const std::vector<QueryGroup>& groups) {
  std::vector<std::vector<double>> scores;
  scores.reserve(groups.size());
  for (const auto& g : groups) {
    std::vector<double> s;
    s.reserve(g.entries.size());
    for (const auto& e : g.entries) s.push_back(blend.score(e.features));
    scores.push_back(std::move(s));
  }
  return scores;
}

inline EvalReport evaluate_blend(const RankModel& model, const AggregateStore& aggregates,
                                 const Dataset& data, int k) {
  const auto groups = featurize_dataset(data, aggregates, &model.normalizer);
  return mean_ndcg(groups, score_groups(model.blend, groups), k);
}

}  // namespace corank
