#pragma once

#include <cstdint>
#include <vector>

#include "corank/featurizer.hpp"
#include "corank/random.hpp"

namespace corank {

// Scores each tweet with the rating the user gave in it.
inline std::vector<double> rec_rating(const QueryGroup& g) {
  std::vector<double> scores;
  scores.reserve(g.entries.size());
  for (const auto& e : g.entries) scores.push_back(static_cast<double>(e.rating));
  return scores;
}

// Scores each tweet with the mean engagement its item received in training;
// items unseen in training score 0.
inline std::vector<double> rec_hei(const QueryGroup& g, const AggregateStore& agg) {
  std::vector<double> scores;
  scores.reserve(g.entries.size());
  for (const auto& e : g.entries) {
    auto it = agg.items.find(e.item_id);
    scores.push_back(it != agg.items.end() ? it->second.mean_engagement : 0.0);
  }
  return scores;
}

// Uniform scores in [0, 1) from a counter generator keyed by (seed, user_id),
// so per-user streams do not depend on evaluation order.
inline std::vector<double> rec_random(const QueryGroup& g, std::uint64_t seed) {
  CounterRng rng(splitmix64(seed ^ fnv1a64(g.user_id)));
  std::vector<double> scores;
  scores.reserve(g.entries.size());
  for (std::size_t i = 0; i < g.entries.size(); ++i) scores.push_back(rng.next_unit());
  return scores;
}

}  // namespace corank
