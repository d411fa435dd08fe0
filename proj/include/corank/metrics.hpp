#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "corank/error.hpp"
#include "corank/featurizer.hpp"

namespace corank {

inline double dcg_gain(std::int64_t label) { return std::exp2(static_cast<double>(label)) - 1.0; }

// Discounted cumulative gain of labels already in ranked order:
// sum over positions 1..min(k, n) of (2^label - 1) / log2(position + 1).
inline double dcg_at_k(const std::vector<std::int64_t>& labels_in_ranked_order, int k) {
  const auto n = std::min<std::size_t>(labels_in_ranked_order.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos)
    dcg += dcg_gain(labels_in_ranked_order[pos]) / std::log2(static_cast<double>(pos) + 2.0);
  return dcg;
}

// Indices sorted by score descending; equal scores keep original index order.
inline std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// nDCG of the score-induced ranking. All-zero labels make any ordering ideal,
// so a zero ideal DCG yields 1.0.
inline double ndcg_at_k(const std::vector<double>& scores,
                        const std::vector<std::int64_t>& labels, int k) {
  if (scores.size() != labels.size())
    throw Error("ndcg_at_k: scores and labels differ in length");
  if (scores.empty()) throw Error("ndcg_at_k: empty input");

  const auto order = rank_by_score(scores);
  std::vector<std::int64_t> ranked(labels.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranked[pos] = labels[order[pos]];

  std::vector<std::int64_t> ideal = labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  const double idcg = dcg_at_k(ideal, k);
  if (idcg == 0.0) return 1.0;
  return dcg_at_k(ranked, k) / idcg;
}

struct EvalReport {
  struct UserScore {
    std::string user_id;
    double ndcg = 0.0;
  };

  std::vector<UserScore> per_user;
  double mean_ndcg = 0.0;
  int k = 0;
};

// Per-user nDCG@k and its unweighted mean over users.
inline EvalReport mean_ndcg(const std::vector<QueryGroup>& groups,
                            const std::vector<std::vector<double>>& scores, int k) {
  if (groups.empty()) throw Error("mean_ndcg: no query groups");
  if (scores.size() != groups.size())
    throw Error("mean_ndcg: one score list per group required");

  EvalReport report;
  report.k = k;
  report.per_user.reserve(groups.size());
  double sum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<std::int64_t> labels;
    labels.reserve(groups[g].entries.size());
    for (const auto& e : groups[g].entries) labels.push_back(e.label);
    const double value = ndcg_at_k(scores[g], labels, k);
    report.per_user.push_back({groups[g].user_id, value});
    sum += value;
  }
  report.mean_ndcg = sum / static_cast<double>(groups.size());
  return report;
}

inline void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "user_id,ndcg\n";
  char buf[32];
  for (const auto& u : report.per_user) {
    std::snprintf(buf, sizeof(buf), "%.6f", u.ndcg);
    out << u.user_id << ',' << buf << '\n';
  }
}

inline std::string eval_summary_line(const EvalReport& report) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mean_ndcg@%d=%.6f", report.k, report.mean_ndcg);
  return buf;
}

}  // namespace corank
