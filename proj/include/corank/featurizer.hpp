#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corank/dataset.hpp"
#include "corank/error.hpp"

namespace corank {

inline constexpr int kNumFeatures = 16;

using FeatureVector = std::array<double, kNumFeatures>;

struct UserAggregate {
  std::vector<std::pair<std::int64_t, int>> rating_history;  // (timestamp, rating), time-ordered
  double mean_rating = 0.0;
  double mean_engagement = 0.0;
  double friends_followers_ratio = 0.0;  // friends / max(followers, 1), latest training record
  double statuses = 0.0;                 // latest training record
};

struct ItemAggregate {
  double mean_engagement = 0.0;
  double mean_rating = 0.0;
  double mean_friends_followers_ratio = 0.0;  // over the item's distinct training raters
  double mean_statuses = 0.0;
  std::int64_t retweet_count = 0;  // training retweets resolved to this item
};

// Training-split statistics behind the aggregate features. Write-once, then
// shared read-only by feature extraction.
struct AggregateStore {
  std::unordered_map<std::string, UserAggregate> users;
  std::unordered_map<std::string, ItemAggregate> items;
  std::unordered_set<std::string> retweeted_originals;  // targets of retweet_of in training
};

inline AggregateStore build_aggregates(const Dataset& train) {
  if (train.empty()) throw Error("cannot build aggregates from an empty dataset");

  struct UserAccum {
    std::vector<std::pair<std::int64_t, int>> history;
    double rating_sum = 0.0;
    double engagement_sum = 0.0;
    std::size_t count = 0;
    const Interaction* latest = nullptr;
  };
  struct ItemAccum {
    double rating_sum = 0.0;
    double engagement_sum = 0.0;
    std::size_t count = 0;
    std::unordered_set<std::string> raters;
  };

  std::unordered_map<std::string, UserAccum> users;
  std::unordered_map<std::string, ItemAccum> items;
  std::unordered_map<std::string, const Interaction*> by_tweet_id;

  for (const auto& t : train.interactions) {
    auto& u = users[t.user_id];
    u.history.emplace_back(t.timestamp, t.rating);
    u.rating_sum += t.rating;
    u.engagement_sum += static_cast<double>(t.engagement());
    ++u.count;
    if (u.latest == nullptr || chronological_less(*u.latest, t)) u.latest = &t;

    auto& i = items[t.item_id];
    i.rating_sum += t.rating;
    i.engagement_sum += static_cast<double>(t.engagement());
    ++i.count;
    i.raters.insert(t.user_id);

    by_tweet_id.emplace(t.tweet_id, &t);
  }

  AggregateStore agg;
  agg.users.reserve(users.size());
  for (auto& [id, acc] : users) {
    UserAggregate u;
    std::stable_sort(acc.history.begin(), acc.history.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    u.rating_history = std::move(acc.history);
    u.mean_rating = acc.rating_sum / static_cast<double>(acc.count);
    u.mean_engagement = acc.engagement_sum / static_cast<double>(acc.count);
    const auto* latest = acc.latest;
    u.friends_followers_ratio = static_cast<double>(latest->user_friends) /
                                static_cast<double>(std::max<std::int64_t>(latest->user_followers, 1));
    u.statuses = static_cast<double>(latest->user_statuses);
    agg.users.emplace(id, std::move(u));
  }

  agg.items.reserve(items.size());
  for (const auto& [id, acc] : items) {
    ItemAggregate i;
    i.mean_rating = acc.rating_sum / static_cast<double>(acc.count);
    i.mean_engagement = acc.engagement_sum / static_cast<double>(acc.count);
    double ratio_sum = 0.0;
    double statuses_sum = 0.0;
    for (const auto& rater : acc.raters) {
      const auto& u = agg.users.at(rater);
      ratio_sum += u.friends_followers_ratio;
      statuses_sum += u.statuses;
    }
    const auto k = static_cast<double>(acc.raters.size());
    i.mean_friends_followers_ratio = ratio_sum / k;
    i.mean_statuses = statuses_sum / k;
    agg.items.emplace(id, std::move(i));
  }

  for (const auto& t : train.interactions) {
    if (!t.retweet_of) continue;
    agg.retweeted_originals.insert(*t.retweet_of);
    // The retweet concerns the original tweet's item; fall back to the
    // retweet's own item when the original is not in the corpus.
    auto it = by_tweet_id.find(*t.retweet_of);
    const std::string& item = it != by_tweet_id.end() ? it->second->item_id : t.item_id;
    auto item_it = agg.items.find(item);
    if (item_it != agg.items.end()) ++item_it->second.retweet_count;
  }

  return agg;
}

// Median of the user's ratings strictly before `timestamp`; lower-middle
// element for even counts. Empty history yields nullopt.
inline std::optional<double> median_of_earlier_ratings(const UserAggregate& u,
                                                       std::int64_t timestamp) {
  std::vector<int> earlier;
  for (const auto& [ts, rating] : u.rating_history) {
    if (ts >= timestamp) break;
    earlier.push_back(rating);
  }
  if (earlier.empty()) return std::nullopt;
  auto mid = earlier.begin() + static_cast<std::ptrdiff_t>((earlier.size() - 1) / 2);
  std::nth_element(earlier.begin(), mid, earlier.end());
  return static_cast<double>(*mid);
}

// The 16-entry feature vector for one triple. Aggregate-backed entries are 0
// for users/items unseen in training (cold start).
inline FeatureVector extract_features(const Interaction& t, const AggregateStore& agg) {
  FeatureVector v{};

  const UserAggregate* user = nullptr;
  if (auto it = agg.users.find(t.user_id); it != agg.users.end()) user = &it->second;
  const ItemAggregate* item = nullptr;
  if (auto it = agg.items.find(t.item_id); it != agg.items.end()) item = &it->second;

  v[0] = static_cast<double>(t.rating);  // F1: rating
  if (user != nullptr) {
    if (auto med = median_of_earlier_ratings(*user, t.timestamp))
      v[1] = static_cast<double>(t.rating) - *med;             // F2: rating deviation
    v[2] = std::sqrt(user->mean_engagement);                   // F3: user engagement, smoothed
    v[3] = user->mean_engagement > 0.0 ? 1.0 : 0.0;            // F4
    v[4] = user->mean_rating;                                  // F5
    v[5] = std::sqrt(user->friends_followers_ratio);           // F6
    v[6] = std::sqrt(user->statuses);                          // F7
  }
  if (item != nullptr) {
    v[7] = std::sqrt(item->mean_engagement);                   // F8: item engagement, smoothed
    v[8] = item->mean_engagement > 0.0 ? 1.0 : 0.0;            // F9
    v[9] = item->mean_rating;                                  // F10
    v[10] = std::sqrt(item->mean_friends_followers_ratio);     // F11
    v[11] = std::sqrt(item->mean_statuses);                    // F12
    v[15] = static_cast<double>(item->retweet_count);          // F16: retweets per item
  }
  v[12] = t.has_mention ? 1.0 : 0.0;                           // F13
  v[13] = t.retweet_of.has_value() ? 1.0 : 0.0;                // F14
  v[14] = agg.retweeted_originals.count(t.tweet_id) ? 1.0 : 0.0;  // F15: was retweeted
  return v;
}

// Per-feature z-score parameters (population standard deviation), fitted on
// training vectors only.
struct Normalizer {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> stddev{};
};

inline Normalizer fit_normalizer(const std::vector<FeatureVector>& vectors) {
  if (vectors.empty()) throw Error("cannot fit a normalizer on no vectors");
  Normalizer n;
  const auto count = static_cast<double>(vectors.size());
  for (const auto& v : vectors)
    for (int f = 0; f < kNumFeatures; ++f) n.mean[f] += v[f];
  for (int f = 0; f < kNumFeatures; ++f) n.mean[f] /= count;
  std::array<double, kNumFeatures> sq{};
  for (const auto& v : vectors)
    for (int f = 0; f < kNumFeatures; ++f) {
      const double d = v[f] - n.mean[f];
      sq[f] += d * d;
    }
  for (int f = 0; f < kNumFeatures; ++f) n.stddev[f] = std::sqrt(sq[f] / count);
  return n;
}

// Zero-variance features map to 0 regardless of value.
inline FeatureVector apply_normalizer(const Normalizer& n, const FeatureVector& v) {
  FeatureVector out{};
  for (int f = 0; f < kNumFeatures; ++f)
    out[f] = n.stddev[f] > 0.0 ? (v[f] - n.mean[f]) / n.stddev[f] : 0.0;
  return out;
}

// Drops every interaction of users with fewer than min_interactions or more
// than max_interactions records in d.
inline Dataset prune_outlier_users(const Dataset& d, std::size_t min_interactions = 4,
                                   std::size_t max_interactions = 200) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : d.interactions) ++counts[t.user_id];

  Dataset out;
  out.name = d.name;
  for (const auto& t : d.interactions) {
    const auto c = counts[t.user_id];
    if (c >= min_interactions && c <= max_interactions) out.interactions.push_back(t);
  }
  if (!d.empty() && out.empty())
    throw Error("outlier pruning removed every interaction; bounds are too tight");
  return out;
}

// One user's candidate list: the unit the ranker orders.
struct QueryGroup {
  struct Entry {
    std::string tweet_id;
    std::string item_id;
    int rating = 0;  // raw rating from the source interaction
    FeatureVector features{};
    std::int64_t label = 0;  // engagement
  };

  std::string user_id;
  std::vector<Entry> entries;
};

// Groups d per user (first-appearance order) with labels = engagement.
// Vectors are normalized iff a normalizer is supplied.
inline std::vector<QueryGroup> featurize_dataset(const Dataset& d, const AggregateStore& agg,
                                                 const Normalizer* normalizer = nullptr) {
  std::vector<QueryGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& t : d.interactions) {
    auto [it, inserted] = index.emplace(t.user_id, groups.size());
    if (inserted) groups.push_back(QueryGroup{t.user_id, {}});
    QueryGroup::Entry e;
    e.tweet_id = t.tweet_id;
    e.item_id = t.item_id;
    e.rating = t.rating;
    e.features = extract_features(t, agg);
    if (normalizer != nullptr) e.features = apply_normalizer(*normalizer, e.features);
    e.label = t.engagement();
    groups[it->second].entries.push_back(std::move(e));
  }
  return groups;
}

// `<label> qid:<user-ordinal> 1:<F1> ... 16:<F16> # <tweet_id>`, features in
// ascending index order with 6 decimal places, one line per triple.
inline void export_ltr(const std::vector<QueryGroup>& groups, std::ostream& out) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& e : groups[g].entries) {
      out << e.label << " qid:" << g + 1;
      char buf[32];
      for (int f = 0; f < kNumFeatures; ++f) {
        std::snprintf(buf, sizeof(buf), " %d:%.6f", f + 1, e.features[f]);
        out << buf;
      }
      out << " # " << e.tweet_id << '\n';
    }
  }
}

}  // namespace corank
