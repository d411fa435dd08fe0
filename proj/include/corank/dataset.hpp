#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corank/error.hpp"

namespace corank {

// One user-item-tweet triple with the tweet metadata the features need.
struct Interaction {
  std::string user_id;
  std::string item_id;
  std::string tweet_id;
  int rating = 0;  // 0..10
  std::int64_t timestamp = 0;
  std::int64_t retweet_count = 0;
  std::int64_t favorite_count = 0;
  std::int64_t user_followers = 0;
  std::int64_t user_friends = 0;
  std::int64_t user_statuses = 0;
  bool has_mention = false;
  std::optional<std::string> retweet_of;  // original tweet_id, present iff this is a retweet

  std::int64_t engagement() const { return retweet_count + favorite_count; }

  bool operator==(const Interaction&) const = default;
};

struct Dataset {
  std::vector<Interaction> interactions;
  std::string name;

  bool empty() const { return interactions.empty(); }
  std::size_t size() const { return interactions.size(); }

  bool operator==(const Dataset&) const = default;
};

struct StatsReport {
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::size_t tweet_count = 0;
  std::size_t min_per_user = 0;
  std::size_t max_per_user = 0;
  double mean_per_user = 0.0;
  std::size_t median_per_user = 0;  // lower-middle element for even counts
  std::int64_t first_timestamp = 0;
  std::int64_t last_timestamp = 0;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(line, key, "missing required field");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require_field(obj, key, line);
  if (!v.is_string()) throw SchemaError(line, key, "expected a string");
  return v.get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require_field(obj, key, line);
  if (!v.is_number_integer()) throw SchemaError(line, key, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::int64_t require_count(const nlohmann::json& obj, const char* key, std::size_t line) {
  const std::int64_t v = require_int(obj, key, line);
  if (v < 0) throw SchemaError(line, key, "must be non-negative");
  return v;
}

inline bool require_bool(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require_field(obj, key, line);
  if (!v.is_boolean()) throw SchemaError(line, key, "expected a boolean");
  return v.get<bool>();
}

}  // namespace detail

// Reads line-delimited JSON, one interaction per line, preserving input order.
inline Dataset parse_tweets(std::istream& in, std::string name = "") {
  Dataset out;
  out.name = std::move(name);
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) throw ParseError(line_no, "malformed JSON record");

    Interaction t;
    t.user_id = detail::require_string(obj, "user_id", line_no);
    t.item_id = detail::require_string(obj, "item_id", line_no);
    t.tweet_id = detail::require_string(obj, "tweet_id", line_no);
    const std::int64_t rating = detail::require_int(obj, "rating", line_no);
    if (rating < 0 || rating > 10) throw SchemaError(line_no, "rating", "must be in [0, 10]");
    t.rating = static_cast<int>(rating);
    t.timestamp = detail::require_int(obj, "timestamp", line_no);
    t.retweet_count = detail::require_count(obj, "retweet_count", line_no);
    t.favorite_count = detail::require_count(obj, "favorite_count", line_no);
    t.user_followers = detail::require_count(obj, "user_followers", line_no);
    t.user_friends = detail::require_count(obj, "user_friends", line_no);
    t.user_statuses = detail::require_count(obj, "user_statuses", line_no);
    t.has_mention = detail::require_bool(obj, "has_mention", line_no);
    if (auto it = obj.find("retweeted_status_id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw SchemaError(line_no, "retweeted_status_id", "expected a string");
      t.retweet_of = it->get<std::string>();
      if (*t.retweet_of == t.tweet_id)
        throw SchemaError(line_no, "retweeted_status_id", "a tweet cannot retweet itself");
    }
    if (!seen_ids.insert(t.tweet_id).second) throw DuplicateError(t.tweet_id, line_no);
    out.interactions.push_back(std::move(t));
  }
  return out;
}

inline void serialize_tweets(const Dataset& d, std::ostream& out) {
  for (const auto& t : d.interactions) {
    nlohmann::json obj{{"user_id", t.user_id},
                       {"item_id", t.item_id},
                       {"tweet_id", t.tweet_id},
                       {"rating", t.rating},
                       {"timestamp", t.timestamp},
                       {"retweet_count", t.retweet_count},
                       {"favorite_count", t.favorite_count},
                       {"user_followers", t.user_followers},
                       {"user_friends", t.user_friends},
                       {"user_statuses", t.user_statuses},
                       {"has_mention", t.has_mention}};
    if (t.retweet_of) obj["retweeted_status_id"] = *t.retweet_of;
    out << obj.dump() << '\n';
  }
}

// Timestamp ties break by tweet_id so splits are deterministic.
inline bool chronological_less(const Interaction& a, const Interaction& b) {
  return std::tie(a.timestamp, a.tweet_id) < std::tie(b.timestamp, b.tweet_id);
}

struct SplitFractions {
  double train = 0.8;
  double test = 0.1;
  double eval = 0.1;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  Dataset eval;
};

// Sorts by (timestamp, tweet_id) and cuts at floor boundaries: the earliest
// fraction becomes train, then test, the remainder eval.
inline SplitResult chronological_split(const Dataset& d, const SplitFractions& f = {}) {
  if (d.empty()) throw Error("cannot split an empty dataset");
  if (f.train <= 0.0 || f.test <= 0.0 || f.eval <= 0.0 ||
      std::abs(f.train + f.test + f.eval - 1.0) > 1e-9)
    throw Error("split fractions must be positive and sum to 1");

  std::vector<Interaction> sorted = d.interactions;
  std::sort(sorted.begin(), sorted.end(), chronological_less);

  const auto n = sorted.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.train));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.test));

  SplitResult r;
  r.train.name = d.name.empty() ? "train" : d.name + "/train";
  r.test.name = d.name.empty() ? "test" : d.name + "/test";
  r.eval.name = d.name.empty() ? "eval" : d.name + "/eval";
  r.train.interactions.assign(sorted.begin(), sorted.begin() + n_train);
  r.test.interactions.assign(sorted.begin() + n_train, sorted.begin() + n_train + n_test);
  r.eval.interactions.assign(sorted.begin() + n_train + n_test, sorted.end());
  return r;
}

// Two-way chronological cut; used for the internal train/validation partition.
inline std::pair<Dataset, Dataset> chronological_head_split(const Dataset& d,
                                                            double head_fraction) {
  if (head_fraction <= 0.0 || head_fraction >= 1.0)
    throw Error("head fraction must lie strictly between 0 and 1");
  std::vector<Interaction> sorted = d.interactions;
  std::sort(sorted.begin(), sorted.end(), chronological_less);
  const auto n_head =
      static_cast<std::size_t>(std::floor(static_cast<double>(sorted.size()) * head_fraction));
  std::pair<Dataset, Dataset> r;
  r.first.name = d.name;
  r.second.name = d.name;
  r.first.interactions.assign(sorted.begin(), sorted.begin() + n_head);
  r.second.interactions.assign(sorted.begin() + n_head, sorted.end());
  return r;
}

inline StatsReport interaction_stats(const Dataset& d) {
  if (d.empty()) throw Error("cannot compute statistics of an empty dataset");

  std::unordered_map<std::string, std::size_t> per_user;
  std::unordered_set<std::string> items;
  std::int64_t ts_min = d.interactions.front().timestamp;
  std::int64_t ts_max = ts_min;
  for (const auto& t : d.interactions) {
    ++per_user[t.user_id];
    items.insert(t.item_id);
    ts_min = std::min(ts_min, t.timestamp);
    ts_max = std::max(ts_max, t.timestamp);
  }

  std::vector<std::size_t> counts;
  counts.reserve(per_user.size());
  for (const auto& [_, c] : per_user) counts.push_back(c);
  std::sort(counts.begin(), counts.end());

  StatsReport s;
  s.user_count = per_user.size();
  s.item_count = items.size();
  s.tweet_count = d.size();
  s.min_per_user = counts.front();
  s.max_per_user = counts.back();
  s.mean_per_user = static_cast<double>(d.size()) / static_cast<double>(per_user.size());
  s.median_per_user = counts[(counts.size() - 1) / 2];
  s.first_timestamp = ts_min;
  s.last_timestamp = ts_max;
  return s;
}

struct HistogramRow {
  int rating = 0;
  std::int64_t engagement = 0;
  std::int64_t frequency = 0;

  bool operator==(const HistogramRow&) const = default;
};

// Exact frequency of each observed (rating, engagement) pair, in key order.
inline std::vector<HistogramRow> rating_engagement_histogram(const Dataset& d) {
  std::map<std::pair<int, std::int64_t>, std::int64_t> freq;
  for (const auto& t : d.interactions) ++freq[{t.rating, t.engagement()}];
  std::vector<HistogramRow> rows;
  rows.reserve(freq.size());
  for (const auto& [key, count] : freq) rows.push_back({key.first, key.second, count});
  return rows;
}

inline void write_histogram_csv(const std::vector<HistogramRow>& rows, std::ostream& out) {
  out << "rating,engagement,frequency\n";
  for (const auto& r : rows) out << r.rating << ',' << r.engagement << ',' << r.frequency << '\n';
}

inline void write_stats_csv(const StatsReport& s, std::ostream& out) {
  out << "metric,value\n";
  out << "users," << s.user_count << '\n';
  out << "items," << s.item_count << '\n';
  out << "tweets," << s.tweet_count << '\n';
  out << "interactions_per_user_min," << s.min_per_user << '\n';
  out << "interactions_per_user_max," << s.max_per_user << '\n';
  out << "interactions_per_user_mean," << s.mean_per_user << '\n';
  out << "interactions_per_user_median," << s.median_per_user << '\n';
  out << "first_timestamp," << s.first_timestamp << '\n';
  out << "last_timestamp," << s.last_timestamp << '\n';
}

}  // namespace corank
