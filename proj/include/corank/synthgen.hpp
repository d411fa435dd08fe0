#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "corank/dataset.hpp"
#include "corank/error.hpp"
#include "corank/random.hpp"

namespace corank {

// Knobs for the synthetic tweet-interaction generator. Engagement combines a
// rating term, metadata terms (follower count and mentions) and Gaussian
// noise, so rating-only scorers are good but beatable by full-feature models.
struct SynthConfig {
  int user_count = 100;
  int item_count = 20;
  int min_interactions_per_user = 4;
  int max_interactions_per_user = 20;
  double rating_effect = 1.0;    // strength of the rating -> engagement link
  double metadata_effect = 0.5;  // strength of follower/mention effects
  double noise = 1.0;
  double retweet_fraction = 0.0;
  std::uint64_t seed = 0;
};

inline Dataset generate_dataset(const SynthConfig& c) {
  if (c.user_count < 1 || c.item_count < 1)
    throw Error("synth: user_count and item_count must be at least 1");
  if (c.min_interactions_per_user < 1 ||
      c.max_interactions_per_user < c.min_interactions_per_user)
    throw Error("synth: interactions-per-user range is invalid");
  if (c.rating_effect < 0.0 || c.metadata_effect < 0.0 || c.noise < 0.0)
    throw Error("synth: effect strengths must be non-negative");
  if (c.retweet_fraction < 0.0 || c.retweet_fraction > 1.0)
    throw Error("synth: retweet_fraction must lie in [0, 1]");

  constexpr double kMentionBoost = 3.0;  // mentions weigh like three follower log-units
  constexpr std::int64_t kStartTimestamp = 1390000000;

  CounterRng rng(splitmix64(c.seed));

  struct UserProfile {
    std::int64_t followers = 0;
    std::int64_t friends = 0;
    std::int64_t statuses = 0;
    double rating_bias = 0.0;
  };
  std::vector<UserProfile> users(static_cast<std::size_t>(c.user_count));
  std::vector<std::size_t> slots;
  for (std::size_t u = 0; u < users.size(); ++u) {
    auto& profile = users[u];
    profile.followers = static_cast<std::int64_t>(std::exp(rng.next_gauss() * 1.3 + 4.5));
    profile.friends = static_cast<std::int64_t>(std::exp(rng.next_gauss() * 1.1 + 4.0));
    profile.statuses = static_cast<std::int64_t>(std::exp(rng.next_gauss() * 1.4 + 5.5));
    profile.rating_bias = rng.next_gauss() * 0.8;
    const auto count =
        rng.next_int(c.min_interactions_per_user, c.max_interactions_per_user);
    slots.insert(slots.end(), static_cast<std::size_t>(count), u);
  }

  std::vector<double> item_bias(static_cast<std::size_t>(c.item_count));
  for (auto& b : item_bias) b = rng.next_gauss() * 1.1;

  // Fisher-Yates so the users interleave over time.
  for (std::size_t i = slots.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(slots[i - 1], slots[j]);
  }

  char id_buf[24];
  Dataset out;
  out.name = "synthetic";
  out.interactions.reserve(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto u = slots[k];
    const auto& profile = users[u];

    Interaction t;
    std::snprintf(id_buf, sizeof(id_buf), "u%05zu", u);
    t.user_id = id_buf;
    std::snprintf(id_buf, sizeof(id_buf), "t%07zu", k);
    t.tweet_id = id_buf;
    // Strictly increasing: jitter stays below the 60 s stride.
    t.timestamp = kStartTimestamp + static_cast<std::int64_t>(k) * 60 + rng.next_int(0, 59);
    t.user_followers = profile.followers;
    t.user_friends = profile.friends;
    t.user_statuses = profile.statuses;
    t.has_mention = rng.next_unit() < 0.3;

    std::size_t item = 0;
    const bool is_retweet = k > 0 && rng.next_unit() < c.retweet_fraction;
    if (is_retweet) {
      const auto original =
          static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(k) - 1));
      t.retweet_of = out.interactions[original].tweet_id;
      item = static_cast<std::size_t>(
          std::stoul(out.interactions[original].item_id.substr(1)));
    } else {
      item = static_cast<std::size_t>(rng.next_int(0, c.item_count - 1));
    }
    std::snprintf(id_buf, sizeof(id_buf), "i%04zu", item);
    t.item_id = id_buf;

    const double rating_raw =
        6.5 + profile.rating_bias + item_bias[item] + rng.next_gauss() * 0.9;
    t.rating = static_cast<int>(std::clamp(std::lround(rating_raw), 1L, 10L));

    const double engagement_raw =
        c.rating_effect * (t.rating - 5.0) +
        c.metadata_effect * (std::log1p(static_cast<double>(profile.followers)) +
                             kMentionBoost * (t.has_mention ? 1.0 : 0.0)) +
        c.noise * rng.next_gauss();
    const auto engagement = std::llround(std::max(0.0, engagement_raw));
    t.retweet_count = static_cast<std::int64_t>(static_cast<double>(engagement) * rng.next_unit());
    t.favorite_count = engagement - t.retweet_count;

    out.interactions.push_back(std::move(t));
  }
  return out;
}

}  // namespace corank
