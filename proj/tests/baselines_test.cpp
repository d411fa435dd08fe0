#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "corank/baselines.hpp"
#include "corank/dataset.hpp"
#include "corank/featurizer.hpp"
#include "corank/metrics.hpp"
#include "corank/synthgen.hpp"

using namespace corank;
using Catch::Matchers::WithinAbs;

namespace {

Interaction make(const std::string& user, const std::string& item, const std::string& tweet,
                 int rating, std::int64_t ts, std::int64_t engagement = 0) {
  Interaction t;
  t.user_id = user;
  t.item_id = item;
  t.tweet_id = tweet;
  t.rating = rating;
  t.timestamp = ts;
  t.favorite_count = engagement;
  return t;
}

}  // namespace

TEST_CASE("recRating scores each tweet with its rating") {
  QueryGroup g{"u", {{"t1", "i1", 10, {}, 0}, {"t2", "i2", 5, {}, 0}}};
  CHECK(rec_rating(g) == std::vector<double>{10.0, 5.0});

  SECTION("equal ratings give equal scores") {
    QueryGroup tied{"u", {{"t1", "i1", 7, {}, 0}, {"t2", "i2", 7, {}, 0}}};
    const auto scores = rec_rating(tied);
    CHECK(scores[0] == scores[1]);
  }
}

TEST_CASE("recHEI scores by training item engagement") {
  Dataset train;
  train.interactions = {make("u1", "i1", "t1", 7, 1, 2), make("u2", "i1", "t2", 8, 2, 4)};
  const auto agg = build_aggregates(train);

  QueryGroup g{"u9", {{"t8", "i1", 6, {}, 0}, {"t9", "iX", 6, {}, 0}}};
  const auto scores = rec_hei(g, agg);
  CHECK(scores[0] == 3.0);  // mean of {2, 4}
  CHECK(scores[1] == 0.0);  // unseen item

  SECTION("score equals the un-smoothed square of F8 for seen items") {
    auto seen = make("u9", "i1", "t8", 6, 9);
    const auto v = extract_features(seen, agg);
    CHECK_THAT(scores[0], WithinAbs(v[7] * v[7], 1e-12));
  }
}

TEST_CASE("recRandom is deterministic and keyed by user") {
  QueryGroup a{"alice", {{"t1", "i1", 5, {}, 0}, {"t2", "i2", 5, {}, 0}}};
  QueryGroup b{"bob", {{"t3", "i1", 5, {}, 0}, {"t4", "i2", 5, {}, 0}}};

  CHECK(rec_random(a, 7) == rec_random(a, 7));
  CHECK(rec_random(a, 7) != rec_random(a, 8));
  CHECK(rec_random(a, 7) != rec_random(b, 7));  // independent per-user streams

  for (const double s : rec_random(a, 7)) {
    CHECK(s >= 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("recRandom matches the exact permutation average over many seeds") {
  // With random scores every ordering of a group is equally likely, so the
  // expected nDCG equals the average over all permutations, computed exactly.
  const std::vector<std::int64_t> labels{3, 1, 0};
  QueryGroup g{"u",
               {{"ta", "i1", 5, {}, labels[0]},
                {"tb", "i2", 5, {}, labels[1]},
                {"tc", "i3", 5, {}, labels[2]}}};

  std::vector<std::size_t> perm{0, 1, 2};
  double exact = 0.0;
  int permutations = 0;
  std::vector<std::int64_t> ideal = labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at_k(ideal, 10);
  do {
    std::vector<std::int64_t> arranged;
    for (const auto i : perm) arranged.push_back(labels[i]);
    exact += dcg_at_k(arranged, 10) / idcg;
    ++permutations;
  } while (std::next_permutation(perm.begin(), perm.end()));
  exact /= permutations;

  double empirical = 0.0;
  const int seeds = 4000;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto scores = rec_random(g, static_cast<std::uint64_t>(seed));
    empirical += ndcg_at_k(scores, labels, 10);
  }
  empirical /= seeds;
  CHECK_THAT(empirical, WithinAbs(exact, 0.01));
}

TEST_CASE("on rating-driven data recRating beats recRandom") {
  const auto data = generate_dataset({.user_count = 120,
                                      .item_count = 30,
                                      .min_interactions_per_user = 5,
                                      .max_interactions_per_user = 12,
                                      .rating_effect = 1.5,
                                      .metadata_effect = 0.0,
                                      .noise = 0.3,
                                      .seed = 13});
  const auto agg = build_aggregates(data);
  const auto groups = featurize_dataset(data, agg);

  std::vector<std::vector<double>> by_rating;
  std::vector<std::vector<double>> by_chance;
  for (const auto& g : groups) {
    by_rating.push_back(rec_rating(g));
    by_chance.push_back(rec_random(g, 99));
  }
  const double rating_mean = mean_ndcg(groups, by_rating, 10).mean_ndcg;
  const double chance_mean = mean_ndcg(groups, by_chance, 10).mean_ndcg;
  CHECK(rating_mean > chance_mean + 0.02);
}
