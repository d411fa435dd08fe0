#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "corank/dataset.hpp"
#include "corank/featurizer.hpp"
#include "corank/random.hpp"
#include "corank/synthgen.hpp"

using namespace corank;
using Catch::Matchers::WithinAbs;

namespace {

Interaction make(const std::string& user, const std::string& item, const std::string& tweet,
                 int rating, std::int64_t ts, std::int64_t engagement = 0,
                 std::int64_t followers = 10, std::int64_t friends = 5,
                 std::int64_t statuses = 100) {
  Interaction t;
  t.user_id = user;
  t.item_id = item;
  t.tweet_id = tweet;
  t.rating = rating;
  t.timestamp = ts;
  t.favorite_count = engagement;
  t.user_followers = followers;
  t.user_friends = friends;
  t.user_statuses = statuses;
  return t;
}

}  // namespace

TEST_CASE("aggregates: hand means") {
  Dataset train;
  train.interactions = {make("u1", "i1", "t1", 7, 1, 0), make("u1", "i1", "t2", 9, 2, 4)};
  const auto agg = build_aggregates(train);
  CHECK(agg.users.at("u1").mean_engagement == 2.0);
  CHECK(agg.items.at("i1").mean_rating == 8.0);
  CHECK(agg.items.at("i1").mean_engagement == 2.0);
}

TEST_CASE("aggregates: retweeted originals and per-item retweet counts") {
  Dataset train;
  train.interactions = {make("u1", "i1", "tB", 7, 1, 2)};
  auto retweet = make("u2", "i1", "tA", 6, 2);
  retweet.retweet_of = "tB";
  train.interactions.push_back(retweet);
  const auto agg = build_aggregates(train);
  CHECK(agg.retweeted_originals.count("tB") == 1);
  CHECK(agg.retweeted_originals.count("tA") == 0);
  CHECK(agg.items.at("i1").retweet_count == 1);
}

TEST_CASE("aggregates: empty training split is an error") {
  CHECK_THROWS_AS(build_aggregates(Dataset{}), Error);
}

TEST_CASE("features: golden values") {
  SECTION("F1 is the raw rating") {
    Dataset train;
    train.interactions = {make("u1", "i1", "t1", 8, 1)};
    const auto agg = build_aggregates(train);
    CHECK(extract_features(train.interactions[0], agg)[0] == 8.0);
  }

  SECTION("F2 uses the lower-middle median of strictly earlier ratings") {
    Dataset train;
    train.interactions = {make("u1", "i1", "t1", 7, 10), make("u1", "i2", "t2", 9, 20),
                          make("u1", "i3", "t3", 10, 30)};
    const auto agg = build_aggregates(train);
    // earlier ratings [7, 9]: lower-middle median 7, so F2 = 10 - 7 = 3
    CHECK(extract_features(train.interactions[2], agg)[1] == 3.0);
    // no strictly earlier history: F2 = 0
    CHECK(extract_features(train.interactions[0], agg)[1] == 0.0);
  }

  SECTION("F3/F4 from user engagement history") {
    Dataset train;
    train.interactions = {make("u1", "i1", "t1", 8, 1, 1), make("u1", "i2", "t2", 8, 2, 3),
                          make("u1", "i3", "t3", 8, 3, 4)};
    const auto agg = build_aggregates(train);
    const auto v = extract_features(train.interactions[0], agg);
    CHECK_THAT(v[2], WithinAbs(1.63299, 1e-5));  // sqrt(8/3)
    CHECK(v[3] == 1.0);
  }

  SECTION("F6 friend/follower ratio with clamped denominator") {
    Dataset train;
    train.interactions = {make("u1", "i1", "t1", 8, 1, 0, 200, 50),
                          make("u2", "i1", "t2", 8, 2, 0, 0, 5)};
    const auto agg = build_aggregates(train);
    CHECK(extract_features(train.interactions[0], agg)[5] == 0.5);  // sqrt(50/200)
    CHECK_THAT(extract_features(train.interactions[1], agg)[5],
               WithinAbs(2.23607, 1e-5));  // sqrt(5/max(0,1))
  }

  SECTION("flags F13-F15") {
    Dataset train;
    auto original = make("u1", "i1", "tO", 8, 1);
    original.has_mention = true;
    auto retweet = make("u2", "i1", "tR", 7, 2);
    retweet.retweet_of = "tO";
    train.interactions = {original, retweet};
    const auto agg = build_aggregates(train);
    const auto vo = extract_features(original, agg);
    CHECK(vo[12] == 1.0);  // mention
    CHECK(vo[13] == 0.0);  // not itself a retweet
    CHECK(vo[14] == 1.0);  // was retweeted
    const auto vr = extract_features(retweet, agg);
    CHECK(vr[12] == 0.0);
    CHECK(vr[13] == 1.0);
    CHECK(vr[14] == 0.0);
    CHECK(vr[15] == 1.0);  // one retweet resolved to i1
  }

  SECTION("cold start zeroes the aggregate-backed entries") {
    Dataset train;
    train.interactions = {make("u1", "i1", "t1", 8, 1, 5)};
    const auto agg = build_aggregates(train);
    auto unseen = make("uX", "iX", "tX", 6, 99);
    unseen.user_followers = 1000;  // metadata of unseen users is not trusted
    const auto v = extract_features(unseen, agg);
    CHECK(v[0] == 6.0);
    for (int f = 1; f < 12; ++f) CHECK(v[f] == 0.0);
    CHECK(v[15] == 0.0);
  }
}

TEST_CASE("features: F4/F9 are indicators of positive smoothed engagement") {
  const auto data = generate_dataset({.user_count = 30,
                                      .item_count = 10,
                                      .min_interactions_per_user = 2,
                                      .max_interactions_per_user = 8,
                                      .seed = 5});
  const auto agg = build_aggregates(data);
  for (const auto& t : data.interactions) {
    const auto v = extract_features(t, agg);
    CHECK(v[3] == (v[2] > 0.0 ? 1.0 : 0.0));
    CHECK(v[8] == (v[7] > 0.0 ? 1.0 : 0.0));
  }
}

TEST_CASE("normalizer: population statistics") {
  std::vector<FeatureVector> vectors(3);
  vectors[0][0] = 1.0;
  vectors[1][0] = 2.0;
  vectors[2][0] = 3.0;
  const auto n = fit_normalizer(vectors);
  CHECK(n.mean[0] == 2.0);
  CHECK_THAT(n.stddev[0], WithinAbs(0.81650, 1e-5));  // sqrt(2/3)

  SECTION("z-scores") {
    FeatureVector v{};
    v[0] = 3.0;
    CHECK_THAT(apply_normalizer(n, v)[0], WithinAbs(1.22474, 1e-5));
    v[0] = 2.0;
    CHECK(apply_normalizer(n, v)[0] == 0.0);  // value at the mean
    CHECK(apply_normalizer(n, v)[1] == 0.0);  // zero-variance feature
  }
}

TEST_CASE("normalizer: degenerate inputs") {
  std::vector<FeatureVector> constant(2);
  constant[0][3] = 5.0;
  constant[1][3] = 5.0;
  const auto n = fit_normalizer(constant);
  CHECK(n.mean[3] == 5.0);
  CHECK(n.stddev[3] == 0.0);

  const auto single = fit_normalizer({FeatureVector{}});
  for (int f = 0; f < kNumFeatures; ++f) CHECK(single.stddev[f] == 0.0);

  CHECK_THROWS_AS(fit_normalizer({}), Error);
}

TEST_CASE("normalized training matrix has zero mean and unit variance") {
  const auto data = generate_dataset({.user_count = 40,
                                      .item_count = 12,
                                      .min_interactions_per_user = 4,
                                      .max_interactions_per_user = 12,
                                      .retweet_fraction = 0.2,
                                      .seed = 11});
  const auto agg = build_aggregates(data);
  std::vector<FeatureVector> matrix;
  for (const auto& t : data.interactions) matrix.push_back(extract_features(t, agg));
  const auto norm = fit_normalizer(matrix);

  std::vector<FeatureVector> normalized;
  for (const auto& v : matrix) normalized.push_back(apply_normalizer(norm, v));
  for (int f = 0; f < kNumFeatures; ++f) {
    if (norm.stddev[f] == 0.0) continue;
    double mean = 0.0;
    for (const auto& v : normalized) mean += v[f];
    mean /= static_cast<double>(normalized.size());
    double var = 0.0;
    for (const auto& v : normalized) var += (v[f] - mean) * (v[f] - mean);
    var /= static_cast<double>(normalized.size());
    CHECK_THAT(mean, WithinAbs(0.0, 1e-9));
    CHECK_THAT(std::sqrt(var), WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("pruning drops users outside the interaction bounds") {
  Dataset d;
  auto add_user = [&](const std::string& user, int count) {
    for (int i = 0; i < count; ++i)
      d.interactions.push_back(
          make(user, "i1", user + "_t" + std::to_string(i), 8, i));
  };
  add_user("three", 3);
  add_user("four", 4);
  add_user("two_hundred", 200);
  add_user("over", 201);

  const auto pruned = prune_outlier_users(d);
  std::unordered_map<std::string, int> counts;
  for (const auto& t : pruned.interactions) ++counts[t.user_id];
  CHECK(counts.count("three") == 0);
  CHECK(counts["four"] == 4);
  CHECK(counts["two_hundred"] == 200);
  CHECK(counts.count("over") == 0);

  SECTION("over-pruning is an error") {
    Dataset tiny;
    tiny.interactions = {make("u1", "i1", "t1", 8, 1)};
    CHECK_THROWS_AS(prune_outlier_users(tiny), Error);
  }
  SECTION("empty input passes through") { CHECK(prune_outlier_users(Dataset{}).empty()); }
}

TEST_CASE("featurize groups per user and keeps engagement labels") {
  Dataset d;
  d.interactions = {make("u1", "i1", "t1", 8, 1, 3), make("u2", "i1", "t2", 7, 2, 1),
                    make("u1", "i2", "t3", 9, 3, 0), make("u2", "i2", "t4", 6, 4, 2)};
  const auto agg = build_aggregates(d);
  const auto groups = featurize_dataset(d, agg);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].user_id == "u1");
  REQUIRE(groups[0].entries.size() == 2);
  CHECK(groups[0].entries[0].label == 3);
  CHECK(groups[0].entries[0].rating == 8);
  CHECK(groups[1].entries[1].label == 2);

  SECTION("test users missing from training still get a group") {
    Dataset test;
    test.interactions = {make("uX", "i1", "t9", 5, 9)};
    const auto test_groups = featurize_dataset(test, agg);
    REQUIRE(test_groups.size() == 1);
    CHECK(test_groups[0].entries[0].features[2] == 0.0);
  }
}

TEST_CASE("featurization is deterministic") {
  const auto data = generate_dataset({.user_count = 20,
                                      .item_count = 8,
                                      .min_interactions_per_user = 3,
                                      .max_interactions_per_user = 9,
                                      .retweet_fraction = 0.1,
                                      .seed = 3});
  const auto agg = build_aggregates(data);
  const auto norm_input = [&] {
    std::vector<FeatureVector> m;
    for (const auto& t : data.interactions) m.push_back(extract_features(t, agg));
    return m;
  };
  const auto norm = fit_normalizer(norm_input());
  const auto a = featurize_dataset(data, agg, &norm);
  const auto b = featurize_dataset(data, agg, &norm);
  REQUIRE(a.size() == b.size());
  for (std::size_t g = 0; g < a.size(); ++g)
    for (std::size_t e = 0; e < a[g].entries.size(); ++e)
      CHECK(a[g].entries[e].features == b[g].entries[e].features);
}

TEST_CASE("sqrt smoothing is strictly monotone") {
  // raw a < b must imply feature(a) < feature(b) for the smoothed features
  Dataset train;
  train.interactions = {make("u1", "i1", "t1", 8, 1, 2), make("u2", "i2", "t2", 8, 2, 9)};
  const auto agg = build_aggregates(train);
  const auto va = extract_features(train.interactions[0], agg);
  const auto vb = extract_features(train.interactions[1], agg);
  CHECK(va[2] < vb[2]);  // F3: user engagement 2 vs 9
  CHECK(va[7] < vb[7]);  // F8: item engagement 2 vs 9
}

TEST_CASE("ltr export format") {
  Dataset d;
  d.interactions = {make("u1", "i1", "t1", 8, 1, 3), make("u2", "i1", "t2", 7, 2, 0)};
  const auto agg = build_aggregates(d);
  const auto groups = featurize_dataset(d, agg);
  std::ostringstream out;
  export_ltr(groups, out);

  std::istringstream lines(out.str());
  std::string first;
  std::getline(lines, first);
  CHECK(first.substr(0, 8) == "3 qid:1 ");
  CHECK(first.find(" 1:8.000000 ") != std::string::npos);
  CHECK(first.find(" # t1") == first.size() - 5);
  std::string second;
  std::getline(lines, second);
  CHECK(second.substr(0, 8) == "0 qid:2 ");

  // 1 label + 2 qid + 16 features + '#' + tweet_id = 20 space-separated tokens
  std::istringstream tokens(first);
  std::string token;
  int count = 0;
  while (tokens >> token) ++count;
  CHECK(count == 20);
}
