// corank: train and evaluate collaborative tweet-engagement rankers.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corank/baselines.hpp"
#include "corank/dataset.hpp"
#include "corank/featurizer.hpp"
#include "corank/metrics.hpp"
#include "corank/pipeline.hpp"
#include "corank/ranker.hpp"
#include "corank/synthgen.hpp"

namespace {

corank::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw corank::Error("cannot open " + path);
  return corank::parse_tweets(in, path);
}

void write_dataset(const corank::Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw corank::Error("cannot write " + path);
  corank::serialize_tweets(d, out);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw corank::Error("cannot write " + path);
  out << text;
}

struct SynthArgs {
  corank::SynthConfig config;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const auto& c = a.config;
  std::cerr << "[config] synth users=" << c.user_count << " items=" << c.item_count
            << " per-user=" << c.min_interactions_per_user << ".."
            << c.max_interactions_per_user << " rating-effect=" << c.rating_effect
            << " metadata-effect=" << c.metadata_effect << " noise=" << c.noise
            << " retweet-fraction=" << c.retweet_fraction << " seed=" << c.seed
            << " out=" << a.out << "\n";
  const auto data = corank::generate_dataset(c);
  write_dataset(data, a.out);
  std::cout << "wrote " << data.size() << " interactions to " << a.out << "\n";
  return 0;
}

struct SplitArgs {
  std::string input;
  std::string out_prefix;
  corank::SplitFractions fractions;
};

int cmd_split(const SplitArgs& a) {
  std::cerr << "[config] split in=" << a.input << " out-prefix=" << a.out_prefix
            << " fractions=" << a.fractions.train << "," << a.fractions.test << ","
            << a.fractions.eval << "\n";
  const auto data = load_dataset(a.input);
  const auto split = corank::chronological_split(data, a.fractions);
  write_dataset(split.train, a.out_prefix + ".train.jsonl");
  write_dataset(split.test, a.out_prefix + ".test.jsonl");
  write_dataset(split.eval, a.out_prefix + ".eval.jsonl");
  std::cout << "train=" << split.train.size() << " test=" << split.test.size()
            << " eval=" << split.eval.size() << "\n";
  return 0;
}

struct StatsArgs {
  std::string input;
  std::string histogram_out;
  std::string stats_out;
};

int cmd_stats(const StatsArgs& a) {
  std::cerr << "[config] stats in=" << a.input << " histogram-out=" << a.histogram_out
            << " stats-out=" << a.stats_out << "\n";
  const auto data = load_dataset(a.input);
  const auto stats = corank::interaction_stats(data);
  std::cout << "users=" << stats.user_count << " items=" << stats.item_count
            << " tweets=" << stats.tweet_count << "\n"
            << "interactions/user: min=" << stats.min_per_user << " max=" << stats.max_per_user
            << " mean=" << stats.mean_per_user << " median=" << stats.median_per_user << "\n"
            << "timestamps: " << stats.first_timestamp << " .. " << stats.last_timestamp << "\n";
  if (!a.stats_out.empty()) {
    std::ostringstream csv;
    corank::write_stats_csv(stats, csv);
    write_text(csv.str(), a.stats_out);
  }
  if (!a.histogram_out.empty()) {
    std::ostringstream csv;
    corank::write_histogram_csv(corank::rating_engagement_histogram(data), csv);
    write_text(csv.str(), a.histogram_out);
  }
  return 0;
}

struct TrainArgs {
  std::string input;
  std::string model_out;
  corank::BoostParams params;
  std::size_t prune_min = 4;
  std::size_t prune_max = 200;
};

int cmd_train(const TrainArgs& a) {
  std::cerr << "[config] train in=" << a.input << " out=" << a.model_out
            << " leaves=" << a.params.leaves_per_tree << " shrinkage=" << a.params.shrinkage
            << " early-stop=" << a.params.early_stop_rounds
            << " max-trees=" << a.params.max_trees << " k=" << a.params.ndcg_cutoff
            << " sigma=" << a.params.sigma << " prune-min=" << a.prune_min
            << " prune-max=" << a.prune_max << " seed=" << a.params.seed << "\n";

  const auto raw = load_dataset(a.input);
  const auto trained = corank::run_training_pipeline(raw, a.params, a.prune_min, a.prune_max);
  if (trained.lambdamart.degenerate_labels)
    std::cerr << "warning: degenerate labels (no ordered pairs); LambdaMART kept the base score\n";
  std::cerr << "lambdamart trees=" << trained.lambdamart.model.trees.size()
            << " mart trees=" << trained.mart.model.trees.size() << "\n";
  std::cerr << "blend weights: " << trained.model.blend.members[0].role << "="
            << trained.model.blend.members[0].weight << " "
            << trained.model.blend.members[1].role << "="
            << trained.model.blend.members[1].weight << "\n";

  std::ostringstream buffer;
  corank::save_model(trained.model, buffer);
  write_text(buffer.str(), a.model_out);
  std::cout << "wrote model to " << a.model_out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model;  // baseline name, "ideal", or a model file path
  std::string input;
  std::string train;  // aggregate source; required for recHEI and model files
  std::string report_out;
  std::uint64_t seed = 0;
  int k = 10;
};

bool is_baseline(const std::string& name) {
  return name == "recRating" || name == "recHEI" || name == "recRandom" || name == "ideal";
}

int cmd_eval(const EvalArgs& a) {
  std::cerr << "[config] eval model=" << a.model << " in=" << a.input << " train=" << a.train
            << " k=" << a.k << " seed=" << a.seed << " out=" << a.report_out << "\n";

  const auto data = load_dataset(a.input);
  corank::AggregateStore agg;
  if (!a.train.empty()) agg = corank::build_aggregates(load_dataset(a.train));

  std::vector<corank::QueryGroup> groups;
  std::vector<std::vector<double>> scores;
  if (is_baseline(a.model)) {
    if (a.model == "recHEI" && a.train.empty())
      throw corank::Error("recHEI needs --train to compute item engagement history");
    groups = corank::featurize_dataset(data, agg);
    for (const auto& g : groups) {
      if (a.model == "recRating") {
        scores.push_back(corank::rec_rating(g));
      } else if (a.model == "recHEI") {
        scores.push_back(corank::rec_hei(g, agg));
      } else if (a.model == "recRandom") {
        scores.push_back(corank::rec_random(g, a.seed));
      } else {  // ideal: labels as scores, a test hook
        std::vector<double> s;
        for (const auto& e : g.entries) s.push_back(static_cast<double>(e.label));
        scores.push_back(std::move(s));
      }
    }
  } else {
    if (a.train.empty())
      throw corank::Error("evaluating a model file needs --train to rebuild aggregates");
    std::ifstream in(a.model);
    if (!in) throw corank::Error("cannot open " + a.model);
    const auto model = corank::load_model(in);
    groups = corank::featurize_dataset(data, agg, &model.normalizer);
    scores = corank::score_groups(model.blend, groups);
  }

  const auto report = corank::mean_ndcg(groups, scores, a.k);
  if (!a.report_out.empty()) {
    std::ostringstream csv;
    corank::write_eval_csv(report, csv);
    write_text(csv.str(), a.report_out);
  }
  std::cout << corank::eval_summary_line(report) << "\n";
  return 0;
}

struct RankArgs {
  std::string model;
  std::string input;
  std::string train;
  std::string user;
};

int cmd_rank(const RankArgs& a) {
  std::cerr << "[config] rank model=" << a.model << " in=" << a.input << " train=" << a.train
            << " user=" << a.user << "\n";
  const auto data = load_dataset(a.input);
  corank::AggregateStore agg;
  if (!a.train.empty()) agg = corank::build_aggregates(load_dataset(a.train));

  std::ifstream in(a.model);
  if (!in) throw corank::Error("cannot open " + a.model);
  const auto model = corank::load_model(in);

  const auto groups = corank::featurize_dataset(data, agg, &model.normalizer);
  for (const auto& g : groups) {
    if (g.user_id != a.user) continue;
    for (const auto& tweet_id : corank::rank_user(model.blend, g)) std::cout << tweet_id << "\n";
    return 0;
  }
  throw corank::Error("user \"" + a.user + "\" not present in " + a.input);
}

struct ExportArgs {
  std::string input;
  std::string out;
  std::string train;  // aggregate source; defaults to the input itself
  bool normalize = false;
};

int cmd_export(const ExportArgs& a) {
  std::cerr << "[config] export in=" << a.input << " out=" << a.out
            << " train=" << (a.train.empty() ? a.input : a.train)
            << " normalize=" << (a.normalize ? "true" : "false") << "\n";
  const auto data = load_dataset(a.input);
  const auto agg =
      corank::build_aggregates(a.train.empty() ? data : load_dataset(a.train));

  corank::Normalizer normalizer;
  if (a.normalize) {
    std::vector<corank::FeatureVector> matrix;
    matrix.reserve(data.size());
    for (const auto& t : data.interactions) matrix.push_back(corank::extract_features(t, agg));
    normalizer = corank::fit_normalizer(matrix);
  }

  const auto groups =
      corank::featurize_dataset(data, agg, a.normalize ? &normalizer : nullptr);
  std::ostringstream text;
  corank::export_ltr(groups, text);
  write_text(text.str(), a.out);
  std::cout << "wrote " << data.size() << " rows to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collaborative ranking of tweet engagement"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic interaction dataset");
  synth_cmd->add_option("--users", synth.config.user_count, "number of users");
  synth_cmd->add_option("--items", synth.config.item_count, "number of items");
  synth_cmd->add_option("--min-per-user", synth.config.min_interactions_per_user,
                        "min interactions per user");
  synth_cmd->add_option("--max-per-user", synth.config.max_interactions_per_user,
                        "max interactions per user");
  synth_cmd->add_option("--rating-effect", synth.config.rating_effect,
                        "strength of the rating->engagement link");
  synth_cmd->add_option("--metadata-effect", synth.config.metadata_effect,
                        "strength of follower/mention effects");
  synth_cmd->add_option("--noise", synth.config.noise, "gaussian noise scale");
  synth_cmd->add_option("--retweet-fraction", synth.config.retweet_fraction,
                        "fraction of records that are retweets");
  synth_cmd->add_option("--seed", synth.config.seed, "generator seed");
  synth_cmd->add_option("-o,--out", synth.out, "output JSONL path")->required();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "chronological train/test/eval split");
  split_cmd->add_option("-i,--in", split.input, "input JSONL path")->required();
  split_cmd->add_option("-o,--out-prefix", split.out_prefix, "output path prefix")->required();
  split_cmd->add_option("--train-frac", split.fractions.train, "train fraction");
  split_cmd->add_option("--test-frac", split.fractions.test, "test fraction");
  split_cmd->add_option("--eval-frac", split.fractions.eval, "eval fraction");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "dataset statistics and histogram");
  stats_cmd->add_option("-i,--in", stats.input, "input JSONL path")->required();
  stats_cmd->add_option("--histogram-out", stats.histogram_out,
                        "rating/engagement histogram CSV path");
  stats_cmd->add_option("--stats-out", stats.stats_out, "summary statistics CSV path");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train the blended MART/LambdaMART ranker");
  train_cmd->add_option("-i,--in", train.input, "training JSONL path")->required();
  train_cmd->add_option("-o,--out", train.model_out, "model file path")->required();
  train_cmd->add_option("--leaves", train.params.leaves_per_tree, "leaves per tree");
  train_cmd->add_option("--shrinkage", train.params.shrinkage, "learning rate");
  train_cmd->add_option("--early-stop", train.params.early_stop_rounds,
                        "rounds without improvement before stopping");
  train_cmd->add_option("--max-trees", train.params.max_trees, "upper bound on trees");
  train_cmd->add_option("--sigma", train.params.sigma, "pairwise logistic steepness");
  train_cmd->add_option("--min-samples-leaf", train.params.min_samples_leaf,
                        "minimum rows per leaf");
  train_cmd->add_option("--prune-min", train.prune_min,
                        "drop users with fewer interactions than this");
  train_cmd->add_option("--prune-max", train.prune_max,
                        "drop users with more interactions than this");
  train_cmd->add_option("--k", train.params.ndcg_cutoff, "nDCG cutoff");
  train_cmd->add_option("--seed", train.params.seed, "seed recorded in the model");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model or baseline with mean nDCG@k");
  eval_cmd->add_option("--model", eval.model,
                       "model file path, or recRating|recHEI|recRandom|ideal")
      ->required();
  eval_cmd->add_option("-i,--in", eval.input, "evaluation JSONL path")->required();
  eval_cmd->add_option("--train", eval.train, "training JSONL path for aggregates");
  eval_cmd->add_option("-o,--out", eval.report_out, "per-user nDCG CSV path");
  eval_cmd->add_option("--k", eval.k, "nDCG cutoff");
  eval_cmd->add_option("--seed", eval.seed, "seed for recRandom");

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "print one user's tweets, best first");
  rank_cmd->add_option("--model", rank.model, "model file path")->required();
  rank_cmd->add_option("-i,--in", rank.input, "candidate JSONL path")->required();
  rank_cmd->add_option("--train", rank.train, "training JSONL path for aggregates");
  rank_cmd->add_option("--user", rank.user, "user to rank for")->required();

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "write features in learning-to-rank format");
  export_cmd->add_option("-i,--in", exp.input, "input JSONL path")->required();
  export_cmd->add_option("-o,--out", exp.out, "output text path")->required();
  export_cmd->add_option("--train", exp.train, "aggregate source (defaults to the input)");
  export_cmd->add_flag("--normalize", exp.normalize, "z-score features before writing");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (split_cmd->parsed()) return cmd_split(split);
    if (stats_cmd->parsed()) return cmd_stats(stats);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (rank_cmd->parsed()) return cmd_rank(rank);
    if (export_cmd->parsed()) return cmd_export(exp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
