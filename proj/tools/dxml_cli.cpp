// dxml: train, predict and evaluate the deep-embedding extreme multi-label
// classifier from the command line.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dxml/commands.hpp"
#include "dxml/error.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

constexpr const char* kFormatNote =
    "Data files use the Extreme Classification Repository text format: a header "
    "'n d L' followed by n lines 'l1,l2,... i:v i:v ...'. Label and feature "
    "indices are 0-based; an unlabeled point's line starts with a space.";

void add_deepwalk_options(CLI::App* cmd, dxml::DeepWalkConfig& dw) {
  cmd->add_option("--walks-per-node", dw.walks_per_node, "Random walks started at each label")
      ->capture_default_str();
  cmd->add_option("--walk-length", dw.walk_length, "Nodes per random walk")->capture_default_str();
  cmd->add_option("--window", dw.window, "Skip-gram context window")->capture_default_str();
  cmd->add_option("--negatives", dw.negative_samples, "Negative samples per pair")
      ->capture_default_str();
  cmd->add_option("--dw-epochs", dw.epochs, "Skip-gram passes over the walk corpus")
      ->capture_default_str();
  cmd->add_option("--dw-lr", dw.initial_learning_rate, "Initial skip-gram learning rate")
      ->capture_default_str();
  cmd->add_flag("--weighted-walks", dw.weighted_walks,
                "Choose walk steps proportionally to co-occurrence counts");
  cmd->add_option("--skipgram-threads", dw.threads,
                  "Lock-free parallel skip-gram threads (>1 is not reproducible)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep embedding extreme multi-label classification"};
  app.footer(kFormatNote);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "",
                 "INI/TOML config file with a [train] (or [predict], ...) section of "
                 "key=value lines named like the long flags; command-line flags win");

  // train
  dxml::TrainCommand train;
  std::string scale = "small", loss_reduction = "mean", weighting = "uniform",
              feature_norm = "none";
  std::size_t dim = 0, hidden = 0, clusters = 0;
  bool no_bias = false, no_target_norm = false, no_shuffle = false;
  auto* t = app.add_subcommand("train", "Train a model (label graph -> DeepWalk -> network -> k-means)");
  t->add_option("--train", train.train_file, "Training data file")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.model_file, "Model file to write")->required();
  t->add_option("--prior-graph", train.prior_graph_file,
                "Label adjacency ('i j [weight]' lines) used instead of the co-occurrence graph")
      ->check(CLI::ExistingFile);
  t->add_flag("--dry-run", train.dry_run, "Print the training plan and exit");
  t->add_option("--scale", scale, "Default sizes: small (dim 100, hidden 256, m 1) or large (300, 512, 8)")
      ->check(CLI::IsMember({"small", "large"}))
      ->capture_default_str();
  t->add_option("--dim", dim, "Embedding dimension (overrides --scale)");
  t->add_option("--hidden", hidden, "Hidden layer width (overrides --scale)");
  t->add_option("--clusters", clusters, "Number of k-means clusters m (overrides --scale)");
  auto& tc = train.config.train;
  t->add_option("--epochs", tc.epochs, "Network training epochs")->capture_default_str();
  t->add_option("--lr", tc.learning_rate, "SGD learning rate")->capture_default_str();
  t->add_option("--momentum", tc.momentum, "SGD momentum")->capture_default_str();
  t->add_option("--weight-decay", tc.weight_decay, "L2 weight decay on weights")->capture_default_str();
  t->add_option("--dropout", tc.dropout_rate, "Dropout rate after the last linear layer")
      ->capture_default_str();
  t->add_option("--batch-size", tc.minibatch_size, "Minibatch size")->capture_default_str();
  t->add_option("--loss-reduction", loss_reduction, "Batch loss: mean or sum")
      ->check(CLI::IsMember({"mean", "sum"}))
      ->capture_default_str();
  t->add_flag("--no-shuffle", no_shuffle, "Keep the data order fixed across epochs");
  t->add_flag("--no-bias", no_bias, "Network without bias terms");
  t->add_flag("--no-target-norm", no_target_norm, "Do not l2-normalize label targets");
  add_deepwalk_options(t, train.config.deepwalk);
  t->add_option("--kmeans-iters", train.config.kmeans_max_iters, "Maximum Lloyd iterations")
      ->capture_default_str();
  t->add_option("--k", train.config.k, "Default k for prediction")->capture_default_str();
  t->add_option("--p", train.config.p, "Default number of labels per prediction")->capture_default_str();
  t->add_option("--weighting", weighting, "Neighbor weighting: uniform or inverse_distance")
      ->check(CLI::IsMember({"uniform", "inverse_distance"}))
      ->capture_default_str();
  t->add_option("--feature-norm", feature_norm, "Feature normalization: none or unit_l2")
      ->check(CLI::IsMember({"none", "unit_l2"}))
      ->capture_default_str();
  t->add_option("--seed", train.config.seed, "Master random seed")->capture_default_str();
  t->add_option("--threads", train.config.threads,
                "Data-parallel network training threads (deterministic for a given count)")
      ->capture_default_str();

  // predict
  dxml::PredictCommand predict;
  std::size_t pk = 0, pp = 0;
  auto* p = app.add_subcommand("predict", "Predict labels for a test file");
  p->add_option("--model", predict.model_file, "Model file")->required()->check(CLI::ExistingFile);
  p->add_option("--test", predict.test_file, "Test data file")->required()->check(CLI::ExistingFile);
  p->add_option("--out", predict.out_file, "Output file (default: stdout)");
  auto* pk_opt = p->add_option("--k", pk, "Nearest neighbors (default: the model's)");
  auto* pp_opt = p->add_option("--p", pp, "Labels kept per line with --top-only (default: the model's)");
  p->add_flag("--top-only", predict.top_only, "Write only the top p labels instead of every scored label");
  p->footer("Output: one line per test point, 'label:score' pairs separated by tabs, "
            "sorted by descending score (ties by ascending label). Every label with a nonzero "
            "score is written unless --top-only is given.");

  // evaluate
  dxml::EvaluateCommand evaluate;
  auto* e = app.add_subcommand("evaluate", "P@k and nDCG@k of a predictions file");
  e->add_option("--predictions", evaluate.predictions_file, "Output of 'predict'")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--test", evaluate.test_file, "Test data file with true labels")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--ks", evaluate.ks, "Cutoffs")->delimiter(',')->capture_default_str();
  e->add_flag("--skip-unlabeled", evaluate.skip_unlabeled,
              "Exclude test points without labels (default: they count as zero)");
  e->add_option("--kv-out", evaluate.kv_file, "Also write 'P@1=66.03' style key=value lines");

  // sweep-k
  dxml::SweepCommand sweep;
  auto* s = app.add_subcommand("sweep-k", "Choose k for k-NN on a validation file");
  s->add_option("--model", sweep.model_file, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("--validation", sweep.validation_file, "Validation data file")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--candidates", sweep.candidates, "Candidate k values")->delimiter(',')->required();
  s->add_option("--ks", sweep.metric_ks, "Metric cutoffs")->delimiter(',')->capture_default_str();

  // embed-labels
  dxml::EmbedLabelsCommand embed;
  std::uint64_t embed_seed = 1;
  auto* el = app.add_subcommand("embed-labels", "Label graph + DeepWalk only; writes 'label v1 ... vl' lines");
  el->add_option("--train", embed.train_file, "Training data file")->required()->check(CLI::ExistingFile);
  el->add_option("--out", embed.out_file, "Output file (default: stdout)");
  el->add_option("--prior-graph", embed.prior_graph_file, "Label adjacency to embed instead")
      ->check(CLI::ExistingFile);
  el->add_option("--graph-out", embed.graph_out_file, "Also export the graph as 'i j weight' lines");
  el->add_option("--dim", embed.deepwalk.dim, "Embedding dimension")->capture_default_str();
  el->add_option("--seed", embed_seed, "Master random seed")->capture_default_str();
  add_deepwalk_options(el, embed.deepwalk);

  // split
  dxml::SplitCommand split;
  auto* sp = app.add_subcommand("split", "Extract one train/test split from a repository data file");
  sp->add_option("--data", split.data_file, "Full data file")->required()->check(CLI::ExistingFile);
  sp->add_option("--split", split.split_file, "Split file (1-based point ids, one column per split)")
      ->required()
      ->check(CLI::ExistingFile);
  sp->add_option("--column", split.column, "0-based split column")->capture_default_str();
  sp->add_option("--out", split.out_file, "Output file (default: stdout)");

  // stats
  std::string stats_file;
  auto* st = app.add_subcommand("stats", "Dataset statistics");
  st->add_option("--data", stats_file, "Data file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*t) {
      auto& cfg = train.config;
      cfg.apply_scale(dxml::parse_scale(scale));
      if (dim) cfg.deepwalk.dim = dim;
      if (hidden) cfg.hidden = hidden;
      if (clusters) cfg.clusters = clusters;
      cfg.train.reduction =
          loss_reduction == "sum" ? dxml::LossReduction::sum : dxml::LossReduction::mean;
      cfg.train.shuffle = !no_shuffle;
      cfg.use_bias = !no_bias;
      cfg.normalize_targets = !no_target_norm;
      cfg.weighting = weighting == "inverse_distance" ? dxml::Weighting::inverse_distance
                                                      : dxml::Weighting::uniform;
      cfg.feature_norm = dxml::parse_feature_norm(feature_norm);
      cfg.derive_stage_settings();
      dxml::cmd_train(train, std::cout, std::cerr);
    } else if (*p) {
      if (*pk_opt) predict.k = pk;
      if (*pp_opt) predict.p = pp;
      dxml::cmd_predict(predict, std::cout, std::cerr);
    } else if (*e) {
      dxml::cmd_evaluate(evaluate, std::cout, std::cerr);
    } else if (*s) {
      dxml::cmd_sweep_k(sweep, std::cout, std::cerr);
    } else if (*el) {
      embed.deepwalk.rng_seed = embed_seed;
      embed.deepwalk.validate();
      dxml::cmd_embed_labels(embed, std::cout, std::cerr);
    } else if (*sp) {
      dxml::cmd_split(split, std::cout, std::cerr);
    } else if (*st) {
      dxml::cmd_stats(stats_file, std::cout);
    }
  } catch (const dxml::UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const dxml::DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
