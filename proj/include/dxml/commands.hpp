#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dxml/metrics.hpp"
#include "dxml/pipeline.hpp"

namespace dxml {

// Entry points behind the `dxml` command-line tool. Data goes to `out`,
// progress and diagnostics to `log`.

struct TrainCommand {
  std::string train_file;
  std::string model_file;
  std::string prior_graph_file;  // optional `i j [weight]` adjacency replacing the co-occurrence graph
  RunConfig config;
  bool dry_run = false;
};

/// Runs the training pipeline and writes the model file. The file is written
/// to a temporary path and renamed into place, so a failed run leaves nothing.
void cmd_train(const TrainCommand& cmd, std::ostream& out, std::ostream& log);

struct PredictCommand {
  std::string model_file;
  std::string test_file;
  std::string out_file;  // empty: write to `out`
  std::optional<std::size_t> k;
  std::optional<std::size_t> p;
  bool top_only = false;  // keep only the top p labels per line
};

void cmd_predict(const PredictCommand& cmd, std::ostream& out, std::ostream& log);

struct EvaluateCommand {
  std::string predictions_file;
  std::string test_file;
  std::vector<std::size_t> ks{1, 3, 5};
  bool skip_unlabeled = false;
  std::string kv_file;  // optional key=value report
};

MetricReport cmd_evaluate(const EvaluateCommand& cmd, std::ostream& out, std::ostream& log);

struct SweepCommand {
  std::string model_file;
  std::string validation_file;
  std::vector<std::size_t> candidates;
  std::vector<std::size_t> metric_ks{1, 3, 5};
  std::size_t p = 5;
};

SweepResult cmd_sweep_k(const SweepCommand& cmd, std::ostream& out, std::ostream& log);

struct EmbedLabelsCommand {
  std::string train_file;
  std::string out_file;
  std::string prior_graph_file;
  std::string graph_out_file;  // optional adjacency export
  DeepWalkConfig deepwalk;
};

void cmd_embed_labels(const EmbedLabelsCommand& cmd, std::ostream& out, std::ostream& log);

struct SplitCommand {
  std::string data_file;
  std::string split_file;
  std::size_t column = 0;
  std::string out_file;
};

void cmd_split(const SplitCommand& cmd, std::ostream& out, std::ostream& log);

void cmd_stats(const std::string& data_file, std::ostream& out);

/// Writes through a temporary file renamed into place on success.
void write_file_atomically(const std::string& path, const std::function<void(std::ostream&)>& body);

}  // namespace dxml
