#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dxml/data_io.hpp"
#include "dxml/dense.hpp"
#include "dxml/graph_embed.hpp"
#include "dxml/label_graph.hpp"
#include "dxml/metrics.hpp"
#include "dxml/net.hpp"
#include "dxml/predictor.hpp"

namespace dxml {

enum class Scale : std::uint8_t { small = 0, large = 1 };

Scale parse_scale(const std::string& name);
std::string to_string(Scale scale);

/// Every knob of a training + prediction run.
struct RunConfig {
  Scale scale = Scale::small;
  DeepWalkConfig deepwalk;
  TrainConfig train;
  std::size_t hidden = 256;
  bool use_bias = true;
  bool normalize_targets = true;
  std::size_t clusters = 1;
  std::size_t kmeans_max_iters = 100;
  std::uint64_t kmeans_seed = 0;
  std::size_t k = 10;
  std::size_t p = 5;
  Weighting weighting = Weighting::uniform;
  FeatureNorm feature_norm = FeatureNorm::none;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  /// Embedding dim, hidden size and cluster count for the given scale:
  /// small (100, 256, 1), large (300, 512, 8).
  void apply_scale(Scale s);
  /// Derives the per-stage seeds and thread counts from `seed` and `threads`.
  void derive_stage_settings();
  /// Throws UsageError.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// The trained model: label embeddings plus the prediction-time artifacts.
struct ModelArtifacts {
  RunConfig config;
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
  EmbeddingMatrix label_embeddings;  // V, l x L
  KnnModel knn;

  bool operator==(const ModelArtifacts&) const = default;
};

using LogFn = std::function<void(const std::string&)>;

/// Training pipeline in order: label graph, label embedding, label targets,
/// network training, clustering of the embedded training points. Numeric
/// artifacts are rounded to float precision as they are produced, so the
/// 32-bit model file reproduces them exactly. Stage failures are rethrown
/// with the stage name prefixed.
ModelArtifacts train_model(const Dataset& train, const RunConfig& config, const LogFn& log = {},
                           const LabelGraph* prior_graph = nullptr);

/// Stages train_model would run, one line each.
std::vector<std::string> training_plan(const RunConfig& config);

/// Predictions for every test point. Throws DataError on a feature dimension
/// mismatch.
std::vector<Prediction> predict_dataset(const ModelArtifacts& model, const Dataset& test,
                                        const PredictOptions& options);

struct SweepResult {
  std::vector<std::size_t> candidates;
  std::vector<MetricReport> reports;  // per candidate
  std::vector<std::size_t> metric_ks;
  std::vector<std::size_t> best_k_precision;  // per metric k
  std::vector<std::size_t> best_k_ndcg;
};

/// Evaluates each candidate k on `validation` and picks, per metric, the k
/// with the highest value (ties to the smallest k).
SweepResult sweep_k(const ModelArtifacts& model, const Dataset& validation,
                    std::span<const std::size_t> candidates, std::span<const std::size_t> metric_ks,
                    std::size_t p);

/// `label v1 ... vl` per line.
void write_label_embeddings(const EmbeddingMatrix& v, std::ostream& out);

}  // namespace dxml
