#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "dxml/cluster.hpp"
#include "dxml/data_io.hpp"
#include "dxml/dense.hpp"
#include "dxml/net.hpp"

namespace dxml {

struct Neighbor {
  std::uint32_t id = 0;
  double distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

/// Exact k-NN by linear scan over `candidates` (columns of `points`).
/// Returns min(k, candidates.size()) neighbors by ascending distance, ties by
/// ascending id.
std::vector<Neighbor> knn_search(const EmbeddingMatrix& points,
                                 std::span<const std::uint32_t> candidates,
                                 std::span<const double> query, std::size_t k);
/// Same over every column of `points`.
std::vector<Neighbor> knn_search(const EmbeddingMatrix& points, std::span<const double> query,
                                 std::size_t k);

enum class Weighting { uniform, inverse_distance };
enum class Aggregation { average, sum };

/// (label, score) pairs with nonzero score, ascending by label.
using LabelScores = std::vector<std::pair<LabelIndex, double>>;

/// Empirical label distribution of the neighbors. Uniform/average scores a
/// label by the fraction of neighbors carrying it; inverse_distance weights
/// neighbors by 1/(distance + 1e-8), normalized to sum to one under average.
LabelScores aggregate_labels(std::span<const Neighbor> neighbors,
                             std::span<const LabelSet> train_labels,
                             Weighting weighting = Weighting::uniform,
                             Aggregation aggregation = Aggregation::average);

/// Scores ordered by descending score, ties by ascending label.
LabelScores rank_scores(LabelScores scores);

/// The p best labels. With `pad_to_labels` > 0, labels without a score are
/// appended (ascending) until p labels are returned or the label space runs out.
std::vector<LabelIndex> top_p(const LabelScores& scores, std::size_t p,
                              std::size_t pad_to_labels = 0);

struct Prediction {
  LabelScores scores;  // ascending by label
  std::vector<LabelIndex> top_labels;
  std::size_t cluster = 0;
  std::size_t neighbors_found = 0;
  bool operator==(const Prediction&) const = default;
};

/// Everything prediction needs; no access to the training file.
struct KnnModel {
  MlpModel net;
  ClusterIndex clusters;
  EmbeddingMatrix train_embeddings;  // l x n_train, eval-mode network outputs
  std::vector<LabelSet> train_labels;
  std::size_t num_labels = 0;
  bool operator==(const KnnModel&) const = default;
};

struct PredictOptions {
  std::size_t k = 10;
  std::size_t p = 5;
  Weighting weighting = Weighting::uniform;
  Aggregation aggregation = Aggregation::average;
};

/// Embed, route to the nearest cluster, k-NN inside it, aggregate, top-p.
/// Throws DataError for a feature index outside the model's input dimension.
Prediction predict(const KnnModel& model, const SparseVector& x, const PredictOptions& options);

/// One line per prediction: `label:score` pairs separated by tabs, by
/// descending score (ties by label). Scores use the shortest exact
/// representation.
void write_prediction_line(const LabelScores& scores, std::ostream& out);

/// Parses the format of write_prediction_line; each entry is returned ranked.
std::vector<LabelScores> read_predictions(std::istream& in);

}  // namespace dxml
