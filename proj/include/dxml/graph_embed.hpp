#pragma once

#include <cstdint>
#include <vector>

#include "dxml/data_io.hpp"
#include "dxml/dense.hpp"
#include "dxml/label_graph.hpp"

namespace dxml {

/// DeepWalk hyper-parameters. The defaults follow the usual DeepWalk/word2vec
/// conventions; `dim` follows the small-scale setting (100).
struct DeepWalkConfig {
  std::size_t dim = 100;
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 40;
  std::size_t window = 5;
  std::size_t negative_samples = 5;
  std::size_t epochs = 5;
  double initial_learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  std::uint64_t rng_seed = 1;
  bool weighted_walks = false;  // transition probability proportional to co-occurrence count
  std::size_t threads = 1;      // >1 selects lock-free (non-deterministic) skip-gram training

  /// Throws UsageError on invalid settings.
  void validate() const;
  bool operator==(const DeepWalkConfig&) const = default;
};

struct WalkCorpus {
  std::size_t num_nodes = 0;
  std::size_t walk_length = 0;
  std::size_t walks_per_node = 0;
  std::vector<std::vector<LabelIndex>> walks;

  std::size_t num_tokens() const;
};

/// walks_per_node truncated random walks from every node. Each node's walks
/// come from its own derived seed, so the result does not depend on
/// `threads`. Isolated nodes produce singleton walks. Walks are ordered
/// round by round, each round visiting the nodes in a freshly shuffled order.
WalkCorpus generate_walks(const LabelGraph& graph, std::size_t walks_per_node,
                          std::size_t walk_length, std::uint64_t rng_seed,
                          bool weighted = false, std::size_t threads = 1);

/// Input (node) and output (context) vectors of a skip-gram model.
struct SkipGramModel {
  EmbeddingMatrix input;
  EmbeddingMatrix output;
};

/// Seeded initialization: inputs uniform in [-0.5/dim, 0.5/dim], outputs zero.
SkipGramModel init_skipgram(std::size_t num_nodes, const DeepWalkConfig& config);

/// Skip-gram with negative sampling over the walk corpus. Negatives are drawn
/// from corpus node frequencies raised to 0.75; the learning rate decays
/// linearly from initial_learning_rate to min_learning_rate.
SkipGramModel train_skipgram_model(const WalkCorpus& corpus, const DeepWalkConfig& config);

/// The node embeddings (input vectors) of train_skipgram_model, dim x num_nodes.
EmbeddingMatrix train_skipgram(const WalkCorpus& corpus, const DeepWalkConfig& config);

/// Mean negative-sampling log-likelihood per (node, context) pair, with the
/// negatives drawn from a generator seeded by `eval_seed`.
double skipgram_log_likelihood(const SkipGramModel& model, const WalkCorpus& corpus,
                               const DeepWalkConfig& config, std::uint64_t eval_seed);

/// Random walks followed by skip-gram training: the label embedding matrix V.
EmbeddingMatrix embed_labels(const LabelGraph& graph, const DeepWalkConfig& config);

}  // namespace dxml
