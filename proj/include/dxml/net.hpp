#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dxml/data_io.hpp"
#include "dxml/dense.hpp"
#include "dxml/label_projection.hpp"

namespace dxml {

class Rng;

struct NetShape {
  std::size_t input_dim = 0;   // d
  std::size_t hidden = 256;    // H
  std::size_t output_dim = 0;  // l
  bool operator==(const NetShape&) const = default;
};

/// Two-layer embedding network:
///
///     f(x) = l2normalize(dropout(W2^T relu(W1^T x + b1) + b2))
///
/// W1 is d x H with one row per input feature, so a sparse input only touches
/// the rows of its nonzero features. W2 is H x l.
struct MlpModel {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  bool use_bias = true;

  NetShape shape() const { return {w1.rows(), w1.cols(), w2.cols()}; }
  bool all_finite() const;
  bool operator==(const MlpModel&) const = default;
};

/// Uniform He-style initialization (bound sqrt(6 / fan_in)); biases zero.
MlpModel init_model(const NetShape& shape, std::uint64_t seed, bool use_bias = true);

enum class LossReduction { mean, sum };

struct TrainConfig {
  double learning_rate = 0.015;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double dropout_rate = 0.5;
  std::size_t epochs = 100;
  std::size_t minibatch_size = 64;
  std::uint64_t rng_seed = 1;
  LossReduction reduction = LossReduction::mean;
  bool shuffle = true;
  std::size_t threads = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Momentum buffers, one per parameter tensor.
struct OptimizerState {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  static OptimizerState zeros_like(const MlpModel& model);
};

/// Parameter-shaped gradients. Only the W1 rows of features seen since the
/// last zero() can be nonzero; they are listed in `touched_rows`.
struct Gradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  std::vector<FeatureIndex> touched_rows;

  static Gradients zeros_like(const MlpModel& model);
  void zero();
  void touch(FeatureIndex row);
  /// this += other
  void add(const Gradients& other);

 private:
  std::vector<char> touched_flag_;
};

/// Smooth-l1 (Huber with unit threshold).
double smooth_l1(double a, double b);
/// d/da smooth_l1(a, b): (a - b) clipped to [-1, 1].
double smooth_l1_grad(double a, double b);
/// Sum of smooth_l1 over coordinates. Throws std::invalid_argument on length mismatch.
double embed_distance(std::span<const double> fx, std::span<const double> fy);

/// Norms below this are guarded by adding it to the denominator.
inline constexpr double kNormEpsilon = 1e-12;

/// Intermediate values of one forward pass.
struct ForwardPass {
  std::vector<double> hidden_pre;  // W1^T x + b1
  std::vector<double> hidden;      // relu
  std::vector<double> dropped;     // (W2^T h + b2) * mask
  double norm = 0.0;               // ||dropped||
  bool guarded = false;            // norm fell below kNormEpsilon
  std::vector<double> output;      // dropped / norm
};

/// `dropout_mask` holds per-output multipliers (0 or 1/(1-rate)); an empty
/// mask is eval mode. Throws std::out_of_range for feature indices >= d.
ForwardPass forward_pass(const MlpModel& model, const SparseVector& x,
                         std::span<const double> dropout_mask = {});

std::vector<double> forward(const MlpModel& model, const SparseVector& x,
                            std::span<const double> dropout_mask = {});

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise 1/(1-rate).
std::vector<double> make_dropout_mask(std::size_t size, double rate, Rng& rng);

struct BatchItem {
  const SparseVector* x;
  std::span<const double> target;
  std::span<const double> dropout_mask;  // empty: no dropout
};

/// Embedding loss of the batch (mean or sum of embed_distance) and its exact
/// gradient, written into `grads` (which is zeroed first).
double loss_and_gradients(const MlpModel& model, std::span<const BatchItem> batch,
                          LossReduction reduction, Gradients& grads);

/// Momentum SGD with L2 weight decay on weights (not biases):
///     v <- momentum * v + g + weight_decay * w;  w <- w - lr * v
/// Throws NumericError if any gradient entry is non-finite.
void sgd_step(MlpModel& model, OptimizerState& state, const Gradients& grads,
              const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;  // mean per-sample embedding loss seen during the epoch
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

struct TrainResult {
  MlpModel model;
  std::vector<double> epoch_losses;
};

/// Shuffled minibatch momentum SGD on (features, target) pairs, starting from
/// `init`. `targets.point_ids` select rows of `data`.
TrainResult train_network(const Dataset& data, const ProjectedTargets& targets, MlpModel init,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Projects the labels through V, initializes a network of the given hidden
/// size and trains it. Throws DataError if no point is labeled.
TrainResult train_network(const Dataset& data, const EmbeddingMatrix& label_embeddings,
                          const TrainConfig& config, std::size_t hidden, bool use_bias = true,
                          bool normalize_targets = true, const EpochCallback& on_epoch = {});

}  // namespace dxml
