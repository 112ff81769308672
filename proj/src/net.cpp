#include "dxml/net.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "dxml/error.hpp"
#include "dxml/rng.hpp"

namespace dxml {

bool MlpModel::all_finite() const {
  auto finite = [](std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
  };
  return finite(w1.flat()) && finite(b1) && finite(w2.flat()) && finite(b2);
}

MlpModel init_model(const NetShape& shape, std::uint64_t seed, bool use_bias) {
  if (shape.input_dim == 0 || shape.hidden == 0 || shape.output_dim == 0)
    throw UsageError("network dimensions must be positive");
  MlpModel m;
  m.use_bias = use_bias;
  m.w1 = Matrix(shape.input_dim, shape.hidden);
  m.b1.assign(shape.hidden, 0.0);
  m.w2 = Matrix(shape.hidden, shape.output_dim);
  m.b2.assign(shape.output_dim, 0.0);
  Rng rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(shape.input_dim));
  for (double& v : m.w1.flat()) v = rng.uniform(-a1, a1);
  const double a2 = std::sqrt(6.0 / static_cast<double>(shape.hidden));
  for (double& v : m.w2.flat()) v = rng.uniform(-a2, a2);
  return m;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("train config: ") + what);
  };
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0, 1)");
  require(minibatch_size >= 1, "minibatch_size must be positive");
  require(threads >= 1, "threads must be positive");
}

OptimizerState OptimizerState::zeros_like(const MlpModel& model) {
  return {Matrix(model.w1.rows(), model.w1.cols()), std::vector<double>(model.b1.size(), 0.0),
          Matrix(model.w2.rows(), model.w2.cols()), std::vector<double>(model.b2.size(), 0.0)};
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  g.w1 = Matrix(model.w1.rows(), model.w1.cols());
  g.b1.assign(model.b1.size(), 0.0);
  g.w2 = Matrix(model.w2.rows(), model.w2.cols());
  g.b2.assign(model.b2.size(), 0.0);
  g.touched_flag_.assign(model.w1.rows(), 0);
  return g;
}

void Gradients::touch(FeatureIndex row) {
  if (!touched_flag_[row]) {
    touched_flag_[row] = 1;
    touched_rows.push_back(row);
  }
}

void Gradients::zero() {
  for (auto r : touched_rows) {
    auto row = w1.row(r);
    std::fill(row.begin(), row.end(), 0.0);
    touched_flag_[r] = 0;
  }
  touched_rows.clear();
  std::fill(b1.begin(), b1.end(), 0.0);
  auto f = w2.flat();
  std::fill(f.begin(), f.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

void Gradients::add(const Gradients& other) {
  for (auto r : other.touched_rows) {
    touch(r);
    auto dst = w1.row(r);
    const auto src = other.w1.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += other.b1[i];
  auto dst = w2.flat();
  const auto src = other.w2.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += other.b2[i];
}

double smooth_l1(double a, double b) {
  const double d = std::abs(a - b);
  return d <= 1.0 ? 0.5 * d * d : d - 0.5;
}

double smooth_l1_grad(double a, double b) { return std::clamp(a - b, -1.0, 1.0); }

double embed_distance(std::span<const double> fx, std::span<const double> fy) {
  if (fx.size() != fy.size())
    throw std::invalid_argument("embed_distance: length mismatch (" + std::to_string(fx.size()) +
                                " vs " + std::to_string(fy.size()) + ")");
  double s = 0.0;
  for (std::size_t j = 0; j < fx.size(); ++j) s += smooth_l1(fx[j], fy[j]);
  return s;
}

ForwardPass forward_pass(const MlpModel& model, const SparseVector& x,
                         std::span<const double> dropout_mask) {
  const std::size_t d = model.w1.rows(), H = model.w1.cols(), out_dim = model.w2.cols();
  ForwardPass fp;
  fp.hidden_pre = model.use_bias ? model.b1 : std::vector<double>(H, 0.0);
  for (std::size_t t = 0; t < x.nnz(); ++t) {
    const auto i = x.indices[t];
    if (i >= d)
      throw std::out_of_range("feature index " + std::to_string(i) + " >= d=" + std::to_string(d));
    const double v = x.values[t];
    const auto row = model.w1.row(i);
    for (std::size_t h = 0; h < H; ++h) fp.hidden_pre[h] += v * row[h];
  }
  fp.hidden.resize(H);
  for (std::size_t h = 0; h < H; ++h) fp.hidden[h] = std::max(0.0, fp.hidden_pre[h]);

  fp.dropped = model.use_bias ? model.b2 : std::vector<double>(out_dim, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    const double a = fp.hidden[h];
    if (a == 0.0) continue;
    const auto row = model.w2.row(h);
    for (std::size_t j = 0; j < out_dim; ++j) fp.dropped[j] += a * row[j];
  }
  if (!dropout_mask.empty())
    for (std::size_t j = 0; j < out_dim; ++j) fp.dropped[j] *= dropout_mask[j];

  fp.norm = norm2(fp.dropped);
  fp.guarded = fp.norm < kNormEpsilon;
  const double denom = fp.guarded ? fp.norm + kNormEpsilon : fp.norm;
  fp.output.resize(out_dim);
  for (std::size_t j = 0; j < out_dim; ++j) fp.output[j] = fp.dropped[j] / denom;
  return fp;
}

std::vector<double> forward(const MlpModel& model, const SparseVector& x,
                            std::span<const double> dropout_mask) {
  return forward_pass(model, x, dropout_mask).output;
}

std::vector<double> make_dropout_mask(std::size_t size, double rate, Rng& rng) {
  std::vector<double> mask(size, 1.0);
  if (rate <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

namespace {

/// Adds scale * d(loss_i)/d(params) for every item into grads; returns the
/// unscaled sum of per-item losses.
double accumulate(const MlpModel& model, std::span<const BatchItem> items, double scale,
                  Gradients& grads) {
  const std::size_t H = model.w1.cols(), out_dim = model.w2.cols();
  std::vector<double> g_out(out_dim), g_hidden(H);
  double total = 0.0;
  for (const auto& item : items) {
    const auto fp = forward_pass(model, *item.x, item.dropout_mask);
    const auto& f = fp.output;
    total += embed_distance(f, item.target);

    // d loss / d f
    std::vector<double> g_f(out_dim);
    for (std::size_t j = 0; j < out_dim; ++j) g_f[j] = scale * smooth_l1_grad(f[j], item.target[j]);

    // through f = dropped / denom(dropped)
    const double denom = fp.guarded ? fp.norm + kNormEpsilon : fp.norm;
    const double proj = fp.norm > 0.0 ? dot(fp.dropped, g_f) / (fp.norm * denom * denom) : 0.0;
    for (std::size_t j = 0; j < out_dim; ++j) {
      double g = g_f[j] / denom - fp.dropped[j] * proj;
      if (!item.dropout_mask.empty()) g *= item.dropout_mask[j];
      g_out[j] = g;
    }

    if (model.use_bias)
      for (std::size_t j = 0; j < out_dim; ++j) grads.b2[j] += g_out[j];
    for (std::size_t h = 0; h < H; ++h) {
      if (fp.hidden_pre[h] <= 0.0) {
        g_hidden[h] = 0.0;
        continue;
      }
      auto gw2 = grads.w2.row(h);
      const auto w2 = model.w2.row(h);
      const double a = fp.hidden[h];
      double acc = 0.0;
      for (std::size_t j = 0; j < out_dim; ++j) {
        gw2[j] += a * g_out[j];
        acc += w2[j] * g_out[j];
      }
      g_hidden[h] = acc;
    }

    if (model.use_bias)
      for (std::size_t h = 0; h < H; ++h) grads.b1[h] += g_hidden[h];
    const auto& x = *item.x;
    for (std::size_t t = 0; t < x.nnz(); ++t) {
      const auto i = x.indices[t];
      grads.touch(i);
      auto row = grads.w1.row(i);
      const double v = x.values[t];
      for (std::size_t h = 0; h < H; ++h) row[h] += v * g_hidden[h];
    }
  }
  return total;
}

double batch_scale(LossReduction reduction, std::size_t batch_size) {
  return reduction == LossReduction::mean ? 1.0 / static_cast<double>(batch_size) : 1.0;
}

}  // namespace

double loss_and_gradients(const MlpModel& model, std::span<const BatchItem> batch,
                          LossReduction reduction, Gradients& grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradients: empty batch");
  grads.zero();
  const double scale = batch_scale(reduction, batch.size());
  return accumulate(model, batch, scale, grads) * scale;
}

void sgd_step(MlpModel& model, OptimizerState& state, const Gradients& grads,
              const TrainConfig& config) {
  auto check = [](std::span<const double> g, const char* name) {
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(g[i]))
        throw NumericError(std::string("non-finite gradient in ") + name + " at flat index " +
                           std::to_string(i) + " (value " + std::to_string(g[i]) + ")");
  };
  for (auto r : grads.touched_rows) check(grads.w1.row(r), "W1");
  check(grads.b1, "b1");
  check(grads.w2.flat(), "W2");
  check(grads.b2, "b2");

  const double mu = config.momentum, lr = config.learning_rate, wd = config.weight_decay;
  auto update = [&](std::span<double> w, std::span<double> v, std::span<const double> g,
                    double decay) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] + g[i] + decay * w[i];
      w[i] -= lr * v[i];
    }
  };
  update(model.w1.flat(), state.w1.flat(), grads.w1.flat(), wd);
  update(model.w2.flat(), state.w2.flat(), grads.w2.flat(), wd);
  if (model.use_bias) {
    update(model.b1, state.b1, grads.b1, 0.0);
    update(model.b2, state.b2, grads.b2, 0.0);
  }
}

TrainResult train_network(const Dataset& data, const ProjectedTargets& targets, MlpModel init,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (targets.point_ids.empty()) throw DataError("no labeled training points");
  if (init.w1.rows() != data.num_features)
    throw DataError("network input dimension does not match dataset feature count");

  TrainResult result{std::move(init), {}};
  MlpModel& model = result.model;
  OptimizerState state = OptimizerState::zeros_like(model);
  Rng rng(mix_seed(config.rng_seed, 11));

  const std::size_t n = targets.point_ids.size();
  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  std::vector<Gradients> grads;
  for (std::size_t t = 0; t < threads; ++t) grads.push_back(Gradients::zeros_like(model));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> masks(config.minibatch_size);
  std::vector<BatchItem> batch;
  batch.reserve(config.minibatch_size);
  const std::size_t out_dim = model.w2.cols();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle) rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n; b += config.minibatch_size) {
      const std::size_t size = std::min(config.minibatch_size, n - b);
      batch.clear();
      for (std::size_t s = 0; s < size; ++s) {
        const std::size_t k = order[b + s];
        std::span<const double> mask;
        if (config.dropout_rate > 0.0) {
          masks[s] = make_dropout_mask(out_dim, config.dropout_rate, rng);
          mask = masks[s];
        }
        batch.push_back({&data.points[targets.point_ids[k]].features, targets.targets[k], mask});
      }

      const double scale = batch_scale(config.reduction, size);
      const std::size_t workers = std::min(threads, size);
      for (std::size_t t = 0; t < workers; ++t) grads[t].zero();
      std::vector<double> partial(workers, 0.0);
      const std::size_t chunk = (size + workers - 1) / workers;
      auto run = [&](std::size_t t) {
        const std::size_t lo = std::min(size, t * chunk), hi = std::min(size, (t + 1) * chunk);
        partial[t] = accumulate(model, std::span(batch).subspan(lo, hi - lo), scale, grads[t]);
      };
      if (workers == 1) {
        run(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run, t);
        for (auto& th : pool) th.join();
        for (std::size_t t = 1; t < workers; ++t) grads[0].add(grads[t]);
      }
      for (double p : partial) epoch_loss += p;
      sgd_step(model, state, grads[0], config);
    }
    const double mean_loss = epoch_loss / static_cast<double>(n);
    result.epoch_losses.push_back(mean_loss);
    if (on_epoch) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      on_epoch({epoch + 1, mean_loss, dt.count()});
    }
  }
  return result;
}

TrainResult train_network(const Dataset& data, const EmbeddingMatrix& label_embeddings,
                          const TrainConfig& config, std::size_t hidden, bool use_bias,
                          bool normalize_targets, const EpochCallback& on_epoch) {
  const auto targets = project_dataset(label_embeddings, data, normalize_targets);
  if (targets.point_ids.empty()) throw DataError("no labeled training points");
  auto init = init_model({data.num_features, hidden, label_embeddings.dim()},
                         mix_seed(config.rng_seed, 10), use_bias);
  return train_network(data, targets, std::move(init), config, on_epoch);
}

}  // namespace dxml
