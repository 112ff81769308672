#include "dxml/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <string>

#include "dxml/cluster.hpp"
#include "dxml/error.hpp"
#include "dxml/label_projection.hpp"
#include "dxml/rng.hpp"

namespace dxml {

Scale parse_scale(const std::string& name) {
  if (name == "small") return Scale::small;
  if (name == "large") return Scale::large;
  throw UsageError("unknown scale '" + name + "' (expected small|large)");
}

std::string to_string(Scale scale) { return scale == Scale::small ? "small" : "large"; }

void RunConfig::apply_scale(Scale s) {
  scale = s;
  deepwalk.dim = s == Scale::small ? 100 : 300;
  hidden = s == Scale::small ? 256 : 512;
  clusters = s == Scale::small ? 1 : 8;
}

void RunConfig::derive_stage_settings() {
  deepwalk.rng_seed = mix_seed(seed, 1);
  train.rng_seed = mix_seed(seed, 2);
  kmeans_seed = mix_seed(seed, 3);
  train.threads = threads;
}

void RunConfig::validate() const {
  deepwalk.validate();
  train.validate();
  if (hidden == 0) throw UsageError("hidden size must be positive");
  if (clusters == 0) throw UsageError("cluster count must be positive");
  if (k == 0) throw UsageError("k must be positive");
  if (p == 0) throw UsageError("p must be positive");
  if (threads == 0) throw UsageError("threads must be positive");
}

namespace {

void emit(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

template <typename Fn>
auto run_stage(const std::string& name, const LogFn& log, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  emit(log, "[" + name + "] start");
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3f", dt.count());
      emit(log, "[" + name + "] done in " + buf + " s");
    } else {
      auto result = fn();
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3f", dt.count());
      emit(log, "[" + name + "] done in " + buf + " s");
      return result;
    }
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(name + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> training_plan(const RunConfig& c) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  return {
      "1. label-graph: co-occurrence graph over the training labels",
      "2. label-embedding: DeepWalk, dim=" + std::to_string(c.deepwalk.dim) +
          " walks/node=" + std::to_string(c.deepwalk.walks_per_node) +
          " walk-length=" + std::to_string(c.deepwalk.walk_length) +
          " window=" + std::to_string(c.deepwalk.window) +
          " negatives=" + std::to_string(c.deepwalk.negative_samples) +
          " epochs=" + std::to_string(c.deepwalk.epochs),
      std::string("3. label-targets: mean of label embeddings") +
          (c.normalize_targets ? ", l2-normalized" : ""),
      "4. network: hidden=" + std::to_string(c.hidden) + " epochs=" + std::to_string(c.train.epochs) +
          " lr=" + num(c.train.learning_rate) + " momentum=" + num(c.train.momentum) +
          " weight-decay=" + num(c.train.weight_decay) + " dropout=" + num(c.train.dropout_rate) +
          " batch=" + std::to_string(c.train.minibatch_size),
      "5. clustering: k-means m=" + std::to_string(c.clusters) +
          " max-iters=" + std::to_string(c.kmeans_max_iters),
  };
}

ModelArtifacts train_model(const Dataset& train, const RunConfig& config, const LogFn& log,
                           const LabelGraph* prior_graph) {
  config.validate();
  validate(train);
  std::size_t labeled = 0;
  for (const auto& p : train.points) labeled += !p.labels.empty();
  if (labeled == 0) throw DataError("no labeled training points");

  const Dataset data = normalize_features(train, config.feature_norm);
  ModelArtifacts model;
  model.config = config;
  model.num_features = data.num_features;
  model.num_labels = data.num_labels;
  model.knn.num_labels = data.num_labels;

  const LabelGraph graph = run_stage("label-graph", log, [&] {
    if (prior_graph) {
      if (prior_graph->num_nodes() != data.num_labels)
        throw DataError("prior label graph has " + std::to_string(prior_graph->num_nodes()) +
                        " nodes, dataset has " + std::to_string(data.num_labels) + " labels");
      return *prior_graph;
    }
    auto g = build_label_graph(data);
    emit(log, "  " + std::to_string(g.num_nodes()) + " nodes, " + std::to_string(g.num_edges()) +
                  " edges");
    return g;
  });

  model.label_embeddings = run_stage("label-embedding", log, [&] {
    auto v = embed_labels(graph, config.deepwalk);
    round_to_float(v.flat());
    return v;
  });

  const auto targets = run_stage("label-targets", log, [&] {
    auto t = project_dataset(model.label_embeddings, data, config.normalize_targets);
    if (t.skipped_unlabeled || t.skipped_degenerate)
      emit(log, "  warning: skipped " + std::to_string(t.skipped_unlabeled) + " unlabeled and " +
                    std::to_string(t.skipped_degenerate) + " degenerate points");
    if (t.point_ids.empty()) throw DataError("no labeled training points");
    return t;
  });

  model.knn.net = run_stage("network", log, [&] {
    auto init = init_model({data.num_features, config.hidden, config.deepwalk.dim},
                           mix_seed(config.train.rng_seed, 10), config.use_bias);
    auto result = train_network(data, targets, std::move(init), config.train,
                                [&](const EpochStats& s) {
                                  char buf[128];
                                  std::snprintf(buf, sizeof(buf),
                                                "  epoch %zu loss %.6f time %.3f s", s.epoch,
                                                s.mean_loss, s.seconds);
                                  emit(log, buf);
                                });
    auto& net = result.model;
    round_to_float(net.w1.flat());
    round_to_float(net.b1);
    round_to_float(net.w2.flat());
    round_to_float(net.b2);
    return std::move(net);
  });

  run_stage("clustering", log, [&] {
    const std::size_t n = targets.point_ids.size();
    auto& emb = model.knn.train_embeddings;
    emb = EmbeddingMatrix(config.deepwalk.dim, n);
    model.knn.train_labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& point = data.points[targets.point_ids[i]];
      const auto f = forward(model.knn.net, point.features);
      std::copy(f.begin(), f.end(), emb.column(i).begin());
      model.knn.train_labels.push_back(point.labels);
    }
    round_to_float(emb.flat());
    auto km = kmeans(emb, config.clusters, config.kmeans_max_iters, config.kmeans_seed);
    round_to_float(km.index.centers.flat());
    model.knn.clusters = std::move(km.index);
    emit(log, "  " + std::to_string(km.iterations) + " Lloyd iterations");
  });
  return model;
}

std::vector<Prediction> predict_dataset(const ModelArtifacts& model, const Dataset& test,
                                        const PredictOptions& options) {
  if (test.num_features != model.num_features)
    throw DataError("dimension mismatch: test data has d=" + std::to_string(test.num_features) +
                    ", model expects d=" + std::to_string(model.num_features));
  std::vector<Prediction> out;
  out.reserve(test.num_points());
  for (const auto& p : test.points)
    out.push_back(predict(model.knn, normalize_features(p.features, model.config.feature_norm),
                          options));
  return out;
}

SweepResult sweep_k(const ModelArtifacts& model, const Dataset& validation,
                    std::span<const std::size_t> candidates, std::span<const std::size_t> metric_ks,
                    std::size_t p) {
  if (candidates.empty()) throw UsageError("sweep-k: empty candidate list");
  if (metric_ks.empty()) throw UsageError("sweep-k: empty metric k list");
  SweepResult res;
  res.candidates.assign(candidates.begin(), candidates.end());
  res.metric_ks.assign(metric_ks.begin(), metric_ks.end());
  for (auto k : candidates) {
    if (k == 0) throw UsageError("sweep-k: candidate k must be positive");
    PredictOptions opts;
    opts.k = k;
    opts.p = p;
    opts.weighting = model.config.weighting;
    const auto preds = predict_dataset(model, validation, opts);
    std::vector<LabelScores> scores;
    scores.reserve(preds.size());
    for (const auto& pr : preds) scores.push_back(pr.scores);
    res.reports.push_back(evaluate(scores, validation, metric_ks));
  }
  for (std::size_t j = 0; j < metric_ks.size(); ++j) {
    std::size_t best_p = 0, best_n = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      auto better = [&](double a, double b, std::size_t ca, std::size_t cb) {
        return a > b || (a == b && candidates[ca] < candidates[cb]);
      };
      if (better(res.reports[c].precision[j], res.reports[best_p].precision[j], c, best_p))
        best_p = c;
      if (better(res.reports[c].ndcg[j], res.reports[best_n].ndcg[j], c, best_n)) best_n = c;
    }
    res.best_k_precision.push_back(candidates[best_p]);
    res.best_k_ndcg.push_back(candidates[best_n]);
  }
  return res;
}

void write_label_embeddings(const EmbeddingMatrix& v, std::ostream& out) {
  std::string line;
  char buf[64];
  for (std::size_t j = 0; j < v.count(); ++j) {
    line = std::to_string(j);
    for (double x : v.column(j)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      line += ' ';
      line.append(buf, ptr);
    }
    line += '\n';
    out << line;
  }
}

}  // namespace dxml
