#include "dxml/graph_embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "dxml/error.hpp"
#include "dxml/rng.hpp"

namespace dxml {

void DeepWalkConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("deepwalk config: ") + what);
  };
  require(dim >= 1, "dim must be positive");
  require(walks_per_node >= 1, "walks_per_node must be positive");
  require(walk_length >= 1, "walk_length must be positive");
  require(window >= 1, "window must be positive");
  require(window < walk_length, "window must be smaller than walk_length");
  require(negative_samples >= 1, "negative_samples must be positive");
  require(epochs >= 1, "epochs must be positive");
  require(initial_learning_rate > 0.0, "initial_learning_rate must be positive");
  require(min_learning_rate > 0.0 && min_learning_rate <= initial_learning_rate,
          "min_learning_rate must be in (0, initial_learning_rate]");
  require(threads >= 1, "threads must be positive");
}

std::size_t WalkCorpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& w : walks) n += w.size();
  return n;
}

namespace {

void walks_from(const LabelGraph& graph, LabelIndex start, std::size_t count, std::size_t length,
                std::uint64_t seed, bool weighted, const std::vector<std::vector<double>>& cumw,
                std::vector<std::vector<LabelIndex>>& out) {
  Rng rng(mix_seed(seed, start));
  out.assign(count, {});
  for (auto& walk : out) {
    walk.push_back(start);
    if (graph.degree(start) == 0) continue;
    walk.reserve(length);
    LabelIndex cur = start;
    while (walk.size() < length) {
      const auto nbrs = graph.neighbors(cur);
      std::size_t pick;
      if (weighted) {
        const auto& cw = cumw[cur];
        const double u = rng.uniform() * cw.back();
        pick = static_cast<std::size_t>(std::upper_bound(cw.begin(), cw.end(), u) - cw.begin());
        pick = std::min(pick, nbrs.size() - 1);
      } else {
        pick = rng.below(nbrs.size());
      }
      cur = nbrs[pick];
      walk.push_back(cur);
    }
  }
}

}  // namespace

WalkCorpus generate_walks(const LabelGraph& graph, std::size_t walks_per_node,
                          std::size_t walk_length, std::uint64_t rng_seed, bool weighted,
                          std::size_t threads) {
  if (walk_length < 1) throw UsageError("walk_length must be at least 1");
  const std::size_t L = graph.num_nodes();

  std::vector<std::vector<double>> cumw;
  if (weighted) {
    cumw.resize(L);
    for (std::size_t v = 0; v < L; ++v) {
      double acc = 0.0;
      for (auto w : graph.weights(v)) cumw[v].push_back(acc += static_cast<double>(w));
    }
  }

  std::vector<std::vector<std::vector<LabelIndex>>> per_node(L);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v)
      walks_from(graph, static_cast<LabelIndex>(v), walks_per_node, walk_length, rng_seed,
                 weighted, cumw, per_node[v]);
  };
  threads = std::max<std::size_t>(1, std::min(threads, L));
  if (threads == 1) {
    work(0, L);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (L + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(work, std::min(L, t * chunk), std::min(L, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  }

  WalkCorpus corpus;
  corpus.num_nodes = L;
  corpus.walk_length = walk_length;
  corpus.walks_per_node = walks_per_node;
  corpus.walks.reserve(L * walks_per_node);
  std::vector<LabelIndex> order(L);
  std::iota(order.begin(), order.end(), LabelIndex{0});
  Rng order_rng(mix_seed(rng_seed, ~std::uint64_t{0}));
  for (std::size_t r = 0; r < walks_per_node; ++r) {
    order_rng.shuffle(order.begin(), order.end());
    for (auto v : order) corpus.walks.push_back(std::move(per_node[v][r]));
  }
  return corpus;
}

SkipGramModel init_skipgram(std::size_t num_nodes, const DeepWalkConfig& config) {
  SkipGramModel m{EmbeddingMatrix(config.dim, num_nodes), EmbeddingMatrix(config.dim, num_nodes)};
  Rng rng(mix_seed(config.rng_seed, 1));
  const double half = 0.5 / static_cast<double>(config.dim);
  for (double& v : m.input.flat()) v = rng.uniform(-half, half);
  return m;
}

namespace {

/// Draws nodes proportionally to frequency^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(const WalkCorpus& corpus) {
    std::vector<double> freq(corpus.num_nodes, 0.0);
    for (const auto& w : corpus.walks)
      for (auto v : w) freq[v] += 1.0;
    cumulative_.reserve(freq.size());
    double acc = 0.0;
    for (double f : freq) cumulative_.push_back(acc += std::pow(f, 0.75));
  }

  LabelIndex sample(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<LabelIndex>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Plain access for the deterministic path; relaxed atomics for the
// lock-free parallel path, where threads race on shared rows.
template <bool Shared>
double load(const double& x) {
  if constexpr (Shared)
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  else
    return x;
}

template <bool Shared>
void store(double& x, double v) {
  if constexpr (Shared)
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  else
    x = v;
}

template <bool Shared>
void train_pair(SkipGramModel& m, LabelIndex context, LabelIndex center,
                const NegativeSampler& sampler, std::size_t negatives, double lr, Rng& rng,
                std::vector<double>& l1, std::vector<double>& grad) {
  const std::size_t dim = m.input.dim();
  auto in = m.input.column(context);
  for (std::size_t r = 0; r < dim; ++r) l1[r] = load<Shared>(in[r]);
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t s = 0; s <= negatives; ++s) {
    LabelIndex target = center;
    double label = 1.0;
    if (s > 0) {
      target = sampler.sample(rng);
      if (target == center) continue;
      label = 0.0;
    }
    auto out = m.output.column(target);
    double f = 0.0;
    for (std::size_t r = 0; r < dim; ++r) f += l1[r] * load<Shared>(out[r]);
    const double g = (label - sigmoid(f)) * lr;
    for (std::size_t r = 0; r < dim; ++r) {
      const double o = load<Shared>(out[r]);
      grad[r] += g * o;
      store<Shared>(out[r], o + g * l1[r]);
    }
  }
  for (std::size_t r = 0; r < dim; ++r) store<Shared>(in[r], load<Shared>(in[r]) + grad[r]);
}

template <bool Shared>
void train_range(SkipGramModel& m, const WalkCorpus& corpus, const DeepWalkConfig& config,
                 const NegativeSampler& sampler, std::size_t begin, std::size_t end,
                 std::uint64_t seed, std::atomic<std::size_t>& processed, std::size_t total) {
  Rng rng(seed);
  std::vector<double> l1(config.dim), grad(config.dim);
  const double lr0 = config.initial_learning_rate;
  const double span = lr0 - config.min_learning_rate;
  const auto window = static_cast<std::ptrdiff_t>(config.window);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    for (std::size_t w = begin; w < end; ++w) {
      const auto& walk = corpus.walks[w];
      const auto len = static_cast<std::ptrdiff_t>(walk.size());
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        const double progress =
            static_cast<double>(processed.fetch_add(1, std::memory_order_relaxed)) /
            static_cast<double>(total);
        const double lr = lr0 - span * std::min(progress, 1.0);
        const auto lo = std::max<std::ptrdiff_t>(0, i - window);
        const auto hi = std::min(len - 1, i + window);
        for (auto c = lo; c <= hi; ++c) {
          if (c == i) continue;
          train_pair<Shared>(m, walk[c], walk[i], sampler, config.negative_samples, lr, rng, l1,
                             grad);
        }
      }
    }
  }
}

}  // namespace

SkipGramModel train_skipgram_model(const WalkCorpus& corpus, const DeepWalkConfig& config) {
  config.validate();
  if (corpus.walks.empty() || corpus.num_nodes == 0) throw UsageError("empty walk corpus");
  SkipGramModel model = init_skipgram(corpus.num_nodes, config);
  const NegativeSampler sampler(corpus);
  const std::size_t total = std::max<std::size_t>(1, corpus.num_tokens() * config.epochs);
  std::atomic<std::size_t> processed{0};

  const std::size_t threads = std::min(config.threads, corpus.walks.size());
  if (threads <= 1) {
    train_range<false>(model, corpus, config, sampler, 0, corpus.walks.size(),
                       mix_seed(config.rng_seed, 2), processed, total);
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = corpus.walks.size();
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        train_range<true>(model, corpus, config, sampler, std::min(n, t * chunk),
                          std::min(n, (t + 1) * chunk), mix_seed(config.rng_seed, 100 + t),
                          processed, total);
      });
    for (auto& th : pool) th.join();
  }
  return model;
}

EmbeddingMatrix train_skipgram(const WalkCorpus& corpus, const DeepWalkConfig& config) {
  return train_skipgram_model(corpus, config).input;
}

double skipgram_log_likelihood(const SkipGramModel& model, const WalkCorpus& corpus,
                               const DeepWalkConfig& config, std::uint64_t eval_seed) {
  const NegativeSampler sampler(corpus);
  Rng rng(eval_seed);
  const auto window = static_cast<std::ptrdiff_t>(config.window);
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& walk : corpus.walks) {
    const auto len = static_cast<std::ptrdiff_t>(walk.size());
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      const auto lo = std::max<std::ptrdiff_t>(0, i - window);
      const auto hi = std::min(len - 1, i + window);
      for (auto c = lo; c <= hi; ++c) {
        if (c == i) continue;
        const auto in = model.input.column(walk[c]);
        double ll = log_sigmoid(dot(in, model.output.column(walk[i])));
        for (std::size_t s = 0; s < config.negative_samples; ++s) {
          const auto neg = sampler.sample(rng);
          if (neg == walk[i]) continue;
          ll += log_sigmoid(-dot(in, model.output.column(neg)));
        }
        total += ll;
        ++pairs;
      }
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

EmbeddingMatrix embed_labels(const LabelGraph& graph, const DeepWalkConfig& config) {
  config.validate();
  const auto corpus = generate_walks(graph, config.walks_per_node, config.walk_length,
                                     mix_seed(config.rng_seed, 0), config.weighted_walks,
                                     config.threads);
  return train_skipgram(corpus, config);
}

}  // namespace dxml
