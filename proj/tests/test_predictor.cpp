#include <random>
#include <sstream>

#include "doctest.h"
#include "dxml/error.hpp"
#include "dxml/predictor.hpp"
#include "oracles.hpp"

using namespace dxml;

namespace {

EmbeddingMatrix random_points(std::size_t dim, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  EmbeddingMatrix m(dim, n);
  for (double& v : m.flat()) v = g(rng);
  return m;
}

std::vector<double> random_query(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> q(dim);
  for (double& v : q) v = g(rng);
  return q;
}

std::vector<std::uint32_t> ids_of(const std::vector<Neighbor>& nb) {
  std::vector<std::uint32_t> out;
  for (const auto& n : nb) out.push_back(n.id);
  return out;
}

LabelScores rounded(LabelScores s) {
  for (auto& [l, v] : s) v = std::round(v * 1e12) / 1e12;
  return s;
}

// A random network with the training points embedded through it.
KnnModel random_knn_model(std::size_t d, std::size_t l, std::size_t n, std::size_t L,
                          std::size_t m, std::mt19937_64& rng) {
  KnnModel model;
  model.net = init_model({d, 12, l}, rng());
  model.num_labels = L;
  model.train_embeddings = EmbeddingMatrix(l, n);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    SparseVector x;
    for (std::uint32_t f = 0; f < d; ++f)
      if (rng() % 3 == 0) {
        x.indices.push_back(f);
        x.values.push_back(u(rng));
      }
    const auto e = forward(model.net, x);
    std::copy(e.begin(), e.end(), model.train_embeddings.column(i).begin());
    LabelSet y;
    for (std::uint32_t j = 0; j < L; ++j)
      if (rng() % 4 == 0) y.push_back(j);
    model.train_labels.push_back(y);
  }
  model.clusters = kmeans(model.train_embeddings, m, 50, rng()).index;
  return model;
}

SparseVector random_input(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  SparseVector x;
  for (std::uint32_t f = 0; f < d; ++f)
    if (rng() % 3 == 0) {
      x.indices.push_back(f);
      x.values.push_back(u(rng));
    }
  return x;
}

}  // namespace

TEST_CASE("knn: exhaustive and zero-distance cases") {
  std::mt19937_64 rng(1);
  const auto pts = random_points(3, 6, rng);
  const std::vector<std::uint32_t> members{1, 3, 4};
  const auto q = random_query(3, rng);
  const auto nb = knn_search(pts, members, q, 10);
  CHECK(nb.size() == 3);
  CHECK(ids_of(nb) == oracle::knn_sort_all(pts, members, q, 10));
  for (std::size_t i = 1; i < nb.size(); ++i) CHECK(nb[i - 1].distance <= nb[i].distance);

  const std::vector<double> at4(pts.column(4).begin(), pts.column(4).end());
  const auto self = knn_search(pts, members, at4, 2);
  CHECK(self[0].id == 4);
  CHECK(self[0].distance == 0.0);
}

TEST_CASE("knn: ties by ascending id") {
  EmbeddingMatrix pts(1, 4);
  pts.at(0, 0) = 1;
  pts.at(0, 1) = -1;
  pts.at(0, 2) = 1;
  pts.at(0, 3) = 5;
  const std::vector<double> q{0};
  CHECK(ids_of(knn_search(pts, q, 3)) == std::vector<std::uint32_t>{0, 1, 2});
}

TEST_CASE("knn matches the sort-all oracle") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t dim = 1 + rng() % 6, n = 1 + rng() % 50;
    auto pts = random_points(dim, n, rng);
    if (t % 4 == 0)
      for (double& v : pts.flat()) v = std::round(v);  // plenty of ties
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < n; ++i)
      if (rng() % 2) members.push_back(i);
    if (members.empty()) members.push_back(0);
    auto q = random_query(dim, rng);
    if (t % 4 == 0)
      for (double& v : q) v = std::round(v);
    const std::size_t k = 1 + rng() % 12;
    CHECK(ids_of(knn_search(pts, members, q, k)) == oracle::knn_sort_all(pts, members, q, k));
  }
}

TEST_CASE("aggregate examples") {
  const std::vector<LabelSet> labels{{1, 2}, {2}, {2, 3}};
  const std::vector<Neighbor> nb{{0, 0.1}, {1, 0.2}, {2, 0.3}};
  const auto s = aggregate_labels(nb, labels);
  REQUIRE(s.size() == 3);
  CHECK(s[0].first == 1);
  CHECK(s[0].second == doctest::Approx(1.0 / 3));
  CHECK(s[1].first == 2);
  CHECK(s[1].second == 1.0);
  CHECK(s[2].second == doctest::Approx(1.0 / 3));

  const std::vector<Neighbor> one{{2, 0.5}};
  CHECK(aggregate_labels(one, labels) == LabelScores{{2, 1.0}, {3, 1.0}});

  const auto sum = aggregate_labels(nb, labels, Weighting::uniform, Aggregation::sum);
  CHECK(sum == LabelScores{{1, 1.0}, {2, 3.0}, {3, 1.0}});

  const auto inv = aggregate_labels(nb, labels, Weighting::inverse_distance);
  double w0 = 1 / (0.1 + 1e-8), w1 = 1 / (0.2 + 1e-8), w2 = 1 / (0.3 + 1e-8);
  const double tot = w0 + w1 + w2;
  CHECK(inv[0].second == doctest::Approx(w0 / tot));
  CHECK(inv[1].second == doctest::Approx(1.0));
  CHECK(inv[2].second == doctest::Approx(w2 / tot));
}

TEST_CASE("top_p examples") {
  const LabelScores s{{1, 1.0 / 3}, {2, 1.0}, {3, 1.0 / 3}};
  CHECK(top_p(s, 2) == std::vector<LabelIndex>{2, 1});
  CHECK(top_p(s, 1) == std::vector<LabelIndex>{2});
  CHECK(top_p(s, 5) == std::vector<LabelIndex>{2, 1, 3});
  CHECK(top_p(s, 5, 6) == std::vector<LabelIndex>{2, 1, 3, 0, 4});
}

TEST_CASE("top_p matches the sort oracle") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t L = 1 + rng() % 30;
    std::vector<double> dense(L, 0.0);
    LabelScores s;
    for (std::uint32_t l = 0; l < L; ++l)
      if (rng() % 2) {
        dense[l] = double(1 + rng() % 5) / 5.0;
        s.push_back({l, dense[l]});
      }
    const std::size_t p = 1 + rng() % 10;
    auto expected = oracle::sort_all(dense);
    expected.resize(std::min(p, s.size()));
    CHECK(top_p(s, p) == expected);
  }
}

TEST_CASE("sum and average give the same ranking") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<LabelSet> labels;
    for (int i = 0; i < 20; ++i) {
      LabelSet y;
      for (std::uint32_t l = 0; l < 10; ++l)
        if (rng() % 3 == 0) y.push_back(l);
      labels.push_back(y);
    }
    std::vector<Neighbor> nb;
    const std::size_t k = 1 + rng() % 20;
    for (std::size_t i = 0; i < k; ++i) nb.push_back({std::uint32_t(i), 0.1 * double(i + 1)});
    for (auto w : {Weighting::uniform, Weighting::inverse_distance}) {
      const auto a = aggregate_labels(nb, labels, w, Aggregation::average);
      const auto b = aggregate_labels(nb, labels, w, Aggregation::sum);
      CHECK(top_p(a, 10) == top_p(b, 10));
      if (w == Weighting::uniform)
        for (auto& [l, v] : a) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
    }
  }
}

TEST_CASE("predict: single training point") {
  KnnModel model;
  model.net = init_model({4, 3, 2}, 1);
  model.train_embeddings = EmbeddingMatrix(2, 1, 0.5);
  model.train_labels = {{1, 3}};
  model.num_labels = 4;
  model.clusters = kmeans(model.train_embeddings, 1, 10, 1).index;
  const auto p = predict(model, {{0, 2}, {1.0, 2.0}}, {1, 5});
  CHECK(p.scores == LabelScores{{1, 1.0}, {3, 1.0}});
  CHECK(p.top_labels == std::vector<LabelIndex>{1, 3});
  CHECK(p.neighbors_found == 1);
  CHECK_THROWS_AS(predict(model, {{4}, {1.0}}, {1, 5}), DataError);
}

TEST_CASE("predict with one cluster is global k-NN") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto model = random_knn_model(15, 4, 60, 8, 1, rng);
    for (int q = 0; q < 10; ++q) {
      const auto x = random_input(15, rng);
      const auto f = forward(model.net, x);
      const PredictOptions opt{1 + rng() % 12, 5};
      const auto nb = knn_search(model.train_embeddings, f, opt.k);
      const auto expected = aggregate_labels(nb, model.train_labels);
      const auto p = predict(model, x, opt);
      CHECK(p.scores == expected);
      CHECK(p.top_labels == top_p(expected, opt.p));
    }
  }
}

TEST_CASE("predict with clusters agrees when the neighbors are contained") {
  std::mt19937_64 rng(6);
  std::size_t contained = 0;
  for (int t = 0; t < 30; ++t) {
    const auto model = random_knn_model(15, 4, 80, 8, 4, rng);
    for (int q = 0; q < 10; ++q) {
      const auto x = random_input(15, rng);
      const auto f = forward(model.net, x);
      const std::size_t k = 1 + rng() % 5;
      const auto global = oracle::knn_sort_all(model.train_embeddings,
                                               [&] {
                                                 std::vector<std::uint32_t> all(80);
                                                 for (std::uint32_t i = 0; i < 80; ++i) all[i] = i;
                                                 return all;
                                               }(),
                                               f, k);
      const auto p = predict(model, x, {k, 5});
      bool inside = true;
      for (auto id : global) inside &= model.clusters.assignments[id] == p.cluster;
      if (!inside) continue;
      ++contained;
      std::vector<Neighbor> nb;
      for (auto id : global) nb.push_back({id, 0.0});
      CHECK(rounded(p.scores) == rounded(aggregate_labels(nb, model.train_labels)));
    }
  }
  MESSAGE("contained queries: " << contained);
  CHECK(contained > 0);
}

TEST_CASE("predict is deterministic") {
  std::mt19937_64 rng(7);
  const auto model = random_knn_model(10, 3, 40, 6, 3, rng);
  const auto x = random_input(10, rng);
  CHECK(predict(model, x, {}) == predict(model, x, {}));
}

TEST_CASE("prediction lines round trip") {
  const std::vector<LabelScores> preds{
      {{0, 0.1}, {3, 0.7}, {5, 0.7}}, {}, {{2, 1.0 / 3}}};
  std::ostringstream out;
  for (const auto& p : preds) write_prediction_line(p, out);
  CHECK(out.str() == "3:0.7\t5:0.7\t0:0.1\n\n2:0.3333333333333333\n");
  std::istringstream in(out.str());
  const auto back = read_predictions(in);
  REQUIRE(back.size() == 3);
  CHECK(back[0] == rank_scores(preds[0]));
  CHECK(back[1].empty());
  CHECK(back[2] == preds[2]);
  std::istringstream bad("1:x\n");
  CHECK_THROWS_AS(read_predictions(bad), DataError);
}
