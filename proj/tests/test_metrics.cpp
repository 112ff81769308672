#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dxml/error.hpp"
#include "dxml/metrics.hpp"
#include "oracles.hpp"

using namespace dxml;

namespace {

std::vector<LabelIndex> ranking_of(std::initializer_list<LabelIndex> v) { return v; }

Dataset test_set(const std::vector<LabelSet>& sets, std::size_t L) {
  Dataset d;
  d.num_features = 1;
  d.num_labels = L;
  for (const auto& s : sets) d.points.push_back({{}, s});
  return d;
}

LabelScores scores_for(std::initializer_list<LabelIndex> ranked) {
  LabelScores s;
  double v = 1.0;
  for (auto l : ranked) {
    s.push_back({l, v});
    v *= 0.5;
  }
  return s;
}

}  // namespace

TEST_CASE("rank_k examples") {
  const std::vector<double> s{0.1, 0.9, 0.5};
  CHECK(rank_k(s, 2) == ranking_of({1, 2}));
  const std::vector<double> eq{0.3, 0.3, 0.3};
  CHECK(rank_k(eq, 2) == ranking_of({0, 1}));
  CHECK(rank_k(s, 10).size() == 3);
}

TEST_CASE("rank_k matches the sort oracle") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> s(1 + rng() % 40);
    for (double& v : s) v = double(rng() % 7);
    const std::size_t k = 1 + rng() % 45;
    auto expected = oracle::sort_all(s);
    expected.resize(std::min(k, s.size()));
    CHECK(rank_k(s, k) == expected);
  }
}

TEST_CASE("precision examples") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  CHECK(precision_at_k(s, {0, 1, 2}, 3) == 1.0);
  CHECK(precision_at_k(s, {}, 3) == 0.0);
  CHECK(precision_at_k(s, {0, 2}, 3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ndcg examples") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  CHECK(dcg_from_ranking(rank_k(s, 3), {0, 2}, 3) == doctest::Approx(1.5));
  CHECK(ndcg_at_k(s, {0, 2}, 3) == doctest::Approx(0.91972).epsilon(1e-5));
  CHECK(ndcg_at_k(s, {0, 1, 2, 3}, 3) == 1.0);
  CHECK(ndcg_at_k(s, {}, 3) == 0.0);
  CHECK(ndcg_at_k(s, {0}, 5) == 1.0);
}

TEST_CASE("nDCG@1 equals P@1") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> s(1 + rng() % 10);
    for (double& v : s) v = double(rng() % 4);
    LabelSet y;
    for (std::uint32_t l = 0; l < s.size(); ++l)
      if (rng() % 3 == 0) y.push_back(l);
    CHECK(ndcg_at_k(s, y, 1) == precision_at_k(s, y, 1));
  }
}

TEST_CASE("ranking metrics count missing positions as misses") {
  CHECK(precision_from_ranking(ranking_of({3}), {3, 4}, 3) == doctest::Approx(1.0 / 3.0));
  CHECK(ndcg_from_ranking(ranking_of({3}), {3, 4}, 3) ==
        doctest::Approx(1.0 / (1.0 + 1.0 / std::log2(3.0))));
  CHECK(precision_from_ranking(ranking_of({}), {1}, 1) == 0.0);
}

TEST_CASE("oracle agreement and monotone invariance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t L = 1 + rng() % 25;
    std::vector<double> s(L);
    const int mode = t % 3;
    for (double& v : s) v = mode == 0 ? u(rng) : mode == 1 ? double(rng() % 3) : 0.25;
    LabelSet y;
    for (std::uint32_t l = 0; l < L; ++l)
      if (rng() % 4 == 0) y.push_back(l);
    const std::size_t k = 1 + rng() % 8;
    const double p = precision_at_k(s, y, k), n = ndcg_at_k(s, y, k);
    CHECK(p == oracle::brute_precision(s, y, k));
    CHECK(n == oracle::brute_ndcg(s, y, k));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(n >= 0.0);
    CHECK(n <= 1.0 + 1e-15);
    std::vector<double> ts(L);
    for (std::size_t i = 0; i < L; ++i) ts[i] = std::exp(3 * s[i]) + 7;
    CHECK(precision_at_k(ts, y, k) == p);
    CHECK(ndcg_at_k(ts, y, k) == n);
  }
}

TEST_CASE("evaluate: averaging") {
  const std::vector<LabelScores> preds{scores_for({0}), scores_for({1})};
  const auto test = test_set({{0}, {0}}, 3);
  const std::vector<std::size_t> ks{1};
  const auto r = evaluate(preds, test, ks);
  CHECK(format_percent(r.precision[0]) == "50.00");
  CHECK(r.ndcg[0] == r.precision[0]);
}

TEST_CASE("evaluate: perfect predictions") {
  const auto test = test_set({{0, 1, 2, 3, 4}, {2, 3, 4, 5, 6, 7}}, 8);
  const std::vector<LabelScores> preds{scores_for({0, 1, 2, 3, 4}), scores_for({7, 6, 5, 4, 3, 2})};
  const std::vector<std::size_t> ks{1, 3, 5};
  const auto r = evaluate(preds, test, ks);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(format_percent(r.precision[i]) == "100.00");
    CHECK(format_percent(r.ndcg[i]) == "100.00");
  }
}

TEST_CASE("evaluate: unlabeled points and count mismatch") {
  const auto test = test_set({{0}, {}}, 2);
  const std::vector<LabelScores> preds{scores_for({0}), scores_for({1})};
  const std::vector<std::size_t> ks{1};
  CHECK(evaluate(preds, test, ks).precision[0] == 0.5);
  const auto skipped = evaluate(preds, test, ks, true);
  CHECK(skipped.precision[0] == 1.0);
  CHECK(skipped.num_points == 1);
  const std::vector<LabelScores> one{scores_for({0})};
  CHECK_THROWS_AS(evaluate(one, test, ks), DataError);
}

TEST_CASE("evaluate matches a per-point brute force") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t L = 2 + rng() % 20, n = 1 + rng() % 30;
    std::vector<LabelScores> preds;
    std::vector<std::vector<double>> dense;
    std::vector<LabelSet> sets;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(L, 0.0);
      LabelScores ls;
      for (std::uint32_t l = 0; l < L; ++l)
        if (rng() % 2) {
          s[l] = u(rng);
          ls.push_back({l, s[l]});
        }
      std::sort(ls.begin(), ls.end(), [](auto& a, auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      // dense oracle: unscored labels rank after every scored one
      for (auto& v : s) v = v == 0.0 ? -1.0 : v;
      dense.push_back(s);
      preds.push_back(ls);
      LabelSet y;
      for (std::uint32_t l = 0; l < L; ++l)
        if (rng() % 4 == 0) y.push_back(l);
      sets.push_back(y);
    }
    const std::vector<std::size_t> ks{1, 3, 5};
    const auto r = evaluate(preds, test_set(sets, L), ks);
    for (std::size_t ki = 0; ki < 3; ++ki) {
      double p = 0, g = 0;
      for (std::size_t i = 0; i < n; ++i) {
        // a hit needs a scored label, so unscored tail positions never count
        std::vector<double> masked = dense[i];
        LabelSet y;
        for (auto l : sets[i])
          if (masked[l] >= 0) y.push_back(l);
        p += oracle::brute_precision(masked, y, ks[ki]);
        if (!sets[i].empty()) {
          double dcg = 0, ideal = 0;
          const auto order = oracle::sort_all(masked);
          for (std::size_t l = 0; l < ks[ki] && l < order.size(); ++l)
            if (masked[order[l]] >= 0 && std::binary_search(sets[i].begin(), sets[i].end(), order[l]))
              dcg += 1 / std::log2(double(l) + 2);
          for (std::size_t l = 0; l < std::min(ks[ki], sets[i].size()); ++l)
            ideal += 1 / std::log2(double(l) + 2);
          g += dcg / ideal;
        }
      }
      CHECK(std::abs(r.precision[ki] - p / double(n)) <= 1e-10);
      CHECK(std::abs(r.ndcg[ki] - g / double(n)) <= 1e-10);
    }
  }
}

TEST_CASE("report formatting") {
  MetricReport r;
  r.ks = {1, 3};
  r.precision = {0.66031, 0.4};
  r.ndcg = {0.66031, 0.123456};
  r.num_points = 10;
  CHECK(format_key_values(r) == "P@1=66.03\nP@3=40.00\nnDCG@1=66.03\nnDCG@3=12.35\n");
  const auto table = format_table(r);
  CHECK(table.find("66.03") != std::string::npos);
  CHECK(table.find("12.35") != std::string::npos);
  CHECK(format_percent(1.0) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
}
