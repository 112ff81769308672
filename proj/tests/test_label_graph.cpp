#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "dxml/error.hpp"
#include "dxml/label_graph.hpp"
#include "oracles.hpp"

using namespace dxml;

namespace {

Dataset with_labels(std::size_t L, const std::vector<LabelSet>& sets) {
  Dataset d;
  d.num_features = 1;
  d.num_labels = L;
  for (const auto& s : sets) d.points.push_back({{}, s});
  return d;
}

void check_invariants(const LabelGraph& g) {
  std::size_t degree_sum = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto nb = g.neighbors(i);
    CHECK(g.degree(i) == nb.size());
    CHECK(g.weights(i).size() == nb.size());
    degree_sum += nb.size();
    for (std::size_t k = 0; k < nb.size(); ++k) {
      CHECK(nb[k] != i);
      if (k) CHECK(nb[k - 1] < nb[k]);
      CHECK(g.weight(nb[k], i) == g.weights(i)[k]);
      const auto back = g.neighbors(nb[k]);
      CHECK(std::find(back.begin(), back.end(), i) != back.end());
    }
  }
  CHECK(degree_sum % 2 == 0);
  CHECK(degree_sum == 2 * g.num_edges());
}

}  // namespace

TEST_CASE("chain example") {
  const auto g = build_label_graph(with_labels(3, {{0, 1}, {1, 2}}));
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.weight(0, 1) == 1);
  CHECK(g.weight(1, 2) == 1);
  CHECK(g.weight(0, 2) == 0);
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(0) == 1);
  check_invariants(g);
}

TEST_CASE("isolated nodes and range errors") {
  const auto g = build_label_graph(with_labels(5, {{0, 1}}));
  CHECK(g.num_nodes() == 5);
  CHECK(g.degree(4) == 0);
  CHECK(g.neighbors(4).empty());
  CHECK_THROWS_AS(g.degree(5), std::out_of_range);
  CHECK_THROWS_AS(g.neighbors(5), std::out_of_range);
}

TEST_CASE("at most one label per point gives no edges") {
  const auto g = build_label_graph(with_labels(4, {{0}, {1}, {}, {3}, {0}}));
  CHECK(g.num_edges() == 0);
  CHECK(g.num_nodes() == 4);
  CHECK(build_label_graph(with_labels(6, {})).num_edges() == 0);
}

TEST_CASE("weights count co-occurring points") {
  const auto g = build_label_graph(with_labels(3, {{0, 1}, {0, 1, 2}, {0, 1}}));
  CHECK(g.weight(0, 1) == 3);
  CHECK(g.weight(1, 0) == 3);
  CHECK(g.weight(0, 2) == 1);
}

TEST_CASE("agrees with the pairwise oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t L = 1 + rng() % 30;
    std::vector<LabelSet> sets;
    const std::size_t n = rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      LabelSet s;
      for (std::uint32_t l = 0; l < L; ++l)
        if (rng() % 6 == 0) s.push_back(l);
      sets.push_back(s);
    }
    const auto data = with_labels(L, sets);
    const auto g = build_label_graph(data);
    const auto expected = oracle::label_pairs(data);
    CHECK(g.num_edges() == expected.size());
    for (std::uint32_t a = 0; a < L; ++a)
      for (std::uint32_t b = a + 1; b < L; ++b) {
        const auto it = expected.find({a, b});
        CHECK(g.weight(a, b) == (it == expected.end() ? 0 : it->second));
      }
    check_invariants(g);
  }
}

TEST_CASE("adjacency export and import") {
  const auto g = build_label_graph(with_labels(4, {{0, 1}, {1, 2}, {1, 2}}));
  std::ostringstream out;
  write_adjacency(g, out);
  CHECK(out.str() == "0 1 1\n1 2 2\n");
  std::istringstream in(out.str());
  CHECK(read_adjacency(in, 4) == g);

  std::istringstream unweighted("2 0\n0 2\n1 3\n");
  const auto h = read_adjacency(unweighted, 4);
  CHECK(h.weight(0, 2) == 2);
  CHECK(h.weight(3, 1) == 1);
  check_invariants(h);

  std::istringstream loop("1 1\n");
  CHECK_THROWS_AS(read_adjacency(loop, 4), DataError);
  std::istringstream range("0 4\n");
  CHECK_THROWS_AS(read_adjacency(range, 4), DataError);
}
