#include "dxml/label_graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "dxml/error.hpp"

namespace dxml {

std::size_t LabelGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& nbrs : adjacency_) total += nbrs.size();
  return total / 2;
}

void LabelGraph::check(std::size_t node) const {
  if (node >= adjacency_.size())
    throw std::out_of_range("label node " + std::to_string(node) + " out of range (L=" +
                            std::to_string(adjacency_.size()) + ")");
}

std::size_t LabelGraph::degree(std::size_t node) const {
  check(node);
  return adjacency_[node].size();
}

std::span<const LabelIndex> LabelGraph::neighbors(std::size_t node) const {
  check(node);
  return adjacency_[node];
}

std::span<const std::uint64_t> LabelGraph::weights(std::size_t node) const {
  check(node);
  return weights_[node];
}

std::uint64_t LabelGraph::weight(std::size_t a, std::size_t b) const {
  check(a);
  check(b);
  const auto& nbrs = adjacency_[a];
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), static_cast<LabelIndex>(b));
  if (it == nbrs.end() || *it != b) return 0;
  return weights_[a][static_cast<std::size_t>(it - nbrs.begin())];
}

namespace {

using Accumulator = std::vector<std::unordered_map<LabelIndex, std::uint64_t>>;

void finalize(const Accumulator& acc, std::vector<std::vector<LabelIndex>>& adjacency,
              std::vector<std::vector<std::uint64_t>>& weights) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    std::vector<std::pair<LabelIndex, std::uint64_t>> row(acc[i].begin(), acc[i].end());
    std::sort(row.begin(), row.end());
    adjacency[i].reserve(row.size());
    weights[i].reserve(row.size());
    for (const auto& [j, w] : row) {
      adjacency[i].push_back(j);
      weights[i].push_back(w);
    }
  }
}

}  // namespace

LabelGraph build_label_graph(const Dataset& data) {
  LabelGraph graph(data.num_labels);
  Accumulator acc(data.num_labels);
  for (const auto& p : data.points) {
    const auto& y = p.labels;
    for (std::size_t a = 0; a < y.size(); ++a)
      for (std::size_t b = a + 1; b < y.size(); ++b) {
        if (y[a] == y[b]) continue;
        ++acc[y[a]][y[b]];
        ++acc[y[b]][y[a]];
      }
  }
  finalize(acc, graph.adjacency_, graph.weights_);
  return graph;
}

void write_adjacency(const LabelGraph& graph, std::ostream& out) {
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    const auto nbrs = graph.neighbors(i);
    const auto w = graph.weights(i);
    for (std::size_t t = 0; t < nbrs.size(); ++t)
      if (i < nbrs[t]) out << i << ' ' << nbrs[t] << ' ' << w[t] << '\n';
  }
}

LabelGraph read_adjacency(std::istream& in, std::size_t num_nodes) {
  LabelGraph graph(num_nodes);
  Accumulator acc(num_nodes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a)) continue;  // blank line
    std::uint64_t w = 1;
    if (!(ls >> b))
      throw DataError("adjacency line " + std::to_string(line_no) + ": expected 'i j [weight]'");
    if (!(ls >> w)) w = 1;
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes ||
        static_cast<std::size_t>(b) >= num_nodes)
      throw DataError("adjacency line " + std::to_string(line_no) + ": node out of range");
    if (a == b) throw DataError("adjacency line " + std::to_string(line_no) + ": self-loop");
    if (w == 0) continue;
    acc[a][static_cast<LabelIndex>(b)] += w;
    acc[b][static_cast<LabelIndex>(a)] += w;
  }
  finalize(acc, graph.adjacency_, graph.weights_);
  return graph;
}

}  // namespace dxml
