#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dxml/data_io.hpp"

namespace dxml {

/// Undirected label co-occurrence graph. Node i's neighbors are stored sorted
/// with the number of points in which both labels appear.
class LabelGraph {
 public:
  LabelGraph() = default;
  explicit LabelGraph(std::size_t num_nodes) : adjacency_(num_nodes), weights_(num_nodes) {}

  std::size_t num_nodes() const { return adjacency_.size(); }
  std::size_t num_edges() const;

  std::size_t degree(std::size_t node) const;
  std::span<const LabelIndex> neighbors(std::size_t node) const;
  std::span<const std::uint64_t> weights(std::size_t node) const;

  /// Co-occurrence count of {a, b}, or 0 if there is no edge.
  std::uint64_t weight(std::size_t a, std::size_t b) const;

  bool operator==(const LabelGraph&) const = default;

 private:
  friend LabelGraph build_label_graph(const Dataset&);
  friend LabelGraph read_adjacency(std::istream&, std::size_t);

  void check(std::size_t node) const;

  std::vector<std::vector<LabelIndex>> adjacency_;
  std::vector<std::vector<std::uint64_t>> weights_;
};

/// Edge {i, j} exists iff some point carries both labels; its weight counts
/// such points.
LabelGraph build_label_graph(const Dataset& data);

/// Writes one `i j weight` line per edge with i < j.
void write_adjacency(const LabelGraph& graph, std::ostream& out);

/// Reads `i j [weight]` lines (weight defaults to 1) describing a prior label
/// structure over `num_nodes` labels. Edges are symmetrized; repeated edges
/// accumulate weight; self-loops are rejected.
LabelGraph read_adjacency(std::istream& in, std::size_t num_nodes);

}  // namespace dxml
