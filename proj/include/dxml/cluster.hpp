#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dxml/dense.hpp"

namespace dxml {

/// A partition of embedded training points with one center per cluster.
struct ClusterIndex {
  EmbeddingMatrix centers;                         // dim x m
  std::vector<std::uint32_t> assignments;          // per point
  std::vector<std::vector<std::uint32_t>> members;  // per cluster, ascending

  std::size_t num_clusters() const { return centers.count(); }
  bool operator==(const ClusterIndex&) const = default;
};

struct KMeansResult {
  ClusterIndex index;
  /// Within-cluster sum of squares: after the first assignment, then after
  /// every center update.
  std::vector<double> objective;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding over the columns of `points`.
/// Stops when assignments no longer change or after max_iters updates. A
/// cluster that empties is reseeded with the point farthest from its current
/// center (taken from a cluster with at least two members). Throws
/// std::invalid_argument if m is 0 or exceeds the number of points.
KMeansResult kmeans(const EmbeddingMatrix& points, std::size_t m, std::size_t max_iters,
                    std::uint64_t rng_seed);

/// Index of the nearest center (Euclidean); ties go to the lowest index.
std::size_t nearest_cluster(const EmbeddingMatrix& centers, std::span<const double> query);
inline std::size_t nearest_cluster(const ClusterIndex& index, std::span<const double> query) {
  return nearest_cluster(index.centers, query);
}

/// Rebuilds member lists from assignments.
std::vector<std::vector<std::uint32_t>> members_from_assignments(
    std::span<const std::uint32_t> assignments, std::size_t num_clusters);

double within_cluster_ss(const EmbeddingMatrix& points, const ClusterIndex& index);

}  // namespace dxml
