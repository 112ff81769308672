#include "dxml/cluster.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "dxml/rng.hpp"

namespace dxml {

std::size_t nearest_cluster(const EmbeddingMatrix& centers, std::span<const double> query) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.count(); ++c) {
    const double d = squared_distance(centers.column(c), query);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::vector<std::uint32_t>> members_from_assignments(
    std::span<const std::uint32_t> assignments, std::size_t num_clusters) {
  std::vector<std::vector<std::uint32_t>> members(num_clusters);
  for (std::size_t i = 0; i < assignments.size(); ++i)
    members.at(assignments[i]).push_back(static_cast<std::uint32_t>(i));
  return members;
}

double within_cluster_ss(const EmbeddingMatrix& points, const ClusterIndex& index) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.count(); ++i)
    s += squared_distance(points.column(i), index.centers.column(index.assignments[i]));
  return s;
}

namespace {

EmbeddingMatrix seed_plus_plus(const EmbeddingMatrix& points, std::size_t m, Rng& rng) {
  const std::size_t n = points.count();
  EmbeddingMatrix centers(points.dim(), m);
  auto copy = [&](std::size_t c, std::size_t i) {
    const auto src = points.column(i);
    std::copy(src.begin(), src.end(), centers.column(c).begin());
  };
  copy(0, rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.column(i), centers.column(0));
  for (std::size_t c = 1; c < m; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);  // all points coincide with chosen centers
    }
    copy(c, pick);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.column(i), centers.column(c)));
  }
  return centers;
}

void update_centers(const EmbeddingMatrix& points, ClusterIndex& index) {
  const std::size_t dim = points.dim();
  for (std::size_t c = 0; c < index.num_clusters(); ++c) {
    auto center = index.centers.column(c);
    std::fill(center.begin(), center.end(), 0.0);
    for (auto i : index.members[c]) {
      const auto p = points.column(i);
      for (std::size_t r = 0; r < dim; ++r) center[r] += p[r];
    }
    const double inv = 1.0 / static_cast<double>(index.members[c].size());
    for (double& v : center) v *= inv;
  }
}

/// Moves the farthest point (from a cluster of size >= 2) into each empty cluster.
void repair_empty(const EmbeddingMatrix& points, ClusterIndex& index) {
  for (std::size_t c = 0; c < index.num_clusters(); ++c) {
    if (!index.members[c].empty()) continue;
    std::size_t far = points.count();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.count(); ++i) {
      const auto a = index.assignments[i];
      if (index.members[a].size() < 2) continue;
      const double d = squared_distance(points.column(i), index.centers.column(a));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    index.assignments[far] = static_cast<std::uint32_t>(c);
    const auto src = points.column(far);
    std::copy(src.begin(), src.end(), index.centers.column(c).begin());
    index.members = members_from_assignments(index.assignments, index.num_clusters());
  }
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& points, std::size_t m, std::size_t max_iters,
                    std::uint64_t rng_seed) {
  const std::size_t n = points.count();
  if (m == 0) throw std::invalid_argument("kmeans: m must be at least 1");
  if (n == 0) throw std::invalid_argument("kmeans: no points");
  if (m > n)
    throw std::invalid_argument("kmeans: m=" + std::to_string(m) + " exceeds the number of points (" +
                                std::to_string(n) + ")");
  Rng rng(rng_seed);
  KMeansResult result;
  ClusterIndex& index = result.index;
  index.centers = seed_plus_plus(points, m, rng);
  index.assignments.assign(n, 0);

  auto assign = [&]() {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::uint32_t>(nearest_cluster(index.centers, points.column(i)));
      changed |= c != index.assignments[i];
      index.assignments[i] = c;
    }
    index.members = members_from_assignments(index.assignments, m);
    return changed;
  };

  assign();
  repair_empty(points, index);
  result.objective.push_back(within_cluster_ss(points, index));
  while (result.iterations < max_iters) {
    update_centers(points, index);
    ++result.iterations;
    result.objective.push_back(within_cluster_ss(points, index));
    const bool changed = assign();
    repair_empty(points, index);
    if (!changed) break;
  }
  // Centers must be the means of the final members.
  update_centers(points, index);
  const double final_ss = within_cluster_ss(points, index);
  if (final_ss != result.objective.back()) result.objective.push_back(final_ss);
  return result;
}

}  // namespace dxml
