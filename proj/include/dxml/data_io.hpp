#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dxml {

using FeatureIndex = std::uint32_t;
using LabelIndex = std::uint32_t;

/// Sparse feature vector: strictly increasing indices, no stored zeros.
struct SparseVector {
  std::vector<FeatureIndex> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  bool operator==(const SparseVector&) const = default;
};

/// Sorted, duplicate-free label indices. May be empty.
using LabelSet = std::vector<LabelIndex>;

struct DataPoint {
  SparseVector features;
  LabelSet labels;
  bool operator==(const DataPoint&) const = default;
};

struct Dataset {
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
  std::vector<DataPoint> points;

  std::size_t num_points() const { return points.size(); }
  bool operator==(const Dataset&) const = default;
};

struct DatasetStats {
  std::size_t num_points = 0;
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
  std::size_t num_unlabeled = 0;
  double avg_labels_per_point = 0.0;
  double avg_points_per_label = 0.0;
  double avg_features_per_point = 0.0;
};

enum class FeatureNorm { none, unit_l2 };

/// Parses the Extreme Classification Repository text format:
///
///     n d L
///     l1,l2,... i1:v1 i2:v2 ...
///
/// Indices are 0-based. The label field may be empty, in which case the line
/// starts with whitespace. Feature indices are sorted on read; duplicates,
/// out-of-range indices and malformed tokens raise DataError with the line
/// number. Explicit zero values are dropped.
Dataset parse_repo_file(std::istream& in);
Dataset read_repo_file(const std::string& path);

/// Writes the same format. Values use the shortest representation that reads
/// back to the identical double.
void write_repo_file(const Dataset& data, std::ostream& out);
void write_repo_file(const Dataset& data, const std::string& path);

Dataset normalize_features(Dataset data, FeatureNorm scheme);
SparseVector normalize_features(SparseVector x, FeatureNorm scheme);

/// Throws DataError if any invariant of the dataset is violated.
void validate(const Dataset& data);

DatasetStats compute_stats(const Dataset& data);

/// Reads one column of a repository split file (whitespace-separated, one row
/// per selected point, 1-based point ids) and returns 0-based ids.
std::vector<std::size_t> read_split_column(std::istream& in, std::size_t column);

/// Points of `data` at `ids`, in that order.
Dataset subset(const Dataset& data, std::span<const std::size_t> ids);

FeatureNorm parse_feature_norm(const std::string& name);
std::string to_string(FeatureNorm scheme);

}  // namespace dxml
