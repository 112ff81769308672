#pragma once

#include <stdexcept>
#include <vector>

#include "dxml/data_io.hpp"
#include "dxml/dense.hpp"

namespace dxml {

/// The embedding-space target of a label set.
using LabelTarget = std::vector<double>;

class UnlabeledPointError : public std::invalid_argument {
 public:
  UnlabeledPointError() : std::invalid_argument("unlabeled point: empty label set") {}
};

class DegenerateTargetError : public std::domain_error {
 public:
  DegenerateTargetError() : std::domain_error("degenerate target: label average has zero norm") {}
};

/// Mean of the label columns of V, then l2-normalized unless `normalize` is
/// false. Throws UnlabeledPointError for an empty set and
/// DegenerateTargetError if the mean has norm below 1e-12.
LabelTarget project_label_vector(const EmbeddingMatrix& label_embeddings, const LabelSet& labels,
                                 bool normalize = true);

struct ProjectedTargets {
  std::vector<std::size_t> point_ids;  // dataset rows that received a target
  std::vector<LabelTarget> targets;
  std::size_t skipped_unlabeled = 0;
  std::size_t skipped_degenerate = 0;
};

/// Targets for every labeled point; unlabeled and degenerate points are
/// skipped and counted.
ProjectedTargets project_dataset(const EmbeddingMatrix& label_embeddings, const Dataset& data,
                                 bool normalize = true);

}  // namespace dxml
