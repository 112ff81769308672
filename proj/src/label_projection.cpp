#include "dxml/label_projection.hpp"

#include <cmath>
#include <string>

namespace dxml {

LabelTarget project_label_vector(const EmbeddingMatrix& label_embeddings, const LabelSet& labels,
                                 bool normalize) {
  if (labels.empty()) throw UnlabeledPointError();
  const std::size_t dim = label_embeddings.dim();
  LabelTarget target(dim, 0.0);
  for (auto j : labels) {
    if (j >= label_embeddings.count())
      throw std::out_of_range("label " + std::to_string(j) + " has no embedding column");
    const auto col = label_embeddings.column(j);
    for (std::size_t r = 0; r < dim; ++r) target[r] += col[r];
  }
  const double inv_count = 1.0 / static_cast<double>(labels.size());
  for (double& v : target) v *= inv_count;
  const double norm = norm2(target);
  if (norm < 1e-12) throw DegenerateTargetError();
  if (normalize)
    for (double& v : target) v /= norm;
  return target;
}

ProjectedTargets project_dataset(const EmbeddingMatrix& label_embeddings, const Dataset& data,
                                 bool normalize) {
  ProjectedTargets out;
  for (std::size_t i = 0; i < data.num_points(); ++i) {
    const auto& labels = data.points[i].labels;
    if (labels.empty()) {
      ++out.skipped_unlabeled;
      continue;
    }
    try {
      out.targets.push_back(project_label_vector(label_embeddings, labels, normalize));
      out.point_ids.push_back(i);
    } catch (const DegenerateTargetError&) {
      ++out.skipped_degenerate;
    }
  }
  return out;
}

}  // namespace dxml
