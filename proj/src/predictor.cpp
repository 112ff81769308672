#include "dxml/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

#include "dxml/error.hpp"

namespace dxml {

std::vector<Neighbor> knn_search(const EmbeddingMatrix& points,
                                 std::span<const std::uint32_t> candidates,
                                 std::span<const double> query, std::size_t k) {
  if (k == 0) throw std::invalid_argument("knn_search: k must be at least 1");
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(candidates.size());
  for (auto id : candidates) scored.emplace_back(squared_distance(points.column(id), query), id);
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({scored[i].second, std::sqrt(scored[i].first)});
  return out;
}

std::vector<Neighbor> knn_search(const EmbeddingMatrix& points, std::span<const double> query,
                                 std::size_t k) {
  std::vector<std::uint32_t> all(points.count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  return knn_search(points, all, query, k);
}

LabelScores aggregate_labels(std::span<const Neighbor> neighbors,
                             std::span<const LabelSet> train_labels, Weighting weighting,
                             Aggregation aggregation) {
  if (neighbors.empty()) return {};
  std::vector<double> weight(neighbors.size(), 1.0);
  if (weighting == Weighting::inverse_distance)
    for (std::size_t i = 0; i < neighbors.size(); ++i)
      weight[i] = 1.0 / (neighbors[i].distance + 1e-8);
  std::unordered_map<LabelIndex, double> acc;
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    for (auto label : train_labels[neighbors[i].id]) acc[label] += weight[i];
  LabelScores scores(acc.begin(), acc.end());
  std::sort(scores.begin(), scores.end());
  if (aggregation == Aggregation::average) {
    double total = 0.0;
    for (double w : weight) total += w;
    for (auto& s : scores) s.second /= total;
  }
  return scores;
}

LabelScores rank_scores(LabelScores scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return scores;
}

std::vector<LabelIndex> top_p(const LabelScores& scores, std::size_t p,
                              std::size_t pad_to_labels) {
  if (p == 0) throw std::invalid_argument("top_p: p must be at least 1");
  const auto ranked = rank_scores(scores);
  std::vector<LabelIndex> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < p; ++i)
    if (ranked[i].second > 0.0) out.push_back(ranked[i].first);
  if (pad_to_labels > 0 && out.size() < p) {
    std::vector<char> used(pad_to_labels, 0);
    for (auto l : out)
      if (l < pad_to_labels) used[l] = 1;
    for (std::size_t l = 0; l < pad_to_labels && out.size() < p; ++l)
      if (!used[l]) out.push_back(static_cast<LabelIndex>(l));
  }
  return out;
}

Prediction predict(const KnnModel& model, const SparseVector& x, const PredictOptions& options) {
  const std::size_t d = model.net.w1.rows();
  for (auto i : x.indices)
    if (i >= d)
      throw DataError("feature index " + std::to_string(i) + " >= model input dimension " +
                      std::to_string(d));
  const auto embedded = forward(model.net, x);
  Prediction pred;
  pred.cluster = nearest_cluster(model.clusters, embedded);
  const auto neighbors = knn_search(model.train_embeddings, model.clusters.members[pred.cluster],
                                    embedded, options.k);
  pred.neighbors_found = neighbors.size();
  pred.scores = aggregate_labels(neighbors, model.train_labels, options.weighting,
                                 options.aggregation);
  pred.top_labels = top_p(pred.scores, options.p);
  return pred;
}

void write_prediction_line(const LabelScores& scores, std::ostream& out) {
  const auto ranked = rank_scores(scores);
  std::string line;
  char buf[64];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i) line += '\t';
    line += std::to_string(ranked[i].first);
    line += ':';
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), ranked[i].second);
    line.append(buf, ptr);
  }
  line += '\n';
  out << line;
}

std::vector<LabelScores> read_predictions(std::istream& in) {
  std::vector<LabelScores> all;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LabelScores scores;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == '\t' || line[pos] == ' ')) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != '\t' && line[end] != ' ') ++end;
      const std::string_view tok(line.data() + pos, end - pos);
      const auto colon = tok.find(':');
      LabelIndex label = 0;
      double score = 0.0;
      bool ok = colon != std::string_view::npos;
      if (ok) {
        auto r1 = std::from_chars(tok.data(), tok.data() + colon, label);
        auto r2 = std::from_chars(tok.data() + colon + 1, tok.data() + tok.size(), score);
        ok = r1.ec == std::errc() && r1.ptr == tok.data() + colon && r2.ec == std::errc() &&
             r2.ptr == tok.data() + tok.size() && std::isfinite(score);
      }
      if (!ok)
        throw DataError("predictions line " + std::to_string(line_no) + ": malformed entry '" +
                        std::string(tok) + "'");
      scores.emplace_back(label, score);
      pos = end;
    }
    all.push_back(rank_scores(std::move(scores)));
  }
  return all;
}

}  // namespace dxml
