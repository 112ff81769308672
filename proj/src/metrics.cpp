#include "dxml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "dxml/error.hpp"

namespace dxml {

std::vector<LabelIndex> rank_k(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw std::invalid_argument("rank_k: k must be at least 1");
  std::vector<LabelIndex> idx(scores.size());
  std::iota(idx.begin(), idx.end(), LabelIndex{0});
  const std::size_t take = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](LabelIndex a, LabelIndex b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  idx.resize(take);
  return idx;
}

namespace {

bool contains(const LabelSet& truth, LabelIndex label) {
  return std::binary_search(truth.begin(), truth.end(), label);
}

}  // namespace

double precision_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth,
                              std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision: k must be at least 1");
  const std::size_t n = std::min(k, ranking.size());
  std::size_t hits = 0;
  for (std::size_t l = 0; l < n; ++l) hits += contains(truth, ranking[l]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double dcg_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth,
                        std::size_t k) {
  if (k == 0) throw std::invalid_argument("dcg: k must be at least 1");
  const std::size_t n = std::min(k, ranking.size());
  double dcg = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    if (contains(truth, ranking[l])) dcg += 1.0 / std::log2(static_cast<double>(l) + 2.0);
  return dcg;
}

double ndcg_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth,
                         std::size_t k) {
  const double dcg = dcg_from_ranking(ranking, truth, k);
  if (truth.empty()) return 0.0;
  const std::size_t ideal_hits = std::min(k, truth.size());
  double ideal = 0.0;
  for (std::size_t l = 0; l < ideal_hits; ++l) ideal += 1.0 / std::log2(static_cast<double>(l) + 2.0);
  return dcg / ideal;
}

double precision_at_k(std::span<const double> scores, const LabelSet& truth, std::size_t k) {
  return precision_from_ranking(rank_k(scores, k), truth, k);
}

double ndcg_at_k(std::span<const double> scores, const LabelSet& truth, std::size_t k) {
  return ndcg_from_ranking(rank_k(scores, k), truth, k);
}

MetricReport evaluate(std::span<const LabelScores> predictions, const Dataset& test,
                      std::span<const std::size_t> ks, bool skip_unlabeled) {
  if (predictions.size() != test.num_points())
    throw DataError("prediction count (" + std::to_string(predictions.size()) +
                    ") does not match test point count (" + std::to_string(test.num_points()) +
                    ")");
  if (ks.empty()) throw UsageError("evaluate: empty k list");
  MetricReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.precision.assign(ks.size(), 0.0);
  report.ndcg.assign(ks.size(), 0.0);
  std::vector<LabelIndex> ranking;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& truth = test.points[i].labels;
    if (skip_unlabeled && truth.empty()) continue;
    ++report.num_points;
    const auto ranked = rank_scores(predictions[i]);
    ranking.clear();
    for (const auto& [label, score] : ranked) ranking.push_back(label);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.precision[j] += precision_from_ranking(ranking, truth, ks[j]);
      report.ndcg[j] += ndcg_from_ranking(ranking, truth, ks[j]);
    }
  }
  if (report.num_points)
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.precision[j] /= static_cast<double>(report.num_points);
      report.ndcg[j] /= static_cast<double>(report.num_points);
    }
  return report;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

std::string format_table(const MetricReport& report) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-6s %8s %8s\n", "k", "P@k", "nDCG@k");
  out += buf;
  for (std::size_t j = 0; j < report.ks.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%-6zu %8s %8s\n", report.ks[j],
                  format_percent(report.precision[j]).c_str(),
                  format_percent(report.ndcg[j]).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "(%zu test points)\n", report.num_points);
  out += buf;
  return out;
}

std::string format_key_values(const MetricReport& report) {
  std::string out;
  for (std::size_t j = 0; j < report.ks.size(); ++j)
    out += "P@" + std::to_string(report.ks[j]) + "=" + format_percent(report.precision[j]) + "\n";
  for (std::size_t j = 0; j < report.ks.size(); ++j)
    out += "nDCG@" + std::to_string(report.ks[j]) + "=" + format_percent(report.ndcg[j]) + "\n";
  return out;
}

}  // namespace dxml
