#pragma once

#include <span>
#include <string>
#include <vector>

#include "dxml/data_io.hpp"
#include "dxml/predictor.hpp"

namespace dxml {

/// Indices of the k largest scores, descending, ties by ascending index.
/// Returns min(k, scores.size()) indices.
std::vector<LabelIndex> rank_k(std::span<const double> scores, std::size_t k);

// Metrics over an explicit ranking. Positions beyond the ranking's length
// count as misses; P@k always divides by k.
double precision_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth,
                              std::size_t k);
/// Positional DCG: sum over rank positions l = 1..k of hit(l) / log2(l + 1).
double dcg_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth, std::size_t k);
/// DCG divided by the ideal DCG for min(k, |truth|) hits; 0 for empty truth.
double ndcg_from_ranking(std::span<const LabelIndex> ranking, const LabelSet& truth,
                         std::size_t k);

double precision_at_k(std::span<const double> scores, const LabelSet& truth, std::size_t k);
double ndcg_at_k(std::span<const double> scores, const LabelSet& truth, std::size_t k);

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<double> precision;  // mean P@k, as fractions
  std::vector<double> ndcg;       // mean nDCG@k
  std::size_t num_points = 0;
};

/// Mean P@k and nDCG@k. `predictions[i]` is the ranked score list for test
/// point i. Unlabeled points count as zero unless `skip_unlabeled`.
/// Throws DataError if the counts differ.
MetricReport evaluate(std::span<const LabelScores> predictions, const Dataset& test,
                      std::span<const std::size_t> ks, bool skip_unlabeled = false);

/// Percentage with exactly two decimals ("66.03").
std::string format_percent(double fraction);

/// Aligned text table: one row per k with P@k and nDCG@k.
std::string format_table(const MetricReport& report);

/// `P@1=66.03` style lines, P first then nDCG, ascending k.
std::string format_key_values(const MetricReport& report);

}  // namespace dxml
