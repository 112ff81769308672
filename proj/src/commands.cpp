#include "dxml/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "dxml/error.hpp"
#include "dxml/model_file.hpp"

namespace dxml {

void write_file_atomically(const std::string& path,
                           const std::function<void(std::ostream&)>& body) {
  const std::string tmp = path + ".tmp";
  try {
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw DataError("cannot write '" + tmp + "'");
      body(f);
      f.flush();
      if (!f) throw DataError("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

namespace {

LabelGraph read_prior_graph(const std::string& path, std::size_t num_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prior graph '" + path + "'");
  return read_adjacency(in, num_labels);
}

}  // namespace

void cmd_train(const TrainCommand& cmd, std::ostream& out, std::ostream& log) {
  cmd.config.validate();
  if (cmd.dry_run) {
    out << "train " << cmd.train_file << " -> " << cmd.model_file << "\n";
    for (const auto& line : training_plan(cmd.config)) out << line << "\n";
    return;
  }
  const Dataset train = read_repo_file(cmd.train_file);
  const auto stats = compute_stats(train);
  log << "train: n=" << stats.num_points << " d=" << stats.num_features
      << " L=" << stats.num_labels << " unlabeled=" << stats.num_unlabeled << "\n";
  std::optional<LabelGraph> prior;
  if (!cmd.prior_graph_file.empty()) prior = read_prior_graph(cmd.prior_graph_file, train.num_labels);
  const auto model = train_model(
      train, cmd.config, [&](const std::string& msg) { log << msg << "\n" << std::flush; },
      prior ? &*prior : nullptr);
  const auto bytes = serialize_model(model);
  write_file_atomically(cmd.model_file, [&](std::ostream& f) {
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  });
  log << "model written to " << cmd.model_file << " (" << bytes.size() << " bytes)\n";
}

void cmd_predict(const PredictCommand& cmd, std::ostream& out, std::ostream& log) {
  const auto model = load_model(cmd.model_file);
  const Dataset test = read_repo_file(cmd.test_file);
  PredictOptions opts;
  opts.k = cmd.k.value_or(model.config.k);
  opts.p = cmd.p.value_or(model.config.p);
  opts.weighting = model.config.weighting;
  if (opts.k == 0 || opts.p == 0) throw UsageError("k and p must be positive");
  const auto preds = predict_dataset(model, test, opts);
  std::size_t shortfall = 0;
  for (const auto& p : preds) shortfall += p.neighbors_found < opts.k;
  if (shortfall)
    log << "note: " << shortfall << " test points had fewer than k=" << opts.k
        << " neighbors in their cluster\n";
  auto body = [&](std::ostream& o) {
    for (const auto& p : preds) {
      if (!cmd.top_only) {
        write_prediction_line(p.scores, o);
        continue;
      }
      LabelScores top;
      for (auto label : p.top_labels) {
        auto it = std::lower_bound(p.scores.begin(), p.scores.end(), std::make_pair(label, 0.0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        top.push_back(*it);
      }
      write_prediction_line(top, o);
    }
  };
  if (cmd.out_file.empty())
    body(out);
  else
    write_file_atomically(cmd.out_file, body);
  log << "predicted " << preds.size() << " points (k=" << opts.k << ")\n";
}

MetricReport cmd_evaluate(const EvaluateCommand& cmd, std::ostream& out, std::ostream& log) {
  std::ifstream in(cmd.predictions_file);
  if (!in) throw DataError("cannot open predictions '" + cmd.predictions_file + "'");
  const auto preds = read_predictions(in);
  const Dataset test = read_repo_file(cmd.test_file);
  if (preds.size() != test.num_points())
    throw DataError("line-count mismatch: " + std::to_string(preds.size()) +
                    " prediction lines vs " + std::to_string(test.num_points()) + " test points");
  const auto report = evaluate(preds, test, cmd.ks, cmd.skip_unlabeled);
  out << format_table(report);
  if (!cmd.kv_file.empty()) {
    write_file_atomically(cmd.kv_file, [&](std::ostream& f) { f << format_key_values(report); });
    log << "metrics written to " << cmd.kv_file << "\n";
  }
  return report;
}

SweepResult cmd_sweep_k(const SweepCommand& cmd, std::ostream& out, std::ostream& log) {
  if (cmd.candidates.empty()) throw UsageError("sweep-k: empty candidate list");
  const auto model = load_model(cmd.model_file);
  const Dataset validation = read_repo_file(cmd.validation_file);
  const auto res = sweep_k(model, validation, cmd.candidates, cmd.metric_ks, cmd.p);
  for (std::size_t c = 0; c < res.candidates.size(); ++c) {
    out << "k=" << res.candidates[c];
    for (std::size_t j = 0; j < res.metric_ks.size(); ++j)
      out << " P@" << res.metric_ks[j] << "=" << format_percent(res.reports[c].precision[j]);
    for (std::size_t j = 0; j < res.metric_ks.size(); ++j)
      out << " nDCG@" << res.metric_ks[j] << "=" << format_percent(res.reports[c].ndcg[j]);
    out << "\n";
  }
  for (std::size_t j = 0; j < res.metric_ks.size(); ++j) {
    out << "best k for P@" << res.metric_ks[j] << ": " << res.best_k_precision[j] << "\n";
    out << "best k for nDCG@" << res.metric_ks[j] << ": " << res.best_k_ndcg[j] << "\n";
  }
  log << "swept " << res.candidates.size() << " candidates\n";
  return res;
}

void cmd_embed_labels(const EmbedLabelsCommand& cmd, std::ostream& out, std::ostream& log) {
  const Dataset train = read_repo_file(cmd.train_file);
  const LabelGraph graph = cmd.prior_graph_file.empty()
                               ? build_label_graph(train)
                               : read_prior_graph(cmd.prior_graph_file, train.num_labels);
  log << "label graph: " << graph.num_nodes() << " nodes, " << graph.num_edges() << " edges\n";
  if (!cmd.graph_out_file.empty())
    write_file_atomically(cmd.graph_out_file, [&](std::ostream& f) { write_adjacency(graph, f); });
  const auto v = embed_labels(graph, cmd.deepwalk);
  if (cmd.out_file.empty())
    write_label_embeddings(v, out);
  else
    write_file_atomically(cmd.out_file, [&](std::ostream& f) { write_label_embeddings(v, f); });
}

void cmd_split(const SplitCommand& cmd, std::ostream& out, std::ostream& log) {
  const Dataset data = read_repo_file(cmd.data_file);
  std::ifstream in(cmd.split_file);
  if (!in) throw DataError("cannot open split file '" + cmd.split_file + "'");
  const auto ids = read_split_column(in, cmd.column);
  const Dataset part = subset(data, ids);
  if (cmd.out_file.empty())
    write_repo_file(part, out);
  else
    write_file_atomically(cmd.out_file, [&](std::ostream& f) { write_repo_file(part, f); });
  log << "selected " << part.num_points() << " of " << data.num_points() << " points\n";
}

void cmd_stats(const std::string& data_file, std::ostream& out) {
  const auto s = compute_stats(read_repo_file(data_file));
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "points=%zu features=%zu labels=%zu unlabeled=%zu avg_points_per_label=%.2f "
                "avg_labels_per_point=%.2f avg_features_per_point=%.2f\n",
                s.num_points, s.num_features, s.num_labels, s.num_unlabeled, s.avg_points_per_label,
                s.avg_labels_per_point, s.avg_features_per_point);
  out << buf;
}

}  // namespace dxml
