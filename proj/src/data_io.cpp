#include "dxml/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

#include "dxml/error.hpp"

namespace dxml {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

DataPoint parse_point(std::string_view line, std::size_t line_no, std::size_t d, std::size_t L) {
  DataPoint p;
  auto tokens = split_ws(line);
  std::size_t first_feature = 0;
  const bool has_label_field = !line.empty() && !is_space(line.front()) && !tokens.empty() &&
                               tokens.front().find(':') == std::string_view::npos;
  if (has_label_field) {
    first_feature = 1;
    std::string_view field = tokens.front();
    std::size_t pos = 0;
    while (pos <= field.size()) {
      const std::size_t comma = std::min(field.find(',', pos), field.size());
      LabelIndex label = 0;
      if (!parse_uint(field.substr(pos, comma - pos), label))
        fail(line_no, "malformed label field '" + std::string(field) + "'");
      if (label >= L)
        fail(line_no, "label index " + std::to_string(label) + " >= L=" + std::to_string(L));
      p.labels.push_back(label);
      pos = comma + 1;
    }
    std::sort(p.labels.begin(), p.labels.end());
    p.labels.erase(std::unique(p.labels.begin(), p.labels.end()), p.labels.end());
  }

  std::vector<std::pair<FeatureIndex, double>> entries;
  entries.reserve(tokens.size());
  for (std::size_t t = first_feature; t < tokens.size(); ++t) {
    const auto tok = tokens[t];
    const auto colon = tok.find(':');
    FeatureIndex idx = 0;
    double val = 0.0;
    if (colon == std::string_view::npos || !parse_uint(tok.substr(0, colon), idx) ||
        !parse_real(tok.substr(colon + 1), val))
      fail(line_no, "malformed feature token '" + std::string(tok) + "'");
    if (idx >= d)
      fail(line_no, "feature index " + std::to_string(idx) + " >= d=" + std::to_string(d));
    entries.emplace_back(idx, val);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].first == entries[i - 1].first)
      fail(line_no, "duplicate feature index " + std::to_string(entries[i].first));
  for (const auto& [idx, val] : entries) {
    if (val == 0.0) continue;
    p.features.indices.push_back(idx);
    p.features.values.push_back(val);
  }
  return p;
}

void append_real(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string_view s(buf, static_cast<std::size_t>(ptr - buf));
  out += s;
  if (s.find_first_of(".en") == std::string_view::npos) out += ".0";
}

}  // namespace

Dataset parse_repo_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError("line 1: malformed header (empty input)");
  strip_cr(line);
  const auto header = split_ws(line);
  std::size_t n = 0;
  Dataset data;
  if (header.size() != 3 || !parse_uint(header[0], n) || !parse_uint(header[1], data.num_features) ||
      !parse_uint(header[2], data.num_labels))
    throw DataError("line 1: malformed header, expected 'n d L'");
  if (data.num_labels > std::numeric_limits<LabelIndex>::max() ||
      data.num_features > std::numeric_limits<FeatureIndex>::max())
    throw DataError("line 1: dimensions exceed 32-bit index range");

  data.points.reserve(n);
  while (data.points.size() < n) {
    if (!std::getline(in, line))
      throw DataError("line " + std::to_string(line_no + 1) + ": expected " + std::to_string(n) +
                      " points, file ends after " + std::to_string(data.points.size()));
    ++line_no;
    strip_cr(line);
    data.points.push_back(parse_point(line, line_no, data.num_features, data.num_labels));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line))
      fail(line_no, "more data lines than the " + std::to_string(n) + " declared in the header");
  }
  return data;
}

Dataset read_repo_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return parse_repo_file(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_repo_file(const Dataset& data, std::ostream& out) {
  std::string buf;
  buf += std::to_string(data.num_points()) + ' ' + std::to_string(data.num_features) + ' ' +
         std::to_string(data.num_labels) + '\n';
  for (const auto& p : data.points) {
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      if (i) buf += ',';
      buf += std::to_string(p.labels[i]);
    }
    for (std::size_t i = 0; i < p.features.nnz(); ++i) {
      buf += ' ';
      buf += std::to_string(p.features.indices[i]);
      buf += ':';
      append_real(buf, p.features.values[i]);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_repo_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_repo_file(data, out);
  if (!out) throw DataError("write failed for '" + path + "'");
}

SparseVector normalize_features(SparseVector x, FeatureNorm scheme) {
  if (scheme == FeatureNorm::none) return x;
  double sq = 0.0;
  for (double v : x.values) sq += v * v;
  if (sq == 0.0) return x;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : x.values) v *= inv;
  return x;
}

Dataset normalize_features(Dataset data, FeatureNorm scheme) {
  if (scheme == FeatureNorm::none) return data;
  for (auto& p : data.points) p.features = normalize_features(std::move(p.features), scheme);
  return data;
}

void validate(const Dataset& data) {
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const auto& p = data.points[i];
    const auto where = "point " + std::to_string(i) + ": ";
    if (p.features.indices.size() != p.features.values.size())
      throw DataError(where + "index/value length mismatch");
    for (std::size_t j = 0; j < p.features.nnz(); ++j) {
      if (p.features.indices[j] >= data.num_features)
        throw DataError(where + "feature index out of range");
      if (j && p.features.indices[j] <= p.features.indices[j - 1])
        throw DataError(where + "feature indices not strictly increasing");
      if (p.features.values[j] == 0.0 || !std::isfinite(p.features.values[j]))
        throw DataError(where + "zero or non-finite feature value stored");
    }
    for (std::size_t j = 0; j < p.labels.size(); ++j) {
      if (p.labels[j] >= data.num_labels) throw DataError(where + "label index out of range");
      if (j && p.labels[j] <= p.labels[j - 1])
        throw DataError(where + "labels not sorted and unique");
    }
  }
}

DatasetStats compute_stats(const Dataset& data) {
  DatasetStats s;
  s.num_points = data.num_points();
  s.num_features = data.num_features;
  s.num_labels = data.num_labels;
  std::size_t label_total = 0;
  std::size_t feature_total = 0;
  for (const auto& p : data.points) {
    label_total += p.labels.size();
    feature_total += p.features.nnz();
    if (p.labels.empty()) ++s.num_unlabeled;
  }
  if (s.num_points) {
    s.avg_labels_per_point = static_cast<double>(label_total) / static_cast<double>(s.num_points);
    s.avg_features_per_point =
        static_cast<double>(feature_total) / static_cast<double>(s.num_points);
  }
  if (s.num_labels)
    s.avg_points_per_label = static_cast<double>(label_total) / static_cast<double>(s.num_labels);
  return s;
}

std::vector<std::size_t> read_split_column(std::istream& in, std::size_t column) {
  std::vector<std::size_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    const auto cols = split_ws(line);
    std::size_t id = 0;
    if (column >= cols.size()) fail(line_no, "split file has no column " + std::to_string(column));
    // Split files are occasionally written by MATLAB as reals ("17.000000").
    double as_real = 0.0;
    if (!parse_uint(cols[column], id)) {
      if (!parse_real(cols[column], as_real) || as_real < 1.0 || as_real != std::floor(as_real))
        fail(line_no, "malformed point id '" + std::string(cols[column]) + "'");
      id = static_cast<std::size_t>(as_real);
    }
    if (id == 0) fail(line_no, "point ids are 1-based; found 0");
    ids.push_back(id - 1);
  }
  return ids;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> ids) {
  Dataset out;
  out.num_features = data.num_features;
  out.num_labels = data.num_labels;
  out.points.reserve(ids.size());
  for (auto id : ids) {
    if (id >= data.num_points())
      throw DataError("split id " + std::to_string(id + 1) + " exceeds dataset size " +
                      std::to_string(data.num_points()));
    out.points.push_back(data.points[id]);
  }
  return out;
}

FeatureNorm parse_feature_norm(const std::string& name) {
  if (name == "none") return FeatureNorm::none;
  if (name == "unit_l2" || name == "l2") return FeatureNorm::unit_l2;
  throw UsageError("unknown feature normalization '" + name + "' (expected none|unit_l2)");
}

std::string to_string(FeatureNorm scheme) {
  return scheme == FeatureNorm::none ? "none" : "unit_l2";
}

}  // namespace dxml
