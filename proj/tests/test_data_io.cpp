#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dxml/data_io.hpp"
#include "dxml/error.hpp"
#include "oracles.hpp"

using namespace dxml;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_repo_file(in);
}

std::string write(const Dataset& d) {
  std::ostringstream out;
  write_repo_file(d, out);
  return out.str();
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

const char* kExample = "2 4 3\n0,2 1:0.5 3:1.0\n 0:2.0\n";

}  // namespace

TEST_CASE("parse: two-point example") {
  const auto d = parse(kExample);
  CHECK(d.num_points() == 2);
  CHECK(d.num_features == 4);
  CHECK(d.num_labels == 3);
  CHECK(d.points[0].features.indices == std::vector<FeatureIndex>{1, 3});
  CHECK(d.points[0].features.values == std::vector<double>{0.5, 1.0});
  CHECK(d.points[0].labels == LabelSet{0, 2});
  CHECK(d.points[1].features.indices == std::vector<FeatureIndex>{0});
  CHECK(d.points[1].features.values == std::vector<double>{2.0});
  CHECK(d.points[1].labels.empty());
  CHECK_NOTHROW(validate(d));
}

TEST_CASE("parse: empty stream is a malformed header") {
  CHECK(error_of("").find("malformed header") != std::string::npos);
  CHECK(error_of("3 4\n").find("malformed header") != std::string::npos);
  CHECK(error_of("a b c\n").find("malformed header") != std::string::npos);
}

TEST_CASE("parse: errors carry the line number") {
  CHECK(error_of("1 4 3\n0 4:1.0\n").find("line 2") != std::string::npos);
  CHECK(error_of("2 4 3\n0 1:1.0\n3 1:1.0\n").find("line 3") != std::string::npos);
  const auto dup = error_of("1 4 3\n0 1:1.0 2:1 1:3\n");
  CHECK(dup.find("line 2") != std::string::npos);
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(error_of("1 4 3\n0 1:x\n").find("line 2") != std::string::npos);
  CHECK(error_of("1 4 3\n0,,1 1:1\n").find("line 2") != std::string::npos);
}

TEST_CASE("parse: wrong line count") {
  CHECK(error_of("3 4 3\n0 1:1\n1 2:1\n").find("line 4") != std::string::npos);
  CHECK(error_of("1 4 3\n0 1:1\n1 2:1\n").find("line 3") != std::string::npos);
  // trailing blank lines are not extra points
  CHECK(parse("1 4 3\n0 1:1\n\n\n").num_points() == 1);
}

TEST_CASE("parse: tolerated variations") {
  SUBCASE("crlf") {
    const auto d = parse("2 4 3\r\n0,2 1:0.5 3:1.0\r\n 0:2.0\r\n");
    CHECK(d == parse(kExample));
  }
  SUBCASE("unsorted features are sorted") {
    const auto d = parse("1 4 3\n1 3:1.5 0:2\n");
    CHECK(d.points[0].features.indices == std::vector<FeatureIndex>{0, 3});
    CHECK(d.points[0].features.values == std::vector<double>{2.0, 1.5});
  }
  SUBCASE("explicit zeros dropped") {
    const auto d = parse("1 4 3\n1 0:0 2:0.0 3:1\n");
    CHECK(d.points[0].features.indices == std::vector<FeatureIndex>{3});
  }
  SUBCASE("labels sorted and deduplicated") {
    CHECK(parse("1 4 3\n2,0,2 1:1\n").points[0].labels == LabelSet{0, 2});
  }
  SUBCASE("point with labels and no features") {
    const auto d = parse("1 4 3\n1\n");
    CHECK(d.points[0].labels == LabelSet{1});
    CHECK(d.points[0].features.empty());
  }
  SUBCASE("fully empty point") {
    const auto d = parse("1 4 3\n\n");
    CHECK(d.points[0].labels.empty());
    CHECK(d.points[0].features.empty());
  }
}

TEST_CASE("write: example and empty dataset") {
  CHECK(write(parse(kExample)) == kExample);
  Dataset empty;
  empty.num_features = 7;
  empty.num_labels = 2;
  CHECK(write(empty) == "0 7 2\n");
  CHECK(parse(write(empty)) == empty);
}

TEST_CASE("round trip on random datasets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset d;
    d.num_features = 1 + rng() % 40;
    d.num_labels = 1 + rng() % 20;
    const std::size_t n = rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      DataPoint p;
      for (std::uint32_t f = 0; f < d.num_features; ++f)
        if (rng() % 4 == 0) {
          p.features.indices.push_back(f);
          double v = u(rng);
          if (rng() % 3 == 0) v = std::ldexp(v, -40);
          if (rng() % 5 == 0) v = std::round(v);
          if (v == 0.0) v = 1.0;
          p.features.values.push_back(v);
        }
      for (std::uint32_t l = 0; l < d.num_labels; ++l)
        if (rng() % 5 == 0) p.labels.push_back(l);
      d.points.push_back(p);
    }
    CHECK(parse(write(d)) == d);
  }
}

TEST_CASE("round trip on a planted dataset") {
  const auto d = oracle::planted_dataset(500, 300, 40, 8, 12, 3);
  const auto text = write(d);
  CHECK(parse(text) == d);
  CHECK(write(parse(text)) == text);
}

TEST_CASE("normalize_features") {
  SparseVector x{{0, 1}, {3.0, 4.0}};
  const auto y = normalize_features(x, FeatureNorm::unit_l2);
  CHECK(y.indices == x.indices);
  CHECK(y.values[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(y.values[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(normalize_features(x, FeatureNorm::none) == x);
  CHECK(normalize_features(SparseVector{}, FeatureNorm::unit_l2).empty());

  const auto d = normalize_features(oracle::planted_dataset(200, 50, 10, 2, 5, 9), FeatureNorm::unit_l2);
  for (const auto& p : d.points) {
    double s = 0;
    for (double v : p.features.values) s += v * v;
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
  }
}

TEST_CASE("parse_feature_norm") {
  CHECK(parse_feature_norm("none") == FeatureNorm::none);
  CHECK(parse_feature_norm("unit_l2") == FeatureNorm::unit_l2);
  CHECK_THROWS_AS(parse_feature_norm("l1"), UsageError);
}

TEST_CASE("validate rejects broken invariants") {
  auto d = parse(kExample);
  auto bad = d;
  bad.points[0].features.indices = {3, 1};
  CHECK_THROWS_AS(validate(bad), DataError);
  bad = d;
  bad.points[0].labels = {2, 0};
  CHECK_THROWS_AS(validate(bad), DataError);
  bad = d;
  bad.points[1].features.values = {0.0};
  CHECK_THROWS_AS(validate(bad), DataError);
}

TEST_CASE("stats") {
  const auto s = compute_stats(parse(kExample));
  CHECK(s.num_points == 2);
  CHECK(s.num_unlabeled == 1);
  CHECK(s.avg_labels_per_point == 1.0);
  CHECK(s.avg_features_per_point == 1.5);
  CHECK(s.avg_points_per_label == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("split files and subsets") {
  std::istringstream split("3 1\n1 2\n\n2.000000 3\n");
  const auto col0 = read_split_column(split, 0);
  CHECK(col0 == std::vector<std::size_t>{2, 0, 1});
  std::istringstream split1("3 1\n1 2\n");
  CHECK(read_split_column(split1, 1) == std::vector<std::size_t>{0, 1});
  std::istringstream zero("0\n");
  CHECK_THROWS_AS(read_split_column(zero, 0), DataError);

  const auto d = parse(kExample);
  const std::vector<std::size_t> ids{1, 0};
  const auto s = subset(d, ids);
  CHECK(s.points[0] == d.points[1]);
  CHECK(s.points[1] == d.points[0]);
  const std::vector<std::size_t> out_of_range{2};
  CHECK_THROWS_AS(subset(d, out_of_range), DataError);
}
