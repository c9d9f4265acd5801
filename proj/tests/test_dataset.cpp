#include "ewfs/dataset.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

namespace ewfs {
namespace {

IncompleteDataset parse(const std::string& text, const std::string& label = "class") {
  std::istringstream in(text);
  return read_csv(in, label);
}

TEST(ReadCsv, MaskFalseExactlyAtMissingToken) {
  const auto data = parse("a,b,class\n1,2,x\n3,?,y\n5,6,x\n7,8,y\n");
  EXPECT_EQ(data.rows(), 4);
  EXPECT_EQ(data.cols(), 2);
  EXPECT_EQ(data.missing_count(), 1);
  EXPECT_FALSE(data.mask(1, 1));
}

TEST(ReadCsv, LabelsDenseInFirstAppearanceOrder) {
  const auto data = parse("class,a\nz,1\nb,2\nz,3\nq,4\n");
  EXPECT_EQ(data.labels, (Labels{0, 1, 0, 2}));
  EXPECT_EQ(data.class_names, (std::vector<std::string>{"z", "b", "q"}));
  EXPECT_EQ(data.feature_names, (std::vector<std::string>{"a"}));
}

TEST(ReadCsv, MissingCountEqualsTokenCount) {
  const auto data = parse("a,b,c,class\n,1,NA,p\n?,2,3,q\n4,,6,p\n");
  EXPECT_EQ(data.missing_count(), 4);
}

TEST(ReadCsv, LabelWithMissingTokenIsError) {
  EXPECT_THROW(parse("a,class\n1,x\n2,NA\n"), DataError);
}

TEST(ReadCsv, UnparseableCellReportsPosition) {
  try {
    parse("a,b,class\n1,2,x\n3,abc,y\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(":3"), std::string::npos) << what;
    EXPECT_NE(what.find("'b'"), std::string::npos) << what;
  }
}

TEST(ReadCsv, RowWithoutObservedFeatureIsError) {
  EXPECT_THROW(parse("a,b,class\n1,2,x\n?,,y\n"), DataError);
}

TEST(ReadCsv, MissingLabelColumnIsError) { EXPECT_THROW(parse("a,b\n1,2\n"), DataError); }

TEST(LoadCsv, UnreadableFileIsError) { EXPECT_THROW(load_csv("/nonexistent/file.csv", "class"), DataError); }

TEST(LoadCsv, WineShape) {
  const auto wine = load_csv(test::data_dir() / "wine.csv", "class");
  EXPECT_EQ(wine.rows(), 178);
  EXPECT_EQ(wine.cols(), 13);
  EXPECT_EQ(wine.num_classes(), 3);
  EXPECT_TRUE(wine.is_complete());
}

TEST(WriteCsv, RoundTripsValuesAndMask) {
  auto data = test::random_incomplete(12, 4, 0.2, 5);
  std::ostringstream out;
  write_csv(data, out);
  std::istringstream in(out.str());
  const auto back = read_csv(in, "class");
  EXPECT_TRUE((back.mask == data.mask).all());
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j)
      if (data.mask(i, j)) EXPECT_EQ(back.values(i, j), data.values(i, j));
}

IncompleteDataset column(const std::vector<double>& values, const std::vector<bool>& observed = {}) {
  Matrix m(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Index>(i), 0) = values[i];
  auto data = make_complete_dataset(m, Labels(values.size(), 0));
  for (std::size_t i = 0; i < observed.size(); ++i) data.mask(static_cast<Index>(i), 0) = observed[i];
  return data;
}

TEST(FitNormalizer, ObservedMinMax) {
  const auto p = fit_normalizer(column({0.2, 0.8, 100.0}, {true, true, false}));
  EXPECT_EQ(p.min(0), 0.2);
  EXPECT_EQ(p.max(0), 0.8);
  EXPECT_FALSE(p.constant[0]);
}

TEST(FitNormalizer, DegenerateColumnsFlaggedConstant) {
  auto data = make_complete_dataset(Matrix{{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, Labels{0, 0, 0});
  data.mask.col(1).setConstant(false);
  data.mask(0, 1) = false;
  const auto p = fit_normalizer(data);
  EXPECT_EQ(p.min(0), 5.0);
  EXPECT_EQ(p.max(0), 5.0);
  EXPECT_TRUE(p.constant[0]);
  EXPECT_EQ(p.min(1), 0.0);
  EXPECT_EQ(p.max(1), 0.0);
  EXPECT_TRUE(p.constant[1]);
}

TEST(ApplyNormalizer, StatedExamples) {
  NormalizationParams unit{Vector::Zero(1), Vector::Ones(1), {false}};
  EXPECT_EQ(apply_normalizer(column({0.5}), unit).values(0, 0), 0.5);
  EXPECT_EQ(apply_normalizer(column({1.4}), unit).values(0, 0), 1.0);
  EXPECT_EQ(apply_normalizer(column({-0.3}), unit).values(0, 0), 0.0);
  NormalizationParams constant{Vector::Constant(1, 5.0), Vector::Constant(1, 5.0), {true}};
  EXPECT_EQ(apply_normalizer(column({5.0}), constant).values(0, 0), 0.0);
}

TEST(ApplyNormalizer, DimensionMismatchIsError) {
  NormalizationParams p{Vector::Zero(2), Vector::Ones(2), {false, false}};
  EXPECT_THROW(apply_normalizer(column({1.0}), p), DataError);
}

TEST(Normalizer, RoundTripWithinTolerance) {
  auto data = test::random_incomplete(30, 5, 0.1, 9);
  data.values = data.values * 37.0 - Matrix::Constant(30, 5, 11.0);
  const auto p = fit_normalizer(data);
  const auto norm = apply_normalizer(data, p);
  const Matrix back = denormalize(norm.values, p);
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j) {
      if (!data.mask(i, j)) continue;
      EXPECT_GE(norm.values(i, j), 0.0);
      EXPECT_LE(norm.values(i, j), 1.0);
      EXPECT_NEAR(back(i, j), data.values(i, j), 1e-12);
    }
}

TEST(StratifiedFolds, ExactStratificationExample) {
  const Labels y{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  for (const auto& f : stratified_folds(y, 5, 3)) {
    ASSERT_EQ(f.test_indices.size(), 2u);
    EXPECT_NE(y[static_cast<std::size_t>(f.test_indices[0])], y[static_cast<std::size_t>(f.test_indices[1])]);
  }
}

TEST(StratifiedFolds, Deterministic) {
  const auto y = test::balanced_labels(40, 3);
  const auto a = stratified_folds(y, 5, 11), b = stratified_folds(y, 5, 11);
  for (std::size_t f = 0; f < a.size(); ++f) EXPECT_EQ(a[f].test_indices, b[f].test_indices);
  EXPECT_NE(stratified_folds(y, 5, 12)[0].test_indices, a[0].test_indices);
}

TEST(StratifiedFolds, WineFoldSizes) {
  const auto wine = load_csv(test::data_dir() / "wine.csv", "class");
  std::vector<std::size_t> sizes;
  for (const auto& f : stratified_folds(wine.labels, 5, 1)) sizes.push_back(f.test_indices.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{35, 35, 36, 36, 36}));
}

TEST(StratifiedFolds, PartitionAndBalanceProperty) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto n = static_cast<Index>(10 + rng() % 60);
    const int k = static_cast<int>(2 + rng() % 5);
    Labels y(static_cast<std::size_t>(n));
    for (auto& label : y) label = static_cast<int>(rng() % 3);
    y[0] = 0;
    y[1] = 1;
    y[2] = 2;
    std::map<int, int> total;
    for (int label : y) ++total[label];
    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    for (const auto& f : stratified_folds(y, k, seed)) {
      EXPECT_EQ(f.train_indices.size() + f.test_indices.size(), static_cast<std::size_t>(n));
      std::vector<Index> all = f.train_indices;
      all.insert(all.end(), f.test_indices.begin(), f.test_indices.end());
      std::sort(all.begin(), all.end());
      for (Index i = 0; i < n; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
      for (Index i : f.test_indices) ++hits[static_cast<std::size_t>(i)];
      std::map<int, int> in_test;
      for (Index i : f.test_indices) ++in_test[y[static_cast<std::size_t>(i)]];
      // Each class lands within one sample of its share n_c / k.
      for (const auto& [c, count] : total) {
        const double share = static_cast<double>(count) / k;
        EXPECT_LE(std::abs(in_test[c] - share), 1.0) << "seed " << seed << " class " << c;
      }
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(StratifiedFolds, InvalidK) {
  const Labels y{0, 1, 0};
  EXPECT_THROW(stratified_folds(y, 4, 0), ConfigError);
  EXPECT_THROW(stratified_folds(y, 1, 0), ConfigError);
}

TEST(StackRows, ConcatenatesAndChecksShape) {
  const auto a = test::random_incomplete(5, 3, 0.2, 1);
  const auto b = test::random_incomplete(4, 3, 0.2, 2);
  const auto s = stack_rows(a, b);
  EXPECT_EQ(s.rows(), 9);
  EXPECT_TRUE((s.mask.bottomRows(4) == b.mask).all());
  EXPECT_EQ(s.values.bottomRows(4), b.values);
  EXPECT_THROW(stack_rows(a, test::random_incomplete(4, 2, 0.2, 2)), DataError);
}

}  // namespace
}  // namespace ewfs
