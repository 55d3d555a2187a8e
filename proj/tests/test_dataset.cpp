#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace ctree;

namespace {

Dataset parse(const std::string& text)
{
  std::istringstream in(text);
  return parse_csv(in);
}

std::string error_of(const std::string& text)
{
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(Csv, ParsesMinimalFile)
{
  auto ds = parse("f1,f2,label\n0.1,0.2,correct\n0.3,0.4,contradictory\n");
  EXPECT_EQ(ds.labels.size(), 2u);
  EXPECT_EQ(ds.dim, 2u);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.labels.name(ds.instances[1].gold), "contradictory");
  EXPECT_DOUBLE_EQ(ds.instances[1].features[1], 0.4);
}

TEST(Csv, FiveLabelsInFirstSeenOrder)
{
  auto ds = parse("label,x\ncorrect,1\npartially_correct,2\ncontradictory,3\nirrelevant,4\nnon_domain,5\ncorrect,6\n");
  EXPECT_EQ(ds.labels, testutil::answer_labels());
  EXPECT_EQ(ds.dim, 1u);
  EXPECT_DOUBLE_EQ(ds.instances[0].features[0], 1.0);
}

TEST(Csv, NonNumericNamesRowAndColumn)
{
  auto msg = error_of("f1,f2,label\n0.1,abc,correct\n0.2,0.3,other\n");
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column f2"), std::string::npos) << msg;
}

TEST(Csv, Errors)
{
  EXPECT_THROW(parse(""), DataError);
  EXPECT_THROW(parse("f1,f2\n1,2\n"), DataError);
  EXPECT_THROW(parse("label,label\na,b\n"), DataError);
  EXPECT_THROW(parse("f1,label\n1,a\n2\n"), DataError);
  EXPECT_THROW(parse("f1,label\n1,a\n2,a\n"), DataError);
  EXPECT_THROW(parse("f1,label\ninf,a\n2,b\n"), DataError);
  EXPECT_THROW(parse("f1,label\n"), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), DataError);
}

TEST(Csv, RoundTrip)
{
  auto ds = testutil::blobs({0.0, 3.0, -2.0}, 7, 4, 1.3, 11);
  std::ostringstream out;
  write_csv(out, ds);
  EXPECT_EQ(parse(out.str()), ds);
}

TEST(Folds, EvenDivision)
{
  auto ds = testutil::blobs({0.0, 1.0}, 10, 1, 1.0, 1);
  auto plan = stratified_folds(ds, 5, 3);
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t c = 0; c < 2; ++c) {
      auto [test, train] = plan.split(f);
      auto n = std::count_if(test.begin(), test.end(), [&](auto i) { return ds.instances[i].gold == c; });
      EXPECT_EQ(n, 2);
      EXPECT_EQ(test.size() + train.size(), ds.size());
    }
}

TEST(Folds, UnevenClassesDifferByAtMostOne)
{
  ctree::SyntheticSpec spec{{{"a", 7, {0.0}, {1.0}}, {"b", 5, {1.0}, {1.0}}}};
  auto ds = generate_synthetic(spec, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto plan = stratified_folds(ds, 5, seed);
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<int> per(5, 0);
      for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.instances[i].gold == c) ++per[plan.assignments[i]];
      auto [lo, hi] = std::minmax_element(per.begin(), per.end());
      EXPECT_LE(*hi - *lo, 1);
    }
  }
}

TEST(Folds, Deterministic)
{
  auto ds = testutil::blobs({0.0, 1.0, 2.0}, 13, 2, 1.0, 5);
  EXPECT_EQ(stratified_folds(ds, 4, 99), stratified_folds(ds, 4, 99));
  EXPECT_NE(stratified_folds(ds, 4, 99).assignments, stratified_folds(ds, 4, 100).assignments);
}

TEST(Folds, TooFewInstancesNamesClass)
{
  ctree::SyntheticSpec spec{{{"big", 10, {0.0}, {1.0}}, {"tiny", 3, {1.0}, {1.0}}}};
  auto ds = generate_synthetic(spec, 1);
  try {
    stratified_folds(ds, 5, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("tiny"), std::string::npos);
  }
}

TEST(Synthetic, DeterministicAndShaped)
{
  auto a = testutil::blobs({0.0, 10.0}, 50, 3, 0.1, 42);
  auto b = testutil::blobs({0.0, 10.0}, 50, 3, 0.1, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a.class_counts(), (std::vector<std::size_t>{50, 50}));
  EXPECT_NE(a, testutil::blobs({0.0, 10.0}, 50, 3, 0.1, 43));
}

TEST(Synthetic, SeparableGaussiansTrainToPerfectAccuracy)
{
  ctree::SyntheticSpec spec{{{"a", 50, {0.0, 0.0}, {0.1, 0.1}}, {"b", 50, {10.0, 10.0}, {0.1, 0.1}}}};
  auto ds = generate_synthetic(spec, 3);
  auto z = apply_standardizer(fit_standardizer(ds), ds);
  auto p = make_binary_problem(z, [](auto) { return true; }, [](auto g) { return g == 1; });
  auto m = train_binary(p, {0.01, 100, 1});
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(predict_binary(m, p.row(i)), p.signs[i]);
}

TEST(Synthetic, RejectsSingleClass)
{
  ctree::SyntheticSpec spec{{{"only", 5, {0.0}, {1.0}}}};
  EXPECT_THROW(generate_synthetic(spec, 1), DataError);
}

TEST(Synthetic, ParsesSpecFile)
{
  std::istringstream in("dim = 3\n# comment\n[a]\ncount = 4\nmean = 1, 2\nstddev = 0.5\n\n[b]\ncount = 2\n"
                        "mean = 0\nstddev = 1, 2, 3  # per dim\n");
  auto spec = parse_synthetic_spec(in);
  ASSERT_EQ(spec.classes.size(), 2u);
  EXPECT_EQ(spec.classes[0].mean, (std::vector<double>{1, 2, 0}));
  EXPECT_EQ(spec.classes[0].stddev, (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(spec.classes[1].stddev, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(generate_synthetic(spec, 0).size(), 6u);

  std::istringstream bad("[a]\ncount = x\n");
  EXPECT_THROW(parse_synthetic_spec(bad), DataError);
  auto shipped = load_synthetic_spec(CTREE_DATA_DIR "/answers.spec");
  EXPECT_EQ(shipped.classes.size(), 5u);
  EXPECT_EQ(shipped.classes[0].mean.size(), 30u);
}

TEST(Standardizer, HandComputed)
{
  ctree::Dataset ds{testutil::letters(2), 2, {{{0.0, 5.0}, 0}, {{2.0, 5.0}, 1}}};
  auto s = fit_standardizer(ds);
  auto z = apply_standardizer(s, ds);
  EXPECT_DOUBLE_EQ(z.instances[0].features[0], -1.0);
  EXPECT_DOUBLE_EQ(z.instances[1].features[0], 1.0);
  EXPECT_EQ(z.instances[0].features[1], 0.0);
  EXPECT_EQ(z.instances[1].features[1], 0.0);
  EXPECT_THROW(s.apply(std::vector<double>{1.0}), DataError);
}

TEST(Standardizer, FittingSetHasZeroMean)
{
  auto ds = testutil::blobs({3.0, -7.0, 12.0}, 20, 5, 2.5, 8);
  auto z = apply_standardizer(fit_standardizer(ds), ds);
  for (std::size_t j = 0; j < z.dim; ++j) {
    double m = 0.0;
    for (const auto& in : z.instances) m += in.features[j];
    EXPECT_NEAR(m / static_cast<double>(z.size()), 0.0, 1e-9);
  }
}
