#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ctree;

TEST(Similarity, WorkedTwoClassExample)
{
  ConfusionMatrix c(testutil::letters(2));
  c(0, 1) = 4; // predicted A, true B
  c(1, 1) = 6;
  c(1, 0) = 2; // predicted B, true A
  c(0, 0) = 8;
  auto s = similarity(c);
  EXPECT_EQ(s(0, 1), 0.3);
  EXPECT_EQ(s(0, 1), s(1, 0));
  auto d = distance(s);
  EXPECT_EQ(d(0, 1), 0.7);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(Similarity, DiagonalAndFullSwap)
{
  ConfusionMatrix diag(testutil::letters(3));
  for (std::size_t i = 0; i < 3; ++i) diag(i, i) = 5;
  auto s = similarity(diag);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(s(i, j), 0.0);

  ConfusionMatrix swap(testutil::letters(2));
  swap(0, 1) = 7;
  swap(1, 0) = 3;
  EXPECT_EQ(similarity(swap)(0, 1), 1.0);
  EXPECT_EQ(distance(similarity(swap))(0, 1), 0.0);
}

TEST(Similarity, ZeroSupportIsError)
{
  ConfusionMatrix c(testutil::letters(2));
  c(0, 0) = 3;
  EXPECT_THROW(similarity(c), DataError);
}

TEST(Similarity, FuzzedBoundsAndSymmetry)
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    ConfusionMatrix c(testutil::letters(k));
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t t = 0; t < k; ++t) c(p, t) = rng() % 20;
    for (std::size_t t = 0; t < k; ++t) c(t, t) += 1;
    auto s = similarity(c);
    auto d = distance(s);
    EXPECT_NO_THROW(d.validate());
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_GE(s(i, j), 0.0);
        EXPECT_LE(s(i, j), 1.0);
        EXPECT_EQ(s(i, j), s(j, i));
      }
  }
}

TEST(AffinityCsv, RoundTrip)
{
  ConfusionMatrix c(testutil::answer_labels());
  std::mt19937_64 rng(3);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t t = 0; t < 5; ++t) c(p, t) = 1 + rng() % 50;
  std::stringstream cs;
  write_confusion_csv(cs, c);
  EXPECT_EQ(read_confusion_csv(cs), c);

  auto d = testutil::answer_distance();
  std::stringstream ds;
  write_matrix_csv(ds, d);
  EXPECT_EQ(read_distance_csv(ds), d);
}

TEST(Similarity, MonotoneInOffDiagonalCount)
{
  // Moving one instance of true j from the diagonal to predicted i keeps supports fixed.
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng() % 5;
    ConfusionMatrix c(testutil::letters(k));
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t t = 0; t < k; ++t) c(p, t) = rng() % 10 + (p == t ? 1 : 0);
    const std::size_t i = rng() % k, j = (i + 1 + rng() % (k - 1)) % k;
    const double before = similarity(c)(i, j);
    c(j, j) -= 1;
    c(i, j) += 1;
    EXPECT_GE(similarity(c)(i, j), before);
  }
}
