#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

using namespace ctree;

namespace {

std::vector<std::string> names_of(const LabelSet& l, const std::vector<std::size_t>& idx)
{
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(l.name(i));
  return out;
}

} // namespace

TEST(Agglomerate, TwoLabelsSingleMerge)
{
  DistanceMatrix d(testutil::letters(2));
  d(0, 1) = d(1, 0) = 0.4;
  auto dg = agglomerate(d);
  ASSERT_EQ(dg.merges.size(), 1u);
  EXPECT_EQ(dg.merges[0], (Merge{0, 1, 0.4, 2}));
}

TEST(Agglomerate, ThreeLabelAverageExample)
{
  DistanceMatrix d(testutil::letters(3));
  d(0, 1) = d(1, 0) = 0.2;
  d(0, 2) = d(2, 0) = 0.9;
  d(1, 2) = d(2, 1) = 0.8;
  auto dg = agglomerate(d, Linkage::average);
  ASSERT_EQ(dg.merges.size(), 2u);
  EXPECT_EQ(dg.merges[0], (Merge{0, 1, 0.2, 3}));
  EXPECT_EQ(dg.merges[1].left, 2u);
  EXPECT_EQ(dg.merges[1].right, 3u);
  EXPECT_DOUBLE_EQ(dg.merges[1].height, 0.85);
  EXPECT_EQ(dg.members(4), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Agglomerate, MatchesNaiveOracle)
{
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    auto d = testutil::random_distance(k, rng, trial % 2 == 0);
    for (auto link : {Linkage::single, Linkage::complete, Linkage::average})
      EXPECT_EQ(agglomerate(d, link).merges, oracle::agglomerate(d, link)) << "trial " << trial;
  }
}

TEST(Agglomerate, HeightsNeverDecrease)
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = testutil::random_distance(2 + rng() % 6, rng);
    for (auto link : {Linkage::single, Linkage::complete, Linkage::average}) {
      auto dg = agglomerate(d, link);
      for (std::size_t r = 1; r < dg.merges.size(); ++r) EXPECT_GE(dg.merges[r].height, dg.merges[r - 1].height);
    }
  }
}

TEST(Agglomerate, InvariantUnderRelabelling)
{
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 3 + rng() % 4;
    auto d = testutil::random_distance(k, rng);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DistanceMatrix p(testutil::letters(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) p(perm[i], perm[j]) = d(i, j);
    auto a = agglomerate(d, Linkage::average), b = agglomerate(p, Linkage::average);
    for (std::size_t r = 0; r < a.merges.size(); ++r) {
      std::set<std::size_t> ma, mb;
      for (auto i : a.members(a.merges[r].id)) ma.insert(perm[i]);
      for (auto i : b.members(b.merges[r].id)) mb.insert(i);
      EXPECT_EQ(ma, mb);
      EXPECT_NEAR(a.merges[r].height, b.merges[r].height, 1e-12);
    }
  }
}

TEST(Agglomerate, RejectsInvalidDistances)
{
  DistanceMatrix d(testutil::letters(2));
  d(0, 1) = 0.5;
  d(1, 0) = 0.4;
  EXPECT_THROW(agglomerate(d), DataError);
  d(1, 0) = d(0, 1) = 1.5;
  EXPECT_THROW(agglomerate(d), DataError);
}

TEST(PeelOrder, IsolatedLabelAndTightPair)
{
  auto dg = agglomerate(testutil::answer_distance());
  ASSERT_TRUE(is_caterpillar(dg));
  const auto& l = dg.labels();
  EXPECT_EQ(l.name(dg.merges.back().left), "non_domain");
  EXPECT_EQ(names_of(l, peel_order(dg, Direction::H1).permutation()),
            (std::vector<std::string>{"non_domain", "irrelevant", "contradictory", "partially_correct", "correct"}));
  EXPECT_EQ(names_of(l, peel_order(dg, Direction::H2).permutation()),
            (std::vector<std::string>{"correct", "partially_correct", "contradictory", "irrelevant", "non_domain"}));
}

TEST(PeelOrder, TwoLabels)
{
  DistanceMatrix d(testutil::letters(2));
  d(0, 1) = d(1, 0) = 0.3;
  auto dg = agglomerate(d);
  auto h1 = peel_order(dg, Direction::H1), h2 = peel_order(dg, Direction::H2);
  EXPECT_TRUE(h1.split_off.empty());
  EXPECT_TRUE(h2.split_off.empty());
  EXPECT_EQ(build(h1).nodes.size(), 1u);
  // Equal mean distances: the lower index splits off first in H2.
  EXPECT_EQ(h2.permutation(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(h1.permutation(), (std::vector<std::size_t>{1, 0}));
}

TEST(PeelOrder, RejectsNonCaterpillar)
{
  DistanceMatrix d(testutil::letters(4));
  auto set = [&](int i, int j, double v) { d(i, j) = d(j, i) = v; };
  set(0, 1, 0.1);
  set(2, 3, 0.2);
  set(0, 2, 0.9);
  set(0, 3, 0.9);
  set(1, 2, 0.9);
  set(1, 3, 0.9);
  auto dg = agglomerate(d);
  EXPECT_FALSE(is_caterpillar(dg));
  try {
    peel_order(dg, Direction::H1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nested dichotom"), std::string::npos);
  }
}

TEST(PeelOrder, FromPermutationValidates)
{
  EXPECT_THROW(peel_from_permutation(Direction::H1, testutil::letters(3), {0, 0, 1}), DataError);
  EXPECT_THROW(peel_from_permutation(Direction::H1, testutil::letters(3), {0, 1}), DataError);
  auto p = peel_from_permutation(Direction::H2, testutil::letters(3), {2, 0, 1});
  EXPECT_EQ(p.split_off, (std::vector<std::size_t>{2}));
  EXPECT_EQ(p.terminal, (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(DendrogramExport, NewickRoundTrip)
{
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 5;
    auto dg = agglomerate(testutil::random_distance(k, rng), Linkage::average);
    auto root = parse_newick(to_newick(dg));
    std::vector<std::string> leaves;
    std::function<double(const NewickNode&, std::size_t)> walk = [&](const NewickNode& n, std::size_t id) {
      if (n.children.empty()) {
        leaves.push_back(n.name);
        EXPECT_EQ(n.name, dg.labels().name(id));
        return 0.0;
      }
      EXPECT_EQ(n.children.size(), 2u);
      const auto& m = dg.merges.at(id - k);
      const double hl = walk(*n.children[0], m.left) + n.children[0]->length;
      const double hr = walk(*n.children[1], m.right) + n.children[1]->length;
      EXPECT_NEAR(hl, m.height, 1e-12);
      EXPECT_NEAR(hr, m.height, 1e-12);
      return m.height;
    };
    walk(*root, dg.root());
    EXPECT_EQ(leaves.size(), k);
  }
  EXPECT_THROW(parse_newick("(a,b"), DataError);
}

TEST(DendrogramExport, QuotedNewickLabels)
{
  DistanceMatrix d(LabelSet({"not in domain", "it's"}));
  d(0, 1) = d(1, 0) = 0.5;
  auto root = parse_newick(to_newick(agglomerate(d)));
  ASSERT_EQ(root->children.size(), 2u);
  EXPECT_EQ(root->children[0]->name, "not in domain");
  EXPECT_EQ(root->children[1]->name, "it's");
}

TEST(DendrogramExport, DotParses)
{
  auto dg = agglomerate(testutil::answer_distance());
  std::size_t nodes = 0, edges = 0;
  ASSERT_TRUE(testutil::valid_dot(to_dot(dg), nodes, edges)) << to_dot(dg);
  EXPECT_EQ(nodes, 9u);
  EXPECT_EQ(edges, 8u);
}

TEST(DendrogramExport, JsonRoundTrip)
{
  auto dg = agglomerate(testutil::answer_distance(), Linkage::complete);
  auto back = dendrogram_from_json(nlohmann::json::parse(to_json(dg).dump()));
  EXPECT_EQ(back.merges, dg.merges);
  EXPECT_EQ(back.dist, dg.dist);
  EXPECT_EQ(back.linkage, Linkage::complete);
  auto j = nlohmann::json::parse(to_json(dg).dump());
  j["merges"][0]["right"] = 0;
  EXPECT_THROW(dendrogram_from_json(j), DataError);
}
