#ifndef CTREE_CLUSTERING_HPP
#define CTREE_CLUSTERING_HPP

/*
  Agglomerative clustering of labels and the peel orders derived from it.

  Cluster ids 0..K-1 are the singleton labels; the merge made in round r
  (0-based) creates cluster K + r. Each round merges the closest pair of
  active clusters, with cluster distances recomputed from the original label
  distances (single = min, complete = max, average = mean over cross pairs).
  Equal distances resolve to the smallest (lower id, higher id) pair.

  When every merge after the first attaches one singleton to the cluster
  built so far (a "caterpillar"), the dendrogram defines a total order on
  labels: the most distant label is attached last. H1 peels labels off in
  that order, most distant first, ending with the first-merged pair. H2 is
  the same permutation reversed.
*/

#include "ctree/affinity.hpp"
#include "ctree/dataset.hpp"
#include "ctree/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctree {

enum class Linkage { single, complete, average };

inline std::string to_string(Linkage l)
{
  switch (l) {
  case Linkage::single: return "single";
  case Linkage::complete: return "complete";
  case Linkage::average: return "average";
  }
  return "average";
}

inline Linkage parse_linkage(std::string_view s)
{
  if (s == "single") return Linkage::single;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  throw DataError("unknown linkage '" + std::string(s) + "' (expected single, complete or average)");
}

struct Merge
{
  std::size_t left = 0;  // lower cluster id
  std::size_t right = 0; // higher cluster id
  double height = 0.0;
  std::size_t id = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram
{
  DistanceMatrix dist;
  Linkage linkage = Linkage::average;
  std::vector<Merge> merges;

  const LabelSet& labels() const { return dist.labels(); }
  std::size_t leaf_count() const { return dist.size(); }
  std::size_t root() const { return 2 * leaf_count() - 2; }

  /// Label indices under a cluster id, ascending.
  std::vector<std::size_t> members(std::size_t id) const
  {
    const std::size_t K = leaf_count();
    if (id < K) return {id};
    const auto& m = merges.at(id - K);
    auto a = members(m.left);
    auto b = members(m.right);
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    return a;
  }

  double height(std::size_t id) const { return id < leaf_count() ? 0.0 : merges.at(id - leaf_count()).height; }
};

/// Distance between two clusters given as ascending label lists.
inline double linkage_distance(const DistanceMatrix& d, const std::vector<std::size_t>& a,
                               const std::vector<std::size_t>& b, Linkage linkage)
{
  double acc = linkage == Linkage::single ? std::numeric_limits<double>::infinity()
               : linkage == Linkage::complete ? -std::numeric_limits<double>::infinity()
                                              : 0.0;
  for (auto i : a)
    for (auto j : b) {
      const double v = d(i, j);
      switch (linkage) {
      case Linkage::single: acc = std::min(acc, v); break;
      case Linkage::complete: acc = std::max(acc, v); break;
      case Linkage::average: acc += v; break;
      }
    }
  if (linkage == Linkage::average) acc /= static_cast<double>(a.size() * b.size());
  return acc;
}

inline Dendrogram agglomerate(const DistanceMatrix& dist, Linkage linkage = Linkage::average)
{
  dist.validate();
  const std::size_t K = dist.size();
  if (K < 2) throw DataError("clustering needs at least 2 labels");

  Dendrogram out{dist, linkage, {}};
  std::vector<std::size_t> active(K);
  std::vector<std::vector<std::size_t>> members(K);
  for (std::size_t i = 0; i < K; ++i) {
    active[i] = i;
    members[i] = {i};
  }

  for (std::size_t round = 0; round + 1 < K; ++round) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double v = linkage_distance(dist, members[active[a]], members[active[b]], linkage);
        if (v < best) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    const std::size_t left = active[best_a], right = active[best_b];
    const std::size_t id = K + round;
    std::vector<std::size_t> joined = members[left];
    joined.insert(joined.end(), members[right].begin(), members[right].end());
    std::sort(joined.begin(), joined.end());
    members.push_back(std::move(joined));
    out.merges.push_back({left, right, best, id});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_a));
    active.push_back(id); // ids grow, so `active` stays sorted
  }
  return out;
}

inline bool is_caterpillar(const Dendrogram& d)
{
  const std::size_t K = d.leaf_count();
  for (std::size_t r = 1; r < d.merges.size(); ++r) {
    const auto& m = d.merges[r];
    if (!(m.left < K && m.right == K + r - 1)) return false;
  }
  return true;
}

enum class Direction { H1, H2 };

inline std::string to_string(Direction d) { return d == Direction::H1 ? "H1" : "H2"; }

inline Direction parse_direction(std::string_view s)
{
  if (s == "H1" || s == "h1") return Direction::H1;
  if (s == "H2" || s == "h2") return Direction::H2;
  throw DataError("unknown direction '" + std::string(s) + "' (expected H1 or H2)");
}

struct PeelOrder
{
  Direction direction = Direction::H1;
  LabelSet labels;
  std::vector<std::size_t> split_off; // K-2 labels, peeled in this order
  std::pair<std::size_t, std::size_t> terminal;

  /// split_off followed by the terminal pair.
  std::vector<std::size_t> permutation() const
  {
    auto p = split_off;
    p.push_back(terminal.first);
    p.push_back(terminal.second);
    return p;
  }

  bool operator==(const PeelOrder&) const = default;
};

inline PeelOrder peel_from_permutation(Direction dir, const LabelSet& labels, const std::vector<std::size_t>& perm)
{
  const std::size_t K = perm.size();
  if (K != labels.size()) throw DataError("peel permutation length does not match the label set");
  std::vector<bool> seen(K, false);
  for (auto p : perm) {
    if (p >= K || seen[p]) throw DataError("peel order is not a permutation of the label set");
    seen[p] = true;
  }
  return PeelOrder{dir, labels, {perm.begin(), perm.end() - 2}, {perm[K - 2], perm[K - 1]}};
}

/// H1: last-attached singleton first, the first-merged pair last. Of that
/// pair, the member closer on average to all other labels comes first, so in
/// H2 (the reversed permutation) the more distant member splits off first.
/// Equal averages put the lower label index first in H2.
inline PeelOrder peel_order(const Dendrogram& d, Direction dir)
{
  const std::size_t K = d.leaf_count();
  if (d.merges.size() + 1 != K) throw DataError("dendrogram must have exactly K-1 merges");
  if (!is_caterpillar(d))
    throw DataError("dendrogram is not a caterpillar; peel orders only exist for chain-shaped hierarchies "
                    "(general nested dichotomies over arbitrary topologies are not supported)");

  std::vector<std::size_t> h1;
  for (std::size_t r = d.merges.size() - 1; r >= 1; --r) h1.push_back(d.merges[r].left);

  auto mean_dist = [&](std::size_t p) {
    double s = 0.0;
    for (std::size_t q = 0; q < K; ++q)
      if (q != p) s += d.dist(p, q);
    return s / static_cast<double>(K - 1);
  };
  const std::size_t a = d.merges[0].left, b = d.merges[0].right; // a < b
  const double da = mean_dist(a), db = mean_dist(b);
  const bool a_first_in_h2 = da >= db;
  const std::size_t h2_first = a_first_in_h2 ? a : b;
  const std::size_t h2_second = a_first_in_h2 ? b : a;
  h1.push_back(h2_second);
  h1.push_back(h2_first);

  if (dir == Direction::H2) std::reverse(h1.begin(), h1.end());
  return peel_from_permutation(dir, d.labels(), h1);
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline std::string dot_quote(std::string_view s)
{
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string newick_label(std::string_view s)
{
  bool plain = !s.empty();
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || std::string_view("()[]':;,").find(c) != std::string_view::npos)
      plain = false;
  if (plain) return std::string(s);
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

} // namespace detail

inline std::string to_dot(const Dendrogram& d)
{
  std::ostringstream os;
  const std::size_t K = d.leaf_count();
  os << "digraph dendrogram {\n";
  os << "  node [shape=box];\n";
  for (std::size_t i = 0; i < K; ++i) os << "  n" << i << " [label=" << detail::dot_quote(d.labels().name(i)) << "];\n";
  for (const auto& m : d.merges)
    os << "  n" << m.id << " [shape=ellipse, label=" << detail::dot_quote(detail::format_fixed6(m.height)) << "];\n";
  for (const auto& m : d.merges) {
    os << "  n" << m.id << " -> n" << m.left << ";\n";
    os << "  n" << m.id << " -> n" << m.right << ";\n";
  }
  os << "}\n";
  return os.str();
}

/// Rooted Newick with branch length = parent height - child height.
inline std::string to_newick(const Dendrogram& d)
{
  const std::size_t K = d.leaf_count();
  auto rec = [&](auto&& self, std::size_t id) -> std::string {
    if (id < K) return detail::newick_label(d.labels().name(id));
    const auto& m = d.merges.at(id - K);
    return "(" + self(self, m.left) + ":" + detail::format_double(m.height - d.height(m.left)) + "," +
           self(self, m.right) + ":" + detail::format_double(m.height - d.height(m.right)) + ")";
  };
  return rec(rec, d.root()) + ";";
}

struct NewickNode
{
  std::string name;
  double length = 0.0;
  std::vector<std::unique_ptr<NewickNode>> children;
};

/// Parser for the subset of Newick written by to_newick (quoted or plain
/// labels, optional branch lengths, any arity).
inline std::unique_ptr<NewickNode> parse_newick(std::string_view text)
{
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw DataError("newick parse error at offset " + std::to_string(pos) + ": " + msg);
  };
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto parse_label = [&]() {
    skip_ws();
    std::string out;
    if (pos < text.size() && text[pos] == '\'') {
      ++pos;
      for (;;) {
        if (pos >= text.size()) fail("unterminated quoted label");
        if (text[pos] == '\'') {
          if (pos + 1 < text.size() && text[pos + 1] == '\'') {
            out += '\'';
            pos += 2;
            continue;
          }
          ++pos;
          break;
        }
        out += text[pos++];
      }
      return out;
    }
    while (pos < text.size() && std::string_view("(),:;").find(text[pos]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(text[pos])))
      out += text[pos++];
    return out;
  };
  auto rec = [&](auto&& self) -> std::unique_ptr<NewickNode> {
    auto node = std::make_unique<NewickNode>();
    skip_ws();
    if (pos < text.size() && text[pos] == '(') {
      ++pos;
      for (;;) {
        node->children.push_back(self(self));
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input");
        if (text[pos] == ',') {
          ++pos;
          continue;
        }
        if (text[pos] == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    node->name = parse_label();
    skip_ws();
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      skip_ws();
      std::size_t end = pos;
      while (end < text.size() && std::string_view("(),:;").find(text[end]) == std::string_view::npos &&
             !std::isspace(static_cast<unsigned char>(text[end])))
        ++end;
      auto v = detail::parse_double(text.substr(pos, end - pos));
      if (!v) fail("invalid branch length");
      node->length = *v;
      pos = end;
    }
    if (node->children.empty() && node->name.empty()) fail("leaf without a label");
    return node;
  };
  auto root = rec(rec);
  skip_ws();
  if (pos >= text.size() || text[pos] != ';') fail("expected ';'");
  ++pos;
  skip_ws();
  if (pos != text.size()) fail("trailing characters");
  return root;
}

inline nlohmann::ordered_json to_json(const Dendrogram& d)
{
  const std::size_t K = d.leaf_count();
  nlohmann::ordered_json dist = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < K; ++j) row.push_back(d.dist(i, j));
    dist.push_back(row);
  }
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const auto& m : d.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"id", m.id}});
  return {{"labels", d.labels().names()}, {"linkage", to_string(d.linkage)}, {"distances", dist}, {"merges", merges}};
}

inline Dendrogram dendrogram_from_json(const nlohmann::json& j)
{
  try {
    LabelSet labels(j.at("labels").get<std::vector<std::string>>());
    const std::size_t K = labels.size();
    DistanceMatrix dist(labels);
    const auto rows = j.at("distances").get<std::vector<std::vector<double>>>();
    if (rows.size() != K) throw DataError("dendrogram distance matrix has wrong size");
    for (std::size_t i = 0; i < K; ++i) {
      if (rows[i].size() != K) throw DataError("dendrogram distance matrix has wrong size");
      for (std::size_t jj = 0; jj < K; ++jj) dist(i, jj) = rows[i][jj];
    }
    dist.validate();
    Dendrogram d{dist, parse_linkage(j.at("linkage").get<std::string>()), {}};
    std::vector<bool> used(2 * K - 1, false);
    for (const auto& mj : j.at("merges")) {
      Merge m{mj.at("left"), mj.at("right"), mj.at("height"), mj.at("id")};
      if (m.id != K + d.merges.size() || m.left >= m.id || m.right >= m.id || m.left >= m.right || used[m.left] ||
          used[m.right])
        throw DataError("dendrogram merge list is inconsistent");
      used[m.left] = used[m.right] = true;
      d.merges.push_back(m);
    }
    if (d.merges.size() + 1 != K) throw DataError("dendrogram must have exactly K-1 merges");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dendrogram JSON: ") + e.what());
  }
}

} // namespace ctree

#endif // CTREE_CLUSTERING_HPP
