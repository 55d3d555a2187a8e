#ifndef CTREE_HIERARCHY_HPP
#define CTREE_HIERARCHY_HPP

/*
  Chain of binary "label vs rest" classifiers (a nested dichotomy whose tree
  is a caterpillar).

  Node k separates its positive label from the labels still remaining below
  it. It is trained only on instances whose gold label is in its own label
  set; labels peeled off above it never reach it. Prediction walks the chain
  and stops at the first node that answers +1; if every node answers -1 the
  last remaining label is returned.
*/

#include "ctree/clustering.hpp"
#include "ctree/dataset.hpp"
#include "ctree/error.hpp"
#include "ctree/flat_multiclass.hpp"
#include "ctree/linear_svm.hpp"
#include "ctree/prediction.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <span>
#include <string>
#include <vector>

namespace ctree {

struct HierarchyNode
{
  std::size_t positive = 0;
  std::vector<std::size_t> remaining;

  bool contains(std::size_t label) const
  {
    return label == positive || std::find(remaining.begin(), remaining.end(), label) != remaining.end();
  }

  bool operator==(const HierarchyNode&) const = default;
};

struct HierarchySpec
{
  LabelSet labels;
  std::vector<HierarchyNode> nodes;

  /// Label returned when every node answers -1.
  std::size_t terminal_label() const { return nodes.back().remaining.front(); }

  void validate() const
  {
    if (nodes.empty()) throw DataError("hierarchy has no nodes");
    std::vector<bool> seen(labels.size(), false);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto& n = nodes[k];
      if (n.positive >= labels.size() || seen[n.positive]) throw DataError("hierarchy node labels are inconsistent");
      seen[n.positive] = true;
      std::vector<std::size_t> expect;
      if (k + 1 < nodes.size()) {
        expect = nodes[k + 1].remaining;
        expect.push_back(nodes[k + 1].positive);
      } else {
        if (n.remaining.size() != 1) throw DataError("last hierarchy node must leave exactly one label");
        expect = n.remaining;
      }
      auto a = n.remaining, b = expect;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) throw DataError("hierarchy node " + std::to_string(k + 1) + " does not hand its rest to the next node");
    }
    if (terminal_label() >= labels.size() || seen[terminal_label()])
      throw DataError("hierarchy terminal label is inconsistent");
    if (nodes.size() + 1 != labels.size()) throw DataError("hierarchy must cover every label exactly once");
  }

  bool operator==(const HierarchySpec&) const = default;
};

inline HierarchySpec build(const PeelOrder& peel)
{
  const auto perm = peel.permutation();
  HierarchySpec spec{peel.labels, {}};
  for (std::size_t k = 0; k + 1 < perm.size(); ++k)
    spec.nodes.push_back({perm[k], std::vector<std::size_t>(perm.begin() + static_cast<std::ptrdiff_t>(k) + 1, perm.end())});
  spec.validate();
  return spec;
}

struct HierarchyModel
{
  HierarchySpec spec;
  std::vector<LinearModel> models; // one per node
  Standardizer standardizer;

  std::size_t dim() const { return standardizer.dim(); }
};

namespace detail {

inline BinaryProblem node_problem(const HierarchyNode& node, const Dataset& std_train)
{
  return make_binary_problem(
      std_train, [&](std::size_t g) { return node.contains(g); }, [&](std::size_t g) { return g == node.positive; });
}

inline void check_node_support(const HierarchySpec& spec, std::size_t k, const std::vector<std::size_t>& counts,
                               std::size_t folds)
{
  const auto& node = spec.nodes[k];
  auto check = [&](std::size_t label) {
    if (counts[label] < folds)
      throw DataError("hierarchy node " + std::to_string(k + 1) + " (" + spec.labels.name(node.positive) +
                      " vs rest): label '" + spec.labels.name(label) + "' has " + std::to_string(counts[label]) +
                      " training instances, needs at least " + std::to_string(folds));
  };
  check(node.positive);
  for (auto r : node.remaining) check(r);
}

} // namespace detail

/// Tunes and trains one node on standardized training data.
inline LinearModel train_node(const HierarchySpec& spec, std::size_t k, const Dataset& std_train,
                              std::span<const Hyperparams> grid, std::size_t folds, std::uint64_t seed)
{
  detail::check_node_support(spec, k, std_train.class_counts(), folds);
  const auto problem = detail::node_problem(spec.nodes.at(k), std_train);
  const auto hp = tune(problem, grid, folds, seed);
  return train_binary(problem, hp);
}

/// Node k (0-based) tunes its folds with seed + k. All nodes share one
/// standardizer fit on the whole training set.
inline HierarchyModel train_hierarchy(const HierarchySpec& spec, const Dataset& train, std::span<const Hyperparams> grid,
                                      std::size_t folds, std::uint64_t seed)
{
  spec.validate();
  if (!(spec.labels == train.labels)) throw DataError("training data label set does not match the hierarchy");
  const auto counts = train.class_counts();
  for (std::size_t k = 0; k < spec.nodes.size(); ++k) detail::check_node_support(spec, k, counts, folds);

  HierarchyModel model{spec, {}, fit_standardizer(train)};
  const Dataset std_train = apply_standardizer(model.standardizer, train);
  for (std::size_t k = 0; k < spec.nodes.size(); ++k)
    model.models.push_back(train_node(spec, k, std_train, grid, folds, seed + k));
  return model;
}

/// Retrains a single node in place with its own seed; other nodes are untouched.
inline void retrain_node(HierarchyModel& model, std::size_t k, const Dataset& train, std::span<const Hyperparams> grid,
                         std::size_t folds, std::uint64_t seed)
{
  const Dataset std_train = apply_standardizer(model.standardizer, train);
  model.models.at(k) = train_node(model.spec, k, std_train, grid, folds, seed);
}

/// Walks the chain on a standardized vector, recording each node's answer.
inline PredictionRecord cascade_standardized(const HierarchyModel& m, std::span<const double> z)
{
  PredictionRecord rec;
  for (std::size_t k = 0; k < m.models.size(); ++k) {
    const int d = predict_binary(m.models[k], z);
    rec.decisions.push_back(d);
    if (d > 0) {
      rec.predicted = m.spec.nodes[k].positive;
      return rec;
    }
  }
  rec.predicted = m.spec.terminal_label();
  return rec;
}

inline PredictionRecord predict_path(const HierarchyModel& m, std::span<const double> x)
{
  return cascade_standardized(m, m.standardizer.apply(x));
}

inline std::size_t predict(const HierarchyModel& m, std::span<const double> x) { return predict_path(m, x).predicted; }

inline std::vector<PredictionRecord> predict_all(const HierarchyModel& m, const Dataset& test)
{
  if (!(m.spec.labels == test.labels)) throw DataError("test data label set does not match the hierarchy");
  std::vector<PredictionRecord> out;
  out.reserve(test.size());
  for (const auto& in : test.instances) {
    auto rec = predict_path(m, in.features);
    rec.gold = in.gold;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string export_dot(const HierarchyModel& m)
{
  const auto& labels = m.spec.labels;
  const auto& nodes = m.spec.nodes;
  std::ostringstream os;
  os << "digraph hierarchy {\n";
  os << "  rankdir=TB;\n";
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    std::string text = labels.name(nodes[k].positive) + " vs {";
    for (std::size_t i = 0; i < nodes[k].remaining.size(); ++i)
      text += (i ? ", " : "") + labels.name(nodes[k].remaining[i]);
    text += "}";
    os << "  d" << k << " [shape=ellipse, label=" << detail::dot_quote(text) << "];\n";
  }
  for (std::size_t k = 0; k < nodes.size(); ++k)
    os << "  l" << nodes[k].positive << " [shape=box, label=" << detail::dot_quote(labels.name(nodes[k].positive))
       << "];\n";
  const auto term = m.spec.terminal_label();
  os << "  l" << term << " [shape=box, label=" << detail::dot_quote(labels.name(term)) << "];\n";
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    os << "  d" << k << " -> l" << nodes[k].positive << " [label=\"+1\"];\n";
    if (k + 1 < nodes.size())
      os << "  d" << k << " -> d" << (k + 1) << " [label=\"-1\"];\n";
    else
      os << "  d" << k << " -> l" << term << " [label=\"-1\"];\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const HierarchySpec& spec)
{
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : spec.nodes) {
    std::vector<std::string> rest;
    for (auto r : n.remaining) rest.push_back(spec.labels.name(r));
    nodes.push_back({{"positive", spec.labels.name(n.positive)}, {"remaining", rest}});
  }
  return {{"labels", spec.labels.names()}, {"nodes", nodes}};
}

inline HierarchySpec hierarchy_spec_from_json(const nlohmann::json& j)
{
  try {
    HierarchySpec spec{LabelSet(j.at("labels").get<std::vector<std::string>>()), {}};
    for (const auto& nj : j.at("nodes")) {
      HierarchyNode n{spec.labels.index_of(nj.at("positive").get<std::string>()), {}};
      for (const auto& r : nj.at("remaining")) n.remaining.push_back(spec.labels.index_of(r.get<std::string>()));
      spec.nodes.push_back(std::move(n));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed hierarchy spec JSON: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const HierarchyModel& m)
{
  auto j = to_json(m.spec);
  nlohmann::ordered_json out{{"type", "hierarchy"}, {"labels", j["labels"]}, {"standardizer", to_json(m.standardizer)}};
  auto nodes = j["nodes"];
  for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k]["model"] = to_json(m.models.at(k));
  out["nodes"] = nodes;
  return out;
}

inline HierarchyModel hierarchy_model_from_json(const nlohmann::json& j)
{
  try {
    if (j.at("type") != "hierarchy") throw DataError("model JSON is not a hierarchy model");
    HierarchyModel m{hierarchy_spec_from_json(j), {}, standardizer_from_json(j.at("standardizer"))};
    for (const auto& nj : j.at("nodes")) m.models.push_back(linear_model_from_json(nj.at("model")));
    for (const auto& lm : m.models)
      if (lm.dim() != m.dim()) throw DataError("hierarchy node model dimension mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed hierarchy model JSON: ") + e.what());
  }
}

} // namespace ctree

#endif // CTREE_HIERARCHY_HPP
