#ifndef CTREE_EVALUATION_HPP
#define CTREE_EVALUATION_HPP

/*
  Scores and diagnostics for flat and hierarchical predictions.

  Level scores use gold routing: node k is scored on exactly the instances
  whose true label is in node k's label set, whatever upstream nodes would
  have done with them. The overall score of a hierarchy instead follows each
  instance down the chain, so it also pays for instances that upstream nodes
  send the wrong way.
*/

#include "ctree/affinity.hpp"
#include "ctree/dataset.hpp"
#include "ctree/flat_multiclass.hpp"
#include "ctree/hierarchy.hpp"
#include "ctree/prediction.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctree {

namespace detail {

inline double f1(double tp, double fp, double fn)
{
  const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline void require_records(std::span<const PredictionRecord> records)
{
  if (records.empty()) throw DataError("cannot score an empty prediction set");
}

} // namespace detail

/// Micro-averaged F1 from pooled TP/FP/FN. For single-label predictions
/// this is the accuracy.
inline double micro_f1(std::span<const PredictionRecord> records)
{
  detail::require_records(records);
  double tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    if (r.gold == r.predicted) {
      tp += 1;
    } else {
      fp += 1; // counted against the predicted label
      fn += 1; // and against the gold label
    }
  }
  return detail::f1(tp, fp, fn);
}

inline double accuracy(std::span<const PredictionRecord> records)
{
  detail::require_records(records);
  std::size_t c = 0;
  for (const auto& r : records) c += r.gold == r.predicted;
  return static_cast<double>(c) / static_cast<double>(records.size());
}

/// Unweighted mean of per-label F1 over every label in `labels`; a label
/// absent from both gold and predictions contributes 0.
inline double macro_f1(std::span<const PredictionRecord> records, const LabelSet& labels)
{
  detail::require_records(records);
  const auto conf = confusion_from_records(labels, records);
  double sum = 0.0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const double tp = static_cast<double>(conf(c, c));
    const double fp = static_cast<double>(conf.predicted(c)) - tp;
    const double fn = static_cast<double>(conf.support(c)) - tp;
    sum += detail::f1(tp, fp, fn);
  }
  return sum / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Level-wise scores

struct LevelScore
{
  std::size_t correct = 0;
  std::size_t total = 0;

  /// Binary accuracy on the eligible instances; absent when none were eligible.
  std::optional<double> score() const
  {
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
  }

  LevelScore& operator+=(const LevelScore& o)
  {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

inline std::vector<LevelScore> level_report(const HierarchyModel& m, const Dataset& test)
{
  if (!(m.spec.labels == test.labels)) throw DataError("test data label set does not match the hierarchy");
  std::vector<LevelScore> out(m.spec.nodes.size());
  for (const auto& in : test.instances) {
    const auto z = m.standardizer.apply(in.features);
    for (std::size_t k = 0; k < m.spec.nodes.size(); ++k) {
      const auto& node = m.spec.nodes[k];
      if (!node.contains(in.gold)) continue;
      const int want = in.gold == node.positive ? 1 : -1;
      ++out[k].total;
      if (predict_binary(m.models[k], z) == want) ++out[k].correct;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error propagation

struct NodePropagation
{
  std::size_t reached = 0;      // instances that arrive at the node
  std::size_t false_exits = 0;  // leave here as `positive` but belong elsewhere
  std::size_t false_passes = 0; // belong to `positive` but continue down the chain
};

struct PropagationReport
{
  std::vector<NodePropagation> nodes;
  std::size_t terminal_reached = 0;
  /// Instances that fall through every node but are not the terminal label.
  std::size_t terminal_false_passes = 0;

  /// Every misclassified instance lands in exactly one of these buckets.
  std::size_t misrouted() const
  {
    std::size_t s = terminal_false_passes;
    for (const auto& n : nodes) s += n.false_exits;
    return s;
  }

  PropagationReport& operator+=(const PropagationReport& o)
  {
    if (nodes.size() != o.nodes.size()) throw DataError("cannot merge propagation reports of different depth");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      nodes[k].reached += o.nodes[k].reached;
      nodes[k].false_exits += o.nodes[k].false_exits;
      nodes[k].false_passes += o.nodes[k].false_passes;
    }
    terminal_reached += o.terminal_reached;
    terminal_false_passes += o.terminal_false_passes;
    return *this;
  }
};

/// Replays recorded cascade paths against the chain.
inline PropagationReport propagation_from_records(const HierarchySpec& spec, std::span<const PredictionRecord> records)
{
  PropagationReport rep{std::vector<NodePropagation>(spec.nodes.size()), 0, 0};
  for (const auto& r : records) {
    if (r.decisions.empty() || r.decisions.size() > spec.nodes.size())
      throw DataError("prediction record does not carry a valid cascade path");
    for (std::size_t k = 0; k < r.decisions.size(); ++k) {
      const auto& node = spec.nodes[k];
      auto& np = rep.nodes[k];
      ++np.reached;
      if (r.decisions[k] > 0) {
        if (r.gold != node.positive) ++np.false_exits;
      } else if (r.gold == node.positive) {
        ++np.false_passes;
      }
    }
    if (r.decisions.size() == spec.nodes.size() && r.decisions.back() < 0) {
      ++rep.terminal_reached;
      if (r.gold != spec.terminal_label()) ++rep.terminal_false_passes;
    }
  }
  return rep;
}

inline PropagationReport error_propagation(const HierarchyModel& m, const Dataset& test)
{
  const auto records = predict_all(m, test);
  return propagation_from_records(m.spec, records);
}

// ---------------------------------------------------------------------------
// Error breakdown

struct ErrorShare
{
  std::size_t truth = 0;
  std::size_t predicted = 0;
  std::size_t count = 0;
  double share = 0.0;
};

/// Off-diagonal cells as shares of all misclassified instances, largest
/// first; equal counts order by (true index, predicted index).
inline std::vector<ErrorShare> error_breakdown(const ConfusionMatrix& conf)
{
  std::vector<ErrorShare> out;
  std::size_t errors = 0;
  for (std::size_t t = 0; t < conf.size(); ++t)
    for (std::size_t p = 0; p < conf.size(); ++p)
      if (p != t && conf(p, t) > 0) {
        out.push_back({t, p, conf(p, t), 0.0});
        errors += conf(p, t);
      }
  for (auto& e : out) e.share = static_cast<double>(e.count) / static_cast<double>(errors);
  std::stable_sort(out.begin(), out.end(), [](const ErrorShare& a, const ErrorShare& b) { return a.count > b.count; });
  return out;
}

/// Combined share of the five largest error cells.
inline double top_error_share(std::span<const ErrorShare> breakdown, std::size_t n = 5)
{
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(n, breakdown.size()); ++i) s += breakdown[i].share;
  return s;
}

/// A handful of cells carrying most of the error mass (five cells with at
/// least 60% of all errors).
constexpr double kDominantConfusionShare = 0.6;

inline bool dominant_confusion(std::span<const ErrorShare> breakdown)
{
  return !breakdown.empty() && top_error_share(breakdown) >= kDominantConfusionShare - 1e-9;
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport
{
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::optional<HierarchySpec> spec; // set for hierarchy reports
  std::vector<LevelScore> levels;
  std::optional<PropagationReport> propagation;
  std::vector<ErrorShare> breakdown;
};

inline EvalReport make_report(const LabelSet& labels, std::span<const PredictionRecord> records)
{
  EvalReport rep;
  rep.micro_f1 = micro_f1(records);
  rep.macro_f1 = macro_f1(records, labels);
  rep.confusion = confusion_from_records(labels, records);
  rep.breakdown = error_breakdown(rep.confusion);
  return rep;
}

inline EvalReport evaluate_flat(const FlatModel& m, const Dataset& test)
{
  if (!(m.labels == test.labels)) throw DataError("test data label set does not match the flat model");
  return make_report(test.labels, predict_flat_all(m, test));
}

inline EvalReport evaluate_hierarchy(const HierarchyModel& m, const Dataset& test)
{
  const auto records = predict_all(m, test);
  auto rep = make_report(test.labels, records);
  rep.spec = m.spec;
  rep.levels = level_report(m, test);
  rep.propagation = propagation_from_records(m.spec, records);
  return rep;
}

struct HierarchyCvResult
{
  std::vector<PredictionRecord> records; // dataset order
  std::vector<LevelScore> levels;        // pooled over folds
};

/// k-fold cross-validation of a hierarchy. Fold f trains with seed + 1000 * (f + 1).
inline HierarchyCvResult cv_hierarchy(const HierarchySpec& spec, const Dataset& ds, std::span<const Hyperparams> grid,
                                      std::size_t k, std::uint64_t seed)
{
  const auto plan = stratified_folds(ds, k, seed);
  HierarchyCvResult res{std::vector<PredictionRecord>(ds.size()), std::vector<LevelScore>(spec.nodes.size())};
  for (std::size_t f = 0; f < k; ++f) {
    auto [test, train] = plan.split(f);
    const Dataset test_ds = ds.subset(test);
    const auto model = train_hierarchy(spec, ds.subset(train), grid, k, seed + 1000 * (f + 1));
    const auto recs = predict_all(model, test_ds);
    for (std::size_t i = 0; i < test.size(); ++i) res.records[test[i]] = recs[i];
    const auto lv = level_report(model, test_ds);
    for (std::size_t n = 0; n < lv.size(); ++n) res.levels[n] += lv[n];
  }
  return res;
}

inline EvalReport report_from_cv(const HierarchySpec& spec, const HierarchyCvResult& cv)
{
  auto rep = make_report(spec.labels, cv.records);
  rep.spec = spec;
  rep.levels = cv.levels;
  rep.propagation = propagation_from_records(spec, cv.records);
  return rep;
}

namespace detail {

/// JSON text where every floating-point number is written with exactly six
/// decimals.
inline void dump_fixed(std::string& out, const nlohmann::ordered_json& j, int indent)
{
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
  case nlohmann::json::value_t::number_float: out += format_fixed6(j.get<double>()); return;
  case nlohmann::json::value_t::array:
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out += inner;
      dump_fixed(out, j[i], indent + 1);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "]";
    return;
  case nlohmann::json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out += inner + nlohmann::json(it.key()).dump() + ": ";
      dump_fixed(out, it.value(), indent + 1);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "}";
    return;
  }
  default: out += j.dump(); return;
  }
}

} // namespace detail

inline std::string dump_fixed(const nlohmann::ordered_json& j)
{
  std::string out;
  detail::dump_fixed(out, j, 0);
  return out + "\n";
}

inline nlohmann::ordered_json to_json(const EvalReport& rep)
{
  const auto& labels = rep.confusion.labels();
  nlohmann::ordered_json conf = nlohmann::ordered_json::object();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (std::size_t t = 0; t < labels.size(); ++t) row[labels.name(t)] = rep.confusion(p, t);
    conf[labels.name(p)] = row;
  }

  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  if (rep.spec) {
    for (std::size_t k = 0; k < rep.levels.size(); ++k) {
      const auto& node = rep.spec->nodes[k];
      std::vector<std::string> rest;
      for (auto r : node.remaining) rest.push_back(labels.name(r));
      nlohmann::ordered_json lj{{"level", k + 1},
                                {"positive", labels.name(node.positive)},
                                {"remaining", rest},
                                {"eligible", rep.levels[k].total}};
      if (auto s = rep.levels[k].score())
        lj["score"] = *s;
      else
        lj["score"] = nullptr;
      levels.push_back(lj);
    }
  }

  nlohmann::ordered_json breakdown = nlohmann::ordered_json::array();
  for (const auto& e : rep.breakdown)
    breakdown.push_back(
        {{"true", labels.name(e.truth)}, {"predicted", labels.name(e.predicted)}, {"count", e.count}, {"share", e.share}});

  nlohmann::ordered_json out{{"micro_f1", rep.micro_f1},
                             {"macro_f1", rep.macro_f1},
                             {"confusion", conf},
                             {"levels", levels},
                             {"error_breakdown", breakdown},
                             {"top5_error_share", top_error_share(rep.breakdown)},
                             {"dominant_confusion", dominant_confusion(rep.breakdown)}};

  if (rep.propagation && rep.spec) {
    nlohmann::ordered_json prop = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < rep.propagation->nodes.size(); ++k) {
      const auto& np = rep.propagation->nodes[k];
      prop.push_back({{"level", k + 1},
                      {"positive", labels.name(rep.spec->nodes[k].positive)},
                      {"reached", np.reached},
                      {"false_exits", np.false_exits},
                      {"false_passes", np.false_passes}});
    }
    out["error_propagation"] = {{"levels", prop},
                                {"terminal_label", labels.name(rep.spec->terminal_label())},
                                {"terminal_reached", rep.propagation->terminal_reached},
                                {"terminal_false_passes", rep.propagation->terminal_false_passes}};
  }
  return out;
}

} // namespace ctree

#endif // CTREE_EVALUATION_HPP
