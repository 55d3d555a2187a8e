#ifndef CTREE_FLAT_MULTICLASS_HPP
#define CTREE_FLAT_MULTICLASS_HPP

/*
  One-vs-rest K-way linear classifier: one tuned binary SVM per label, the
  label with the largest decision value wins (lowest index on ties).
  Out-of-fold predictions of this model are the source of the confusion
  matrix that drives label clustering.
*/

#include "ctree/affinity.hpp"
#include "ctree/dataset.hpp"
#include "ctree/linear_svm.hpp"
#include "ctree/prediction.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace ctree {

struct FlatModel
{
  LabelSet labels;
  std::vector<LinearModel> members; // one per label, same order as `labels`
  Standardizer standardizer;

  std::size_t dim() const { return standardizer.dim(); }
};

/// Standardizes on `train`, then tunes and fits one "label vs rest" model per
/// label. Label c tunes its folds with seed + c.
inline FlatModel train_ovr(const Dataset& train, std::span<const Hyperparams> grid, std::size_t k, std::uint64_t seed)
{
  const auto counts = train.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] < k)
      throw DataError("class '" + train.labels.name(c) + "' has " + std::to_string(counts[c]) +
                      " instances, fewer than " + std::to_string(k) + " folds");

  FlatModel model{train.labels, {}, fit_standardizer(train)};
  const Dataset std_train = apply_standardizer(model.standardizer, train);
  for (std::size_t c = 0; c < train.labels.size(); ++c) {
    auto problem = make_binary_problem(
        std_train, [](std::size_t) { return true; }, [c](std::size_t g) { return g == c; });
    const auto hp = tune(problem, grid, k, seed + c);
    model.members.push_back(train_binary(problem, hp));
  }
  return model;
}

/// Member decision values on the raw feature vector (standardized internally).
inline std::vector<double> flat_decision_values(const FlatModel& m, std::span<const double> x)
{
  const auto z = m.standardizer.apply(x);
  std::vector<double> out;
  out.reserve(m.members.size());
  for (const auto& member : m.members) out.push_back(decision_value(member, z));
  return out;
}

/// Index of the largest score; first index wins ties.
inline std::size_t argmax_label(std::span<const double> scores)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

inline std::size_t predict_flat(const FlatModel& m, std::span<const double> x)
{
  return argmax_label(flat_decision_values(m, x));
}

inline std::vector<PredictionRecord> predict_flat_all(const FlatModel& m, const Dataset& test)
{
  std::vector<PredictionRecord> out;
  out.reserve(test.size());
  for (const auto& in : test.instances) out.push_back({in.gold, predict_flat(m, in.features), {}});
  return out;
}

/// One out-of-fold prediction per instance, in dataset order. Fold f's model
/// is tuned with seed + 1000 * (f + 1).
inline std::vector<PredictionRecord> cv_flat_records(const Dataset& ds, std::span<const Hyperparams> grid,
                                                     std::size_t k, std::uint64_t seed)
{
  const auto plan = stratified_folds(ds, k, seed);
  std::vector<PredictionRecord> out(ds.size());
  for (std::size_t f = 0; f < k; ++f) {
    auto [test, train] = plan.split(f);
    const auto model = train_ovr(ds.subset(train), grid, k, seed + 1000 * (f + 1));
    for (auto i : test) {
      const auto& in = ds.instances[i];
      out[i] = {in.gold, predict_flat(model, in.features), {}};
    }
  }
  return out;
}

inline ConfusionMatrix cv_confusion(const Dataset& ds, std::span<const Hyperparams> grid, std::size_t k,
                                    std::uint64_t seed)
{
  return confusion_from_records(ds.labels, cv_flat_records(ds, grid, k, seed));
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const Standardizer& s)
{
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

inline Standardizer standardizer_from_json(const nlohmann::json& j)
{
  Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("stddev").get<std::vector<double>>()};
  if (s.mean.size() != s.stddev.size()) throw DataError("standardizer mean/stddev length mismatch");
  return s;
}

inline nlohmann::ordered_json to_json(const FlatModel& m)
{
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& mm : m.members) members.push_back(to_json(mm));
  return {{"type", "flat"}, {"labels", m.labels.names()}, {"standardizer", to_json(m.standardizer)}, {"models", members}};
}

inline FlatModel flat_model_from_json(const nlohmann::json& j)
{
  try {
    if (j.at("type") != "flat") throw DataError("model JSON is not a flat model");
    FlatModel m{LabelSet(j.at("labels").get<std::vector<std::string>>()), {},
                standardizer_from_json(j.at("standardizer"))};
    for (const auto& mj : j.at("models")) m.members.push_back(linear_model_from_json(mj));
    if (m.members.size() != m.labels.size()) throw DataError("flat model needs one member per label");
    for (const auto& mm : m.members)
      if (mm.dim() != m.dim()) throw DataError("flat model member dimension mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed flat model JSON: ") + e.what());
  }
}

} // namespace ctree

#endif // CTREE_FLAT_MULTICLASS_HPP
