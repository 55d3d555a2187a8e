#ifndef CTREE_PREDICTION_HPP
#define CTREE_PREDICTION_HPP

#include "ctree/affinity.hpp"
#include "ctree/dataset.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ctree {

struct PredictionRecord
{
  std::size_t gold = 0;
  std::size_t predicted = 0;
  /// Binary decisions (+1 / -1) of the hierarchy nodes visited, in order.
  /// Empty for flat predictions.
  std::vector<int> decisions;

  bool operator==(const PredictionRecord&) const = default;
};

inline ConfusionMatrix confusion_from_records(const LabelSet& labels, std::span<const PredictionRecord> records)
{
  ConfusionMatrix conf(labels);
  for (const auto& r : records) {
    if (r.gold >= labels.size() || r.predicted >= labels.size())
      throw DataError("prediction record label index out of range");
    conf.add(r.predicted, r.gold);
  }
  return conf;
}

} // namespace ctree

#endif // CTREE_PREDICTION_HPP
