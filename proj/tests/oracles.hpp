#pragma once

// Brute-force reference implementations used by unit and acceptance tests.
// They share no code with the library beyond its data types.

#include "ctree/ctree.hpp"

#include <limits>
#include <map>
#include <set>
#include <vector>

namespace oracle {

/// Micro F1 from pooled per-class TP/FP/FN counts.
inline double micro_f1(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred, std::size_t k)
{
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pred[i] == c && gold[i] == c) tp += 1;
      if (pred[i] == c && gold[i] != c) fp += 1;
      if (pred[i] != c && gold[i] == c) fn += 1;
    }
  if (tp == 0) return 0.0;
  const double p = tp / (tp + fp), r = tp / (tp + fn);
  return 2 * p * r / (p + r);
}

/// Unweighted mean of per-class F1 over all k classes; absent classes score 0.
inline double macro_f1(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred, std::size_t k)
{
  double sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      tp += pred[i] == c && gold[i] == c;
      fp += pred[i] == c && gold[i] != c;
      fn += pred[i] != c && gold[i] == c;
    }
    if (tp == 0) continue;
    const double p = tp / (tp + fp), r = tp / (tp + fn);
    sum += 2 * p * r / (p + r);
  }
  return sum / static_cast<double>(k);
}

/// Naive re-scan agglomeration: every round recomputes every cluster pair
/// from leaf sets; ties go to the lexicographically smallest id pair.
inline std::vector<ctree::Merge> agglomerate(const ctree::DistanceMatrix& d, ctree::Linkage linkage)
{
  const std::size_t K = d.size();
  std::map<std::size_t, std::set<std::size_t>> live;
  for (std::size_t i = 0; i < K; ++i) live[i] = {i};
  std::vector<ctree::Merge> out;
  std::size_t next = K;
  while (live.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (auto a = live.begin(); a != live.end(); ++a)
      for (auto b = std::next(a); b != live.end(); ++b) {
        double v = 0;
        if (linkage == ctree::Linkage::single) v = std::numeric_limits<double>::infinity();
        if (linkage == ctree::Linkage::complete) v = -std::numeric_limits<double>::infinity();
        for (auto i : a->second)
          for (auto j : b->second) {
            if (linkage == ctree::Linkage::single) v = std::min(v, d(i, j));
            else if (linkage == ctree::Linkage::complete) v = std::max(v, d(i, j));
            else v += d(i, j);
          }
        if (linkage == ctree::Linkage::average) v /= static_cast<double>(a->second.size() * b->second.size());
        if (v < best) {
          best = v;
          ba = a->first;
          bb = b->first;
        }
      }
    auto joined = live[ba];
    joined.insert(live[bb].begin(), live[bb].end());
    live.erase(ba);
    live.erase(bb);
    live[next] = joined;
    out.push_back({ba, bb, best, next});
    ++next;
  }
  return out;
}

/// Evaluates every node on x, then picks the first +1; falls back to the
/// terminal label.
inline std::size_t cascade(const ctree::HierarchyModel& m, const std::vector<double>& x)
{
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double sd = m.standardizer.stddev[j];
    z[j] = sd > 0 ? (x[j] - m.standardizer.mean[j]) / sd : 0.0;
  }
  std::vector<bool> fires;
  for (const auto& lm : m.models) {
    double v = lm.bias;
    for (std::size_t j = 0; j < z.size(); ++j) v += lm.weights[j] * z[j];
    fires.push_back(v >= 0);
  }
  for (std::size_t k = 0; k < fires.size(); ++k)
    if (fires[k]) return m.spec.nodes[k].positive;
  return m.spec.nodes.back().remaining.front();
}

} // namespace oracle
