#ifndef CTREE_AFFINITY_HPP
#define CTREE_AFFINITY_HPP

/*
  Confusion matrix -> label similarity -> label distance.

  counts(p, t) is the number of instances of true label t predicted as p, so
  columns sum to the true-class supports n_t. Two labels are similar when the
  classifier mixes them up in either direction:

    sim(i, j)  = ( counts(i, j) / n_j + counts(j, i) / n_i ) / 2     i != j
    sim(i, i)  = counts(i, i) / n_i
    dist(i, j) = 1 - sim(i, j)                                         i != j
    dist(i, i) = 0
*/

#include "ctree/dataset.hpp"
#include "ctree/error.hpp"

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace ctree {

class ConfusionMatrix
{
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(LabelSet labels) : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

  const LabelSet& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  std::size_t operator()(std::size_t pred, std::size_t truth) const { return counts_.at(pred * size() + truth); }
  std::size_t& operator()(std::size_t pred, std::size_t truth) { return counts_.at(pred * size() + truth); }

  void add(std::size_t pred, std::size_t truth, std::size_t n = 1) { (*this)(pred, truth) += n; }

  /// n_t: instances whose true label is t.
  std::size_t support(std::size_t truth) const
  {
    std::size_t s = 0;
    for (std::size_t p = 0; p < size(); ++p) s += (*this)(p, truth);
    return s;
  }

  std::size_t predicted(std::size_t pred) const
  {
    std::size_t s = 0;
    for (std::size_t t = 0; t < size(); ++t) s += (*this)(pred, t);
    return s;
  }

  std::size_t total() const
  {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  std::size_t correct() const
  {
    std::size_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += (*this)(i, i);
    return s;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o)
  {
    if (!(labels_ == o.labels_)) throw DataError("cannot add confusion matrices over different label sets");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  LabelSet labels_;
  std::vector<std::size_t> counts_;
};

/// Square symmetric real matrix indexed by a LabelSet.
class LabelMatrix
{
 public:
  LabelMatrix() = default;
  explicit LabelMatrix(LabelSet labels) : labels_(std::move(labels)), values_(labels_.size() * labels_.size(), 0.0) {}

  const LabelSet& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values_.at(i * size() + j); }
  double& operator()(std::size_t i, std::size_t j) { return values_.at(i * size() + j); }

  bool operator==(const LabelMatrix&) const = default;

 private:
  LabelSet labels_;
  std::vector<double> values_;
};

struct SimilarityMatrix : LabelMatrix
{
  using LabelMatrix::LabelMatrix;
};

struct DistanceMatrix : LabelMatrix
{
  using LabelMatrix::LabelMatrix;

  /// Throws unless the matrix is exactly symmetric with a zero diagonal and
  /// entries in [0, 1].
  void validate() const
  {
    for (std::size_t i = 0; i < size(); ++i) {
      if ((*this)(i, i) != 0.0) throw DataError("distance matrix diagonal must be 0");
      for (std::size_t j = 0; j < size(); ++j) {
        const double v = (*this)(i, j);
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("distance matrix entries must lie in [0, 1]");
        if (v != (*this)(j, i)) throw DataError("distance matrix must be symmetric");
      }
    }
  }
};

inline SimilarityMatrix similarity(const ConfusionMatrix& conf)
{
  const std::size_t K = conf.size();
  std::vector<double> support(K);
  for (std::size_t t = 0; t < K; ++t) {
    const auto n = conf.support(t);
    if (n == 0) throw DataError("label '" + conf.labels().name(t) + "' has zero support in the confusion matrix");
    support[t] = static_cast<double>(n);
  }
  SimilarityMatrix sim(conf.labels());
  for (std::size_t i = 0; i < K; ++i) {
    sim(i, i) = static_cast<double>(conf(i, i)) / support[i];
    for (std::size_t j = i + 1; j < K; ++j) {
      // (c_ij/n_j + c_ji/n_i)/2 over a common denominator: one rounding step.
      const double num = static_cast<double>(conf(i, j)) * support[i] + static_cast<double>(conf(j, i)) * support[j];
      const double s = num / (2.0 * support[i] * support[j]);
      sim(i, j) = s;
      sim(j, i) = s;
    }
  }
  return sim;
}

inline DistanceMatrix distance(const SimilarityMatrix& sim)
{
  DistanceMatrix dist(sim.labels());
  for (std::size_t i = 0; i < sim.size(); ++i)
    for (std::size_t j = 0; j < sim.size(); ++j) dist(i, j) = i == j ? 0.0 : 1.0 - sim(i, j);
  return dist;
}

// ---------------------------------------------------------------------------
// CSV: a header row and a first column of label names. The corner cell reads
// "predicted\true" for confusion matrices and is empty for the others.

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& conf)
{
  out << "predicted\\true";
  for (const auto& n : conf.labels().names()) out << ',' << n;
  out << '\n';
  for (std::size_t p = 0; p < conf.size(); ++p) {
    out << conf.labels().name(p);
    for (std::size_t t = 0; t < conf.size(); ++t) out << ',' << conf(p, t);
    out << '\n';
  }
}

inline void write_matrix_csv(std::ostream& out, const LabelMatrix& m)
{
  for (const auto& n : m.labels().names()) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.labels().name(i);
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << detail::format_fixed6(m(i, j));
    out << '\n';
  }
}

namespace detail {

/// Reads a labeled square table; returns the label set and row-major cells.
inline std::pair<LabelSet, std::vector<std::string>> read_square_table(std::istream& in, const std::string& source)
{
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(line, ',')) cells.emplace_back(c);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DataError(source + ": empty matrix file");
  std::vector<std::string> names(rows.front().begin() + 1, rows.front().end());
  const std::size_t K = names.size();
  if (rows.size() != K + 1) throw DataError(source + ": expected " + std::to_string(K) + " matrix rows");
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < K; ++i) {
    const auto& r = rows[i + 1];
    if (r.size() != K + 1) throw DataError(source + ": row " + std::to_string(i + 2) + " has wrong column count");
    if (r.front() != names[i])
      throw DataError(source + ": row label '" + r.front() + "' does not match column label '" + names[i] + "'");
    cells.insert(cells.end(), r.begin() + 1, r.end());
  }
  return {LabelSet(std::move(names)), std::move(cells)};
}

} // namespace detail

inline ConfusionMatrix read_confusion_csv(std::istream& in, const std::string& source = "<confusion>")
{
  auto [labels, cells] = detail::read_square_table(in, source);
  ConfusionMatrix conf(labels);
  const std::size_t K = labels.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto v = detail::parse_double(cells[i]);
    if (!v || *v < 0 || *v != std::floor(*v)) throw DataError(source + ": invalid count '" + cells[i] + "'");
    conf(i / K, i % K) = static_cast<std::size_t>(*v);
  }
  return conf;
}

inline DistanceMatrix read_distance_csv(std::istream& in, const std::string& source = "<distance>")
{
  auto [labels, cells] = detail::read_square_table(in, source);
  DistanceMatrix dist(labels);
  const std::size_t K = labels.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto v = detail::parse_double(cells[i]);
    if (!v) throw DataError(source + ": invalid distance '" + cells[i] + "'");
    dist(i / K, i % K) = *v;
  }
  dist.validate();
  return dist;
}

} // namespace ctree

#endif // CTREE_AFFINITY_HPP
