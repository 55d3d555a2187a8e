#ifndef CTREE_LINEAR_SVM_HPP
#define CTREE_LINEAR_SVM_HPP

/*
  Binary linear soft-margin SVM trained by stochastic subgradient descent on
  the regularized hinge loss (Pegasos schedule).

    objective(w, b) = lambda/2 * |w|^2 + 1/n * sum_i max(0, 1 - y_i (w.x_i + b))

  Step t (counted across epochs, starting at 1) uses learning rate
  1/(lambda t) on one instance; instances are visited in a freshly shuffled
  order every epoch. After each step w is projected back onto the ball of
  radius 1/sqrt(lambda), which contains the optimum. The bias is an implicit
  constant-1 feature and is neither regularized nor projected. Training is a
  pure function of (problem, hyperparameters).
*/

#include "ctree/dataset.hpp"
#include "ctree/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ctree {

struct Hyperparams
{
  double lambda = 1e-2;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw TrainingError("lambda must be positive and finite");
    if (epochs < 1) throw TrainingError("epochs must be at least 1");
  }

  bool operator==(const Hyperparams&) const = default;
};

/// lambda in {1e-4, 1e-3, 1e-2, 1e-1, 1}, 50 epochs.
inline std::vector<Hyperparams> default_grid(std::uint64_t seed = 0, std::size_t epochs = 50)
{
  std::vector<Hyperparams> grid;
  for (double l : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) grid.push_back({l, epochs, seed});
  return grid;
}

struct LinearModel
{
  std::vector<double> weights;
  double bias = 0.0;
  Hyperparams hp;
  std::size_t instance_count = 0;
  std::size_t epochs_run = 0;

  std::size_t dim() const { return weights.size(); }

  bool operator==(const LinearModel&) const = default;
};

/// Row-major feature matrix with +1/-1 targets.
struct BinaryProblem
{
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> signs;

  std::size_t size() const { return signs.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  void add(std::span<const double> x, int sign)
  {
    if (x.size() != dim)
      throw DataError("feature vector of length " + std::to_string(x.size()) + " added to problem of dimension " +
                      std::to_string(dim));
    features.insert(features.end(), x.begin(), x.end());
    signs.push_back(sign > 0 ? 1 : -1);
  }

  BinaryProblem subset(std::span<const std::size_t> idx) const
  {
    BinaryProblem out{dim, {}, {}};
    out.features.reserve(idx.size() * dim);
    out.signs.reserve(idx.size());
    for (auto i : idx) out.add(row(i), signs[i]);
    return out;
  }

  void validate() const
  {
    if (features.size() != signs.size() * dim) throw DataError("binary problem storage is inconsistent");
    bool pos = false, neg = false;
    for (int s : signs) (s > 0 ? pos : neg) = true;
    if (!pos || !neg) throw TrainingError("binary problem needs at least one positive and one negative instance");
  }
};

/// Builds a problem from a dataset: instances whose gold label satisfies
/// `keep` are included, `positive` decides the sign.
template <typename Keep, typename Positive>
BinaryProblem make_binary_problem(const Dataset& ds, Keep&& keep, Positive&& positive)
{
  BinaryProblem p{ds.dim, {}, {}};
  for (const auto& in : ds.instances)
    if (keep(in.gold)) p.add(in.features, positive(in.gold) ? 1 : -1);
  return p;
}

inline double decision_value(const LinearModel& m, std::span<const double> x)
{
  if (x.size() != m.weights.size())
    throw DataError("feature vector of length " + std::to_string(x.size()) + " given to model of dimension " +
                    std::to_string(m.weights.size()));
  return std::inner_product(m.weights.begin(), m.weights.end(), x.begin(), 0.0) + m.bias;
}

/// +1 when the decision value is >= 0 (an exact 0 goes to the positive side).
inline int predict_binary(const LinearModel& m, std::span<const double> x)
{
  return decision_value(m, x) >= 0.0 ? 1 : -1;
}

inline double hinge_objective(const BinaryProblem& p, std::span<const double> w, double b, double lambda)
{
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto x = p.row(i);
    const double margin = p.signs[i] * (std::inner_product(w.begin(), w.end(), x.begin(), 0.0) + b);
    loss += std::max(0.0, 1.0 - margin);
  }
  const double sq = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  return 0.5 * lambda * sq + loss / static_cast<double>(p.size());
}

struct TrainOptions
{
  /// When set, receives the regularized hinge objective after every epoch.
  std::vector<double>* objective_trace = nullptr;
};

inline LinearModel train_binary(const BinaryProblem& problem, const Hyperparams& hp, TrainOptions opts = {})
{
  hp.validate();
  problem.validate();

  const std::size_t n = problem.size();
  const std::size_t d = problem.dim;
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(hp.seed);

  const double radius_sq = 1.0 / hp.lambda;
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (hp.lambda * static_cast<double>(t));
      const auto x = problem.row(i);
      const double y = problem.signs[i];
      const double margin = y * (std::inner_product(w.begin(), w.end(), x.begin(), 0.0) + b);
      const double shrink = 1.0 - eta * hp.lambda;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] = shrink * w[j] + eta * y * x[j];
        b += eta * y;
      } else {
        for (auto& wj : w) wj *= shrink;
      }
      const double norm_sq = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
      if (norm_sq > radius_sq) {
        const double f = std::sqrt(radius_sq / norm_sq);
        for (auto& wj : w) wj *= f;
      }
    }
    if (opts.objective_trace) opts.objective_trace->push_back(hinge_objective(problem, w, b, hp.lambda));
  }

  for (double v : w)
    if (!std::isfinite(v)) throw TrainingError("training diverged to non-finite weights");
  if (!std::isfinite(b)) throw TrainingError("training diverged to a non-finite bias");

  return LinearModel{std::move(w), b, hp, n, hp.epochs};
}

struct TuneResult
{
  Hyperparams best;
  /// Out-of-fold correct counts, one per grid point.
  std::vector<std::size_t> correct;
  std::size_t total = 0;
};

/// k-fold grid search maximizing pooled out-of-fold accuracy. Ties go to
/// the smaller lambda, then to the earlier grid position.
inline TuneResult tune_detailed(const BinaryProblem& problem, std::span<const Hyperparams> grid, std::size_t k,
                                std::uint64_t seed)
{
  if (grid.empty()) throw TrainingError("hyperparameter grid is empty");
  problem.validate();
  for (const auto& hp : grid) hp.validate();

  std::vector<std::size_t> cls(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i) cls[i] = problem.signs[i] > 0 ? 1 : 0;
  const auto folds = stratified_assignments(cls, {"negative", "positive"}, k, seed);

  TuneResult res{grid.front(), std::vector<std::size_t>(grid.size(), 0), problem.size()};
  if (grid.size() == 1) return res;

  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(i);
    const auto sub = problem.subset(train);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto model = train_binary(sub, grid[g]);
      for (auto i : test)
        if (predict_binary(model, problem.row(i)) == problem.signs[i]) ++res.correct[g];
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (res.correct[g] > res.correct[best] ||
        (res.correct[g] == res.correct[best] && grid[g].lambda < grid[best].lambda))
      best = g;
  }
  res.best = grid[best];
  return res;
}

inline Hyperparams tune(const BinaryProblem& problem, std::span<const Hyperparams> grid, std::size_t k,
                        std::uint64_t seed)
{
  return tune_detailed(problem, grid, k, seed).best;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const LinearModel& m)
{
  return {{"weights", m.weights},
          {"bias", m.bias},
          {"lambda", m.hp.lambda},
          {"epochs", m.hp.epochs},
          {"seed", m.hp.seed},
          {"instance_count", m.instance_count}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j)
{
  try {
    LinearModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.hp.lambda = j.at("lambda").get<double>();
    m.hp.epochs = j.at("epochs").get<std::size_t>();
    m.hp.seed = j.at("seed").get<std::uint64_t>();
    m.instance_count = j.value("instance_count", std::size_t{0});
    m.epochs_run = m.hp.epochs;
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed linear model JSON: ") + e.what());
  }
}

} // namespace ctree

#endif // CTREE_LINEAR_SVM_HPP
