#ifndef CTREE_DATASET_HPP
#define CTREE_DATASET_HPP

/*
  Labeled numeric datasets.

  A Dataset is a dense matrix of real feature vectors, each carrying one gold
  label index into an ordered LabelSet. Label order is fixed when the set is
  created (first appearance when loading a CSV) and every K x K matrix in the
  library is indexed by it.

  Also here: CSV input/output, seeded stratified fold plans, the Gaussian
  synthetic generator and the z-score Standardizer.
*/

#include "ctree/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ctree {

class LabelSet
{
 public:
  LabelSet() = default;

  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names))
  {
    if (names_.size() < 2)
      throw DataError("label set needs at least 2 labels, got " + std::to_string(names_.size()));
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
      if (n.empty()) throw DataError("label names must be non-empty");
      if (!seen.insert(n).second) throw DataError("duplicate label '" + n + "'");
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find(std::string_view name) const
  {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const
  {
    if (auto i = find(name)) return *i;
    throw DataError("unknown label '" + std::string(name) + "'");
  }

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::string> names_;
};

struct Instance
{
  std::vector<double> features;
  std::size_t gold = 0;

  bool operator==(const Instance&) const = default;
};

struct Dataset
{
  LabelSet labels;
  std::size_t dim = 0;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }

  std::vector<std::size_t> class_counts() const
  {
    std::vector<std::size_t> counts(labels.size(), 0);
    for (const auto& in : instances) ++counts[in.gold];
    return counts;
  }

  /// Instances at the given positions, same label set.
  Dataset subset(std::span<const std::size_t> idx) const
  {
    Dataset out{labels, dim, {}};
    out.instances.reserve(idx.size());
    for (auto i : idx) out.instances.push_back(instances.at(i));
    return out;
  }

  void validate() const
  {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& in = instances[i];
      if (in.features.size() != dim)
        throw DataError("instance " + std::to_string(i) + " has " + std::to_string(in.features.size()) +
                        " features, expected " + std::to_string(dim));
      if (in.gold >= labels.size())
        throw DataError("instance " + std::to_string(i) + " has out-of-range label index");
      for (double v : in.features)
        if (!std::isfinite(v)) throw DataError("instance " + std::to_string(i) + " has a non-finite feature");
    }
  }

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s)
{
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Shortest text that parses back to exactly the same double.
inline std::string format_double(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_fixed6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

} // namespace detail

/// Parse CSV text with a header row and exactly one "label" column.
/// `source` is only used in diagnostics.
inline Dataset parse_csv(std::istream& in, const std::string& source = "<csv>")
{
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (!detail::trim(line).empty()) {
      for (auto f : detail::split(line, ',')) header.emplace_back(f);
      break;
    }
  }
  if (header.empty()) throw DataError(source + ": empty file");

  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col) throw DataError(source + ": more than one 'label' column");
      label_col = c;
    }
  }
  if (!label_col) throw DataError(source + ": missing 'label' column");

  std::vector<std::string> names;
  std::vector<Instance> instances;
  const std::size_t dim = header.size() - 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " columns, header has " + std::to_string(header.size()));
    Instance inst;
    inst.features.reserve(dim);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == *label_col) {
        if (cells[c].empty()) throw DataError(source + ": row " + std::to_string(row) + " has an empty label");
        auto it = std::find(names.begin(), names.end(), cells[c]);
        inst.gold = static_cast<std::size_t>(it - names.begin());
        if (it == names.end()) names.emplace_back(cells[c]);
        continue;
      }
      auto v = detail::parse_double(cells[c]);
      if (!v)
        throw DataError(source + ": non-numeric value '" + std::string(cells[c]) + "' at row " +
                        std::to_string(row) + ", column " + header[c]);
      if (!std::isfinite(*v))
        throw DataError(source + ": non-finite value at row " + std::to_string(row) + ", column " + header[c]);
      inst.features.push_back(*v);
    }
    instances.push_back(std::move(inst));
  }
  if (instances.empty()) throw DataError(source + ": no data rows");
  if (names.size() < 2)
    throw DataError(source + ": need at least 2 distinct labels, found " + std::to_string(names.size()));

  return Dataset{LabelSet(std::move(names)), dim, std::move(instances)};
}

inline Dataset load_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

/// Features as f1..fd followed by the label column; values use shortest
/// round-trip formatting.
inline void write_csv(std::ostream& out, const Dataset& ds)
{
  for (std::size_t j = 0; j < ds.dim; ++j) out << 'f' << (j + 1) << ',';
  out << "label\n";
  for (const auto& in : ds.instances) {
    for (double v : in.features) out << detail::format_double(v) << ',';
    out << ds.labels.name(in.gold) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stratified folds

struct FoldPlan
{
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;

  /// Positions held out in fold f and positions used for training.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::size_t f) const
  {
    std::vector<std::size_t> test, train;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      (assignments[i] == f ? test : train).push_back(i);
    return {std::move(test), std::move(train)};
  }

  bool operator==(const FoldPlan&) const = default;
};

/// Per class: shuffle member positions with one seeded engine (classes in
/// index order), then deal them round-robin. The dealing position carries
/// over from one class to the next so whole folds stay balanced too.
inline std::vector<std::size_t> stratified_assignments(std::span<const std::size_t> class_of,
                                                       const std::vector<std::string>& class_names,
                                                       std::size_t k, std::uint64_t seed)
{
  if (k < 2) throw DataError("fold count must be at least 2, got " + std::to_string(k));
  const std::size_t n_classes = class_names.size();
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < class_of.size(); ++i) members.at(class_of[i]).push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (members[c].size() < k)
      throw DataError("class '" + class_names[c] + "' has " + std::to_string(members[c].size()) +
                      " instances, fewer than " + std::to_string(k) + " folds");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(class_of.size(), 0);
  std::size_t next = 0;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    for (auto i : m) {
      out[i] = next;
      next = (next + 1) % k;
    }
  }
  return out;
}

inline FoldPlan stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed)
{
  std::vector<std::size_t> gold;
  gold.reserve(ds.size());
  for (const auto& in : ds.instances) gold.push_back(in.gold);
  return FoldPlan{k, seed, stratified_assignments(gold, ds.labels.names(), k, seed)};
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticClass
{
  std::string name;
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> stddev; // one entry per dimension
};

struct SyntheticSpec
{
  std::vector<SyntheticClass> classes;
};

/// Draws every instance from its class's axis-aligned Gaussian. Instances are
/// emitted class by class in spec order.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed)
{
  if (spec.classes.size() < 2)
    throw DataError("synthetic spec needs at least 2 classes, got " + std::to_string(spec.classes.size()));
  const std::size_t dim = spec.classes.front().mean.size();
  std::vector<std::string> names;
  for (const auto& c : spec.classes) {
    if (c.count == 0) throw DataError("synthetic class '" + c.name + "' has a non-positive count");
    if (c.mean.size() != dim)
      throw DataError("synthetic class '" + c.name + "' has mean of dimension " + std::to_string(c.mean.size()) +
                      ", expected " + std::to_string(dim));
    if (c.stddev.size() != dim)
      throw DataError("synthetic class '" + c.name + "' has stddev of dimension " +
                      std::to_string(c.stddev.size()) + ", expected " + std::to_string(dim));
    for (double s : c.stddev)
      if (!(s >= 0.0) || !std::isfinite(s)) throw DataError("synthetic class '" + c.name + "' has invalid stddev");
    names.push_back(c.name);
  }
  if (dim == 0) throw DataError("synthetic spec has zero dimensions");

  Dataset ds{LabelSet(std::move(names)), dim, {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    for (std::size_t n = 0; n < cls.count; ++n) {
      Instance in;
      in.gold = c;
      in.features.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) in.features[j] = cls.mean[j] + cls.stddev[j] * normal(rng);
      ds.instances.push_back(std::move(in));
    }
  }
  return ds;
}

/*
  Synthetic spec text format:

    # comment
    dim = 30                 (optional; shorter mean lists are zero-padded)

    [class_name]
    count = 500
    mean = 1.5, 0, 0.25      (comma separated)
    stddev = 1               (one value for every dimension, or one per dimension)
*/
inline SyntheticSpec parse_synthetic_spec(std::istream& in, const std::string& source = "<spec>")
{
  struct Pending
  {
    SyntheticClass cls;
    bool has_count = false;
    std::vector<double> stddev;
  };
  std::optional<std::size_t> dim;
  std::vector<Pending> classes;
  std::string line;
  std::size_t lineno = 0;

  auto fail = [&](const std::string& msg) { throw DataError(source + ":" + std::to_string(lineno) + ": " + msg); };
  auto parse_list = [&](std::string_view v) {
    std::vector<double> out;
    for (auto cell : detail::split(v, ',')) {
      auto d = detail::parse_double(cell);
      if (!d || !std::isfinite(*d)) fail("invalid number '" + std::string(cell) + "'");
      out.push_back(*d);
    }
    return out;
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      auto name = detail::trim(s.substr(1, s.size() - 2));
      if (name.empty()) fail("empty class name");
      classes.push_back(Pending{SyntheticClass{std::string(name), 0, {}, {}}, false, {}});
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    auto key = detail::trim(s.substr(0, eq));
    auto value = detail::trim(s.substr(eq + 1));
    if (classes.empty()) {
      if (key != "dim") fail("unknown global key '" + std::string(key) + "'");
      auto d = detail::parse_double(value);
      if (!d || *d < 1 || *d != std::floor(*d)) fail("dim must be a positive integer");
      dim = static_cast<std::size_t>(*d);
      continue;
    }
    auto& cur = classes.back();
    if (key == "count") {
      auto d = detail::parse_double(value);
      if (!d || *d != std::floor(*d)) fail("count must be an integer");
      if (*d < 1) fail("class '" + cur.cls.name + "' has a non-positive count");
      cur.cls.count = static_cast<std::size_t>(*d);
      cur.has_count = true;
    } else if (key == "mean") {
      cur.cls.mean = parse_list(value);
    } else if (key == "stddev") {
      cur.stddev = parse_list(value);
    } else {
      fail("unknown class key '" + std::string(key) + "'");
    }
  }

  SyntheticSpec spec;
  for (auto& p : classes) {
    if (!p.has_count) throw DataError(source + ": class '" + p.cls.name + "' has no count");
    if (p.cls.mean.empty()) throw DataError(source + ": class '" + p.cls.name + "' has no mean");
    if (dim) {
      if (p.cls.mean.size() > *dim)
        throw DataError(source + ": class '" + p.cls.name + "' mean is longer than dim");
      p.cls.mean.resize(*dim, 0.0);
    }
    const std::size_t d = p.cls.mean.size();
    if (p.stddev.empty()) throw DataError(source + ": class '" + p.cls.name + "' has no stddev");
    if (p.stddev.size() == 1) p.stddev.assign(d, p.stddev.front());
    p.cls.stddev = std::move(p.stddev);
    spec.classes.push_back(std::move(p.cls));
  }
  return spec;
}

inline SyntheticSpec load_synthetic_spec(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_synthetic_spec(in, path);
}

// ---------------------------------------------------------------------------
// Standardization

/// z-score transform with population standard deviation. Features with zero
/// variance map to 0.
struct Standardizer
{
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }

  void apply_inplace(std::span<double> x) const
  {
    if (x.size() != mean.size())
      throw DataError("standardizer expects " + std::to_string(mean.size()) + " features, got " +
                      std::to_string(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = stddev[j] > 0.0 ? (x[j] - mean[j]) / stddev[j] : 0.0;
  }

  std::vector<double> apply(std::span<const double> x) const
  {
    std::vector<double> out(x.begin(), x.end());
    apply_inplace(out);
    return out;
  }

  bool operator==(const Standardizer&) const = default;
};

inline Standardizer fit_standardizer(const Dataset& ds)
{
  Standardizer s{std::vector<double>(ds.dim, 0.0), std::vector<double>(ds.dim, 0.0)};
  if (ds.instances.empty()) throw DataError("cannot fit a standardizer on an empty dataset");
  const double n = static_cast<double>(ds.size());
  for (const auto& in : ds.instances)
    for (std::size_t j = 0; j < ds.dim; ++j) s.mean[j] += in.features[j];
  for (auto& m : s.mean) m /= n;
  for (const auto& in : ds.instances)
    for (std::size_t j = 0; j < ds.dim; ++j) {
      const double d = in.features[j] - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (auto& v : s.stddev) v = std::sqrt(v / n);
  return s;
}

inline Dataset apply_standardizer(const Standardizer& s, const Dataset& ds)
{
  if (s.dim() != ds.dim)
    throw DataError("standardizer dimension " + std::to_string(s.dim()) + " does not match dataset dimension " +
                    std::to_string(ds.dim));
  Dataset out = ds;
  for (auto& in : out.instances) s.apply_inplace(in.features);
  return out;
}

} // namespace ctree

#endif // CTREE_DATASET_HPP
