#ifndef CTREE_PIPELINE_HPP
#define CTREE_PIPELINE_HPP

/*
  End-to-end experiment:

    data -> cross-validated flat OvR -> confusion -> similarity/distance
         -> dendrogram -> peel order(s) -> hierarchy (CV report + final model)
         -> optional held-out test reports -> manifest

  One run seed fans out to fixed per-stage offsets, so each stage can be
  reproduced on its own. Every artifact is written to a temporary file and
  renamed into place.
*/

#include "ctree/affinity.hpp"
#include "ctree/clustering.hpp"
#include "ctree/dataset.hpp"
#include "ctree/error.hpp"
#include "ctree/evaluation.hpp"
#include "ctree/flat_multiclass.hpp"
#include "ctree/hierarchy.hpp"
#include "ctree/linear_svm.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ctree {

/// Per-stage seed offsets added to the run seed.
namespace seed_offset {
inline constexpr std::uint64_t generate = 0;
inline constexpr std::uint64_t flat_cv = 101;
inline constexpr std::uint64_t hierarchy_cv = 202;
inline constexpr std::uint64_t flat_final = 303;
inline constexpr std::uint64_t hierarchy_final = 404;
} // namespace seed_offset

struct RunConfig
{
  std::optional<std::string> train_csv;
  std::optional<std::string> test_csv;
  std::optional<std::string> synthetic_spec;
  std::string out_dir = "out";
  std::size_t k = 5;
  std::uint64_t seed = 1;
  Linkage linkage = Linkage::average;
  std::vector<Direction> directions{Direction::H1, Direction::H2};
  std::vector<double> lambdas{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::size_t epochs = 50;

  void validate() const
  {
    if (train_csv.has_value() == synthetic_spec.has_value())
      throw DataError("exactly one of a training CSV or a synthetic spec is required");
    if (k < 2) throw DataError("fold count must be at least 2");
    if (directions.empty()) throw DataError("at least one hierarchy direction is required");
    if (lambdas.empty()) throw TrainingError("hyperparameter grid is empty");
  }

  std::vector<Hyperparams> grid(std::uint64_t grid_seed) const
  {
    std::vector<Hyperparams> g;
    for (double l : lambdas) g.push_back({l, epochs, grid_seed});
    return g;
  }
};

/// A pipeline failure tagged with the stage it happened in.
class StageError : public std::runtime_error
{
 public:
  enum class Kind { data, training };

  StageError(std::string stage, Kind kind, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)), kind_(kind)
  {
  }

  const std::string& stage() const { return stage_; }
  Kind kind() const { return kind_; }

 private:
  std::string stage_;
  Kind kind_;
};

inline std::string sha256_hex(const std::string& bytes)
{
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

/// Writes via a temporary sibling and rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunSummary
{
  std::map<std::string, std::string> checksums; // artifact file -> sha256
  EvalReport flat_cv;
  std::map<std::string, EvalReport> hierarchy_cv; // by direction name
  std::optional<Dendrogram> dendrogram;
};

namespace detail {

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const TrainingError& e) {
    throw StageError(stage, StageError::Kind::training, e.what());
  } catch (const DataError& e) {
    throw StageError(stage, StageError::Kind::data, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, StageError::Kind::data, e.what());
  }
}

template <typename Writer>
std::string render(Writer&& w)
{
  std::ostringstream os;
  w(os);
  return os.str();
}

} // namespace detail

inline RunSummary run_pipeline(const RunConfig& cfg)
{
  namespace fs = std::filesystem;
  RunSummary summary;
  const fs::path out = cfg.out_dir;

  auto emit = [&](const std::string& name, const std::string& content) {
    detail::run_stage("write", [&] {
      write_file_atomic(out / name, content);
      summary.checksums[name] = sha256_hex(content);
    });
  };

  detail::run_stage("config", [&] {
    cfg.validate();
    fs::create_directories(out);
  });

  const Dataset train = detail::run_stage("load", [&] {
    if (cfg.train_csv) return load_csv(*cfg.train_csv);
    return generate_synthetic(load_synthetic_spec(*cfg.synthetic_spec), cfg.seed + seed_offset::generate);
  });
  if (cfg.synthetic_spec) emit("train_generated.csv", detail::render([&](std::ostream& os) { write_csv(os, train); }));

  std::optional<Dataset> test;
  if (cfg.test_csv) {
    test = detail::run_stage("load", [&] {
      auto t = load_csv(*cfg.test_csv);
      if (t.dim != train.dim) throw DataError("test data dimension does not match training data");
      // Re-index test labels into the training label order.
      std::vector<std::size_t> remap;
      for (const auto& n : t.labels.names()) {
        auto idx = train.labels.find(n);
        if (!idx) throw DataError("test label '" + n + "' does not occur in the training data");
        remap.push_back(*idx);
      }
      for (auto& in : t.instances) in.gold = remap[in.gold];
      t.labels = train.labels;
      return t;
    });
  }

  const auto flat_records = detail::run_stage(
      "confusion", [&] { return cv_flat_records(train, cfg.grid(cfg.seed + seed_offset::flat_cv), cfg.k, cfg.seed + seed_offset::flat_cv); });
  summary.flat_cv = make_report(train.labels, flat_records);
  const auto& conf = summary.flat_cv.confusion;
  emit("confusion.csv", detail::render([&](std::ostream& os) { write_confusion_csv(os, conf); }));
  emit("report_flat.json", dump_fixed(to_json(summary.flat_cv)));

  const auto [sim, dist] = detail::run_stage("affinity", [&] {
    auto s = similarity(conf);
    return std::pair{s, distance(s)};
  });
  emit("similarity.csv", detail::render([&](std::ostream& os) { write_matrix_csv(os, sim); }));
  emit("distance.csv", detail::render([&](std::ostream& os) { write_matrix_csv(os, dist); }));

  const Dendrogram dendro = detail::run_stage("cluster", [&] { return agglomerate(dist, cfg.linkage); });
  summary.dendrogram = dendro;
  emit("dendrogram.dot", to_dot(dendro));
  emit("dendrogram.newick", to_newick(dendro) + "\n");
  emit("dendrogram.json", to_json(dendro).dump(2) + "\n");

  std::optional<FlatModel> flat_final;
  if (test) {
    flat_final = detail::run_stage("train-flat", [&] {
      return train_ovr(train, cfg.grid(cfg.seed + seed_offset::flat_final), cfg.k, cfg.seed + seed_offset::flat_final);
    });
    emit("flat_model.json", to_json(*flat_final).dump(2) + "\n");
    const auto rep = detail::run_stage("evaluate", [&] { return evaluate_flat(*flat_final, *test); });
    emit("report_flat_test.json", dump_fixed(to_json(rep)));
  }

  for (auto dir : cfg.directions) {
    const auto name = to_string(dir);
    const auto spec = detail::run_stage("peel", [&] { return build(peel_order(dendro, dir)); });
    const auto cv = detail::run_stage("hierarchy", [&] {
      return cv_hierarchy(spec, train, cfg.grid(cfg.seed + seed_offset::hierarchy_cv), cfg.k,
                          cfg.seed + seed_offset::hierarchy_cv);
    });
    auto rep = detail::run_stage("evaluate", [&] { return report_from_cv(spec, cv); });
    emit("report_" + name + ".json", dump_fixed(to_json(rep)));
    summary.hierarchy_cv[name] = std::move(rep);

    const auto model = detail::run_stage("hierarchy", [&] {
      return train_hierarchy(spec, train, cfg.grid(cfg.seed + seed_offset::hierarchy_final), cfg.k,
                             cfg.seed + seed_offset::hierarchy_final);
    });
    emit("hierarchy_" + name + ".json", to_json(model).dump(2) + "\n");
    emit("hierarchy_" + name + ".dot", export_dot(model));
    if (test) {
      const auto trep = detail::run_stage("evaluate", [&] { return evaluate_hierarchy(model, *test); });
      emit("report_" + name + "_test.json", dump_fixed(to_json(trep)));
    }
  }

  nlohmann::ordered_json manifest;
  auto optional_path = [](const std::optional<std::string>& p) {
    return p ? nlohmann::ordered_json(*p) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json config;
  config["train"] = optional_path(cfg.train_csv);
  config["test"] = optional_path(cfg.test_csv);
  config["synthetic"] = optional_path(cfg.synthetic_spec);
  config["k"] = cfg.k;
  config["seed"] = cfg.seed;
  config["linkage"] = to_string(cfg.linkage);
  std::vector<std::string> dirs;
  for (auto d : cfg.directions) dirs.push_back(to_string(d));
  config["directions"] = dirs;
  config["lambdas"] = cfg.lambdas;
  config["epochs"] = cfg.epochs;
  manifest["config"] = config;
  manifest["seeds"] = {{"generate", cfg.seed + seed_offset::generate},
                       {"flat_cv", cfg.seed + seed_offset::flat_cv},
                       {"hierarchy_cv", cfg.seed + seed_offset::hierarchy_cv},
                       {"flat_final", cfg.seed + seed_offset::flat_final},
                       {"hierarchy_final", cfg.seed + seed_offset::hierarchy_final}};
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  for (const auto& [file, sum] : summary.checksums) artifacts[file] = {{"sha256", sum}};
  manifest["artifacts"] = artifacts;
  detail::run_stage("write", [&] { write_file_atomic(out / "run_manifest.json", manifest.dump(2) + "\n"); });
  return summary;
}

} // namespace ctree

#endif // CTREE_PIPELINE_HPP
