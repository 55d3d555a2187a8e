// ctree: command-line driver for confusion-driven label hierarchies.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 training error.

#include "ctree/ctree.hpp"

#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ctree;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

std::vector<double> parse_grid(const std::string& text)
{
  std::vector<double> out;
  for (auto cell : ctree::detail::split(text, ',')) {
    auto v = ctree::detail::parse_double(cell);
    if (!v || !(*v > 0)) throw DataError("invalid lambda '" + std::string(cell) + "' in --grid");
    out.push_back(*v);
  }
  if (out.empty()) throw DataError("--grid is empty");
  return out;
}

std::vector<Hyperparams> make_grid(const std::vector<double>& lambdas, std::size_t epochs, std::uint64_t seed)
{
  std::vector<Hyperparams> g;
  for (double l : lambdas) g.push_back({l, epochs, seed});
  return g;
}

void write_text(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

nlohmann::json read_json(const std::string& path)
{
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

template <typename Stream>
Stream open_in(const std::string& path)
{
  Stream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

/// Applies keys from a JSON config file on top of parsed flags.
void apply_config(const std::string& path, RunConfig& cfg, std::string& direction, std::string& linkage,
                  std::string& grid)
{
  const auto j = read_json(path);
  try {
    if (j.contains("train")) cfg.train_csv = j.at("train").get<std::string>();
    if (j.contains("test")) cfg.test_csv = j.at("test").get<std::string>();
    if (j.contains("synthetic")) cfg.synthetic_spec = j.at("synthetic").get<std::string>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("k")) cfg.k = j.at("k").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("linkage")) linkage = j.at("linkage").get<std::string>();
    if (j.contains("direction")) direction = j.at("direction").get<std::string>();
    if (j.contains("grid")) {
      if (j.at("grid").is_array()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < j.at("grid").size(); ++i) os << (i ? "," : "") << j.at("grid")[i].get<double>();
        grid = os.str();
      } else {
        grid = j.at("grid").get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad config '" + path + "': " + e.what());
  }
}

int report_failure(const StageError& e)
{
  std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
  return e.kind() == StageError::Kind::training ? kExitTraining : kExitData;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Confusion-driven label hierarchies: flat baseline, label clustering, nested binary trees"};
  app.require_subcommand(1);

  std::string train, test, synthetic, out, config, model_path, spec_path, confusion_path, distance_path,
      dendrogram_path;
  std::size_t k = 5, epochs = 50;
  std::uint64_t seed = 1;
  std::string linkage = "average", direction = "both", grid = "1e-4,1e-3,1e-2,1e-1,1";

  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--k", k, "Cross-validation folds")->check(CLI::Range(2, 1000));
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--grid", grid, "Comma-separated lambda values");
    sub->add_option("--epochs", epochs, "Epochs per SVM fit")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Full experiment: flat baseline, clustering, hierarchies, reports");
  run->add_option("--train", train, "Training CSV");
  run->add_option("--synthetic", synthetic, "Synthetic spec (instead of --train)");
  run->add_option("--test", test, "Held-out test CSV");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--linkage", linkage, "single|complete|average");
  run->add_option("--direction", direction, "H1|H2|both");
  run->add_option("--config", config, "JSON config file; its keys override flags");
  add_training(run);

  auto* gen = app.add_subcommand("generate", "Draw a dataset from a synthetic spec");
  gen->add_option("--synthetic", synthetic, "Synthetic spec")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out, "Output CSV")->required();

  auto* folds = app.add_subcommand("folds", "Write a stratified fold plan");
  folds->add_option("--train", train, "Dataset CSV")->required();
  folds->add_option("--k", k, "Folds")->check(CLI::Range(2, 1000));
  folds->add_option("--seed", seed, "Random seed");
  folds->add_option("--out", out, "Output CSV (index,label,fold)")->required();

  auto* train_flat = app.add_subcommand("train-flat", "Train the one-vs-rest flat model");
  train_flat->add_option("--train", train, "Training CSV")->required();
  train_flat->add_option("--out", out, "Output model JSON")->required();
  add_training(train_flat);

  auto* conf_cmd = app.add_subcommand("confusion", "Cross-validated confusion matrix of the flat model");
  conf_cmd->add_option("--train", train, "Training CSV")->required();
  conf_cmd->add_option("--out", out, "Output CSV")->required();
  add_training(conf_cmd);

  auto* aff = app.add_subcommand("affinity", "Similarity and distance matrices from a confusion matrix");
  aff->add_option("--confusion", confusion_path, "Confusion CSV")->required();
  aff->add_option("--out", out, "Output directory")->required();

  auto* cluster = app.add_subcommand("cluster", "Agglomerative clustering of labels");
  cluster->add_option("--distance", distance_path, "Distance CSV")->required();
  cluster->add_option("--linkage", linkage, "single|complete|average");
  cluster->add_option("--out", out, "Output directory")->required();

  auto* build_cmd = app.add_subcommand("build", "Hierarchy spec from a dendrogram");
  build_cmd->add_option("--dendrogram", dendrogram_path, "dendrogram.json")->required();
  build_cmd->add_option("--direction", direction, "H1|H2")->required();
  build_cmd->add_option("--out", out, "Output spec JSON")->required();

  auto* train_tree = app.add_subcommand("train-tree", "Train a hierarchy from its spec");
  train_tree->add_option("--spec", spec_path, "Hierarchy spec JSON")->required();
  train_tree->add_option("--train", train, "Training CSV")->required();
  train_tree->add_option("--out", out, "Output model JSON")->required();
  add_training(train_tree);

  auto* eval = app.add_subcommand("evaluate", "Score a flat or hierarchy model on a dataset");
  eval->add_option("--model", model_path, "Model JSON")->required();
  eval->add_option("--test", test, "Test CSV")->required();
  eval->add_option("--out", out, "Output report JSON")->required();

  auto* dot = app.add_subcommand("export-dot", "DOT rendering of a hierarchy model");
  dot->add_option("--model", model_path, "Hierarchy model JSON")->required();
  dot->add_option("--out", out, "Output DOT file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  using ctree::detail::run_stage;
  try {
    if (run->parsed()) {
      RunConfig cfg;
      cfg.out_dir = out;
      cfg.k = k;
      cfg.seed = seed;
      cfg.epochs = epochs;
      if (!train.empty()) cfg.train_csv = train;
      if (!test.empty()) cfg.test_csv = test;
      if (!synthetic.empty()) cfg.synthetic_spec = synthetic;
      run_stage("config", [&] {
        if (!config.empty()) apply_config(config, cfg, direction, linkage, grid);
        cfg.linkage = parse_linkage(linkage);
        if (direction == "both")
          cfg.directions = {Direction::H1, Direction::H2};
        else
          cfg.directions = {parse_direction(direction)};
        cfg.lambdas = parse_grid(grid);
      });
      if (!cfg.train_csv && !cfg.synthetic_spec)
        throw StageError("load", StageError::Kind::data, "no training data: give --train or --synthetic");
      const auto summary = run_pipeline(cfg);
      std::cout << "flat      micro_f1=" << ctree::detail::format_fixed6(summary.flat_cv.micro_f1)
                << " macro_f1=" << ctree::detail::format_fixed6(summary.flat_cv.macro_f1) << "\n";
      for (const auto& [name, rep] : summary.hierarchy_cv)
        std::cout << name << "        micro_f1=" << ctree::detail::format_fixed6(rep.micro_f1)
                  << " macro_f1=" << ctree::detail::format_fixed6(rep.macro_f1) << "\n";
      std::cout << "wrote " << summary.checksums.size() + 1 << " files to " << cfg.out_dir << "\n";
    } else if (gen->parsed()) {
      const auto ds = run_stage("load", [&] { return generate_synthetic(load_synthetic_spec(synthetic), seed); });
      run_stage("write", [&] {
        std::ostringstream os;
        write_csv(os, ds);
        write_text(out, os.str());
      });
    } else if (folds->parsed()) {
      const auto ds = run_stage("load", [&] { return load_csv(train); });
      const auto plan = run_stage("folds", [&] { return stratified_folds(ds, k, seed); });
      run_stage("write", [&] {
        std::ostringstream os;
        os << "index,label,fold\n";
        for (std::size_t i = 0; i < ds.size(); ++i)
          os << i << ',' << ds.labels.name(ds.instances[i].gold) << ',' << plan.assignments[i] << '\n';
        write_text(out, os.str());
      });
    } else if (train_flat->parsed()) {
      const auto ds = run_stage("load", [&] { return load_csv(train); });
      const auto model = run_stage("train-flat", [&] { return train_ovr(ds, make_grid(parse_grid(grid), epochs, seed), k, seed); });
      run_stage("write", [&] { write_text(out, to_json(model).dump(2) + "\n"); });
    } else if (conf_cmd->parsed()) {
      const auto ds = run_stage("load", [&] { return load_csv(train); });
      const auto conf =
          run_stage("confusion", [&] { return cv_confusion(ds, make_grid(parse_grid(grid), epochs, seed), k, seed); });
      run_stage("write", [&] {
        std::ostringstream os;
        write_confusion_csv(os, conf);
        write_text(out, os.str());
      });
    } else if (aff->parsed()) {
      const auto conf = run_stage("load", [&] {
        auto in = open_in<std::ifstream>(confusion_path);
        return read_confusion_csv(in, confusion_path);
      });
      const auto sim = run_stage("affinity", [&] { return similarity(conf); });
      const auto dist = distance(sim);
      run_stage("write", [&] {
        std::ostringstream s, d;
        write_matrix_csv(s, sim);
        write_matrix_csv(d, dist);
        write_text(fs::path(out) / "similarity.csv", s.str());
        write_text(fs::path(out) / "distance.csv", d.str());
      });
    } else if (cluster->parsed()) {
      const auto dist = run_stage("load", [&] {
        auto in = open_in<std::ifstream>(distance_path);
        return read_distance_csv(in, distance_path);
      });
      const auto dendro = run_stage("cluster", [&] { return agglomerate(dist, parse_linkage(linkage)); });
      run_stage("write", [&] {
        write_text(fs::path(out) / "dendrogram.dot", to_dot(dendro));
        write_text(fs::path(out) / "dendrogram.newick", to_newick(dendro) + "\n");
        write_text(fs::path(out) / "dendrogram.json", to_json(dendro).dump(2) + "\n");
      });
    } else if (build_cmd->parsed()) {
      const auto dendro = run_stage("load", [&] { return dendrogram_from_json(read_json(dendrogram_path)); });
      const auto spec = run_stage("peel", [&] { return build(peel_order(dendro, parse_direction(direction))); });
      run_stage("write", [&] { write_text(out, to_json(spec).dump(2) + "\n"); });
    } else if (train_tree->parsed()) {
      const auto spec = run_stage("load", [&] { return hierarchy_spec_from_json(read_json(spec_path)); });
      const auto ds = run_stage("load", [&] { return load_csv(train); });
      const auto model = run_stage("hierarchy", [&] {
        return train_hierarchy(spec, ds, make_grid(parse_grid(grid), epochs, seed), k, seed);
      });
      run_stage("write", [&] { write_text(out, to_json(model).dump(2) + "\n"); });
    } else if (eval->parsed()) {
      const auto j = run_stage("load", [&] { return read_json(model_path); });
      const auto ds = run_stage("load", [&] { return load_csv(test); });
      const auto rep = run_stage("evaluate", [&] {
        if (j.value("type", "") == "hierarchy") return evaluate_hierarchy(hierarchy_model_from_json(j), ds);
        return evaluate_flat(flat_model_from_json(j), ds);
      });
      run_stage("write", [&] { write_text(out, dump_fixed(to_json(rep))); });
      std::cout << "micro_f1=" << ctree::detail::format_fixed6(rep.micro_f1)
                << " macro_f1=" << ctree::detail::format_fixed6(rep.macro_f1) << "\n";
    } else if (dot->parsed()) {
      const auto model = run_stage("load", [&] { return hierarchy_model_from_json(read_json(model_path)); });
      run_stage("write", [&] { write_text(out, export_dot(model)); });
    }
  } catch (const StageError& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
