// Command-line driver: synthetic scenes, skeleton training, index
// construction, the full per-scene pipeline, the ablation sweep, and
// label-file evaluation. Exit codes: 0 success, 2 configuration problem
// (the message names the offending field), 1 anything else.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dynagg/cloud.hpp"
#include "dynagg/config.hpp"
#include "dynagg/errors.hpp"
#include "dynagg/index.hpp"
#include "dynagg/metrics.hpp"
#include "dynagg/pipeline.hpp"
#include "dynagg/sizing.hpp"
#include "dynagg/som.hpp"
#include "dynagg/synth.hpp"

namespace {

using namespace dynagg;

CloudFormat parse_format(const std::string& name) {
  if (name == "csv") return CloudFormat::csv;
  if (name == "binary") return CloudFormat::binary;
  throw ConfigError("format: unknown value '" + name + "' (csv|binary)");
}

/// Any failure to read the config file is a configuration problem, so it
/// surfaces as ConfigError and exit code 2.
RunConfig read_config(const std::string& path) {
  if (path.empty()) return default_config();
  try {
    return load_config(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

/// Shared preprocessing: downsample to the configured grid, then scale
/// into the unit cube. Every subcommand that touches a cloud goes through
/// here so artifacts stay mutually consistent.
std::pair<PointCloud, UnitCubeTransform> preprocess(const RunConfig& cfg,
                                                    const PointCloud& raw) {
  const PointCloud input =
      grid_downsample(raw, cfg.pipeline.downsample_cell_cm);
  return normalize_unit_cube(input);
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_format = true) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "override the relevant RNG seed");
  cmd->add_option("--jobs", flags.jobs, "worker threads")
      ->check(CLI::Range(1u, 256u));
  if (with_format)
    cmd->add_option("--format", flags.format, "cloud file format")
        ->check(CLI::IsMember({"csv", "binary"}));
}

int cmd_synth(const CommonFlags& flags, const std::string& out_path) {
  RunConfig cfg = read_config(flags.config_path);
  SceneSpec spec = cfg.synth;
  if (flags.seed) spec.rng_seed = *flags.seed;
  const PointCloud cloud = generate_scene(spec);
  save_cloud(out_path, cloud, parse_format(flags.format));
  std::cout << "wrote " << out_path << " (" << cloud.size() << " points)\n";
  return 0;
}

int cmd_skeleton(const CommonFlags& flags, const std::string& in_path,
                 const std::string& out_path) {
  RunConfig cfg = read_config(flags.config_path);
  const PointCloud raw = load_cloud(in_path, parse_format(flags.format));
  auto [unit, transform] = preprocess(cfg, raw);

  const std::uint32_t m =
      skeleton_size(cfg.sizing, static_cast<std::uint64_t>(unit.size()));
  SomConfig som = cfg.som;
  if (flags.seed) som.rng_seed = *flags.seed;
  const Skeleton skeleton =
      train_skeleton(unit, init_skeleton(unit, m, som), som);
  save_skeleton_json(out_path, skeleton);
  std::cout << "wrote " << out_path << " (" << m << " nodes, "
            << skeleton.training_log.size() << " epochs)\n";
  return 0;
}

int cmd_index(const CommonFlags& flags, const std::string& in_path,
              const std::string& skeleton_path, const std::string& out_path) {
  RunConfig cfg = read_config(flags.config_path);
  const PointCloud raw = load_cloud(in_path, parse_format(flags.format));
  auto [unit, transform] = preprocess(cfg, raw);
  const Skeleton skeleton = load_skeleton_json(skeleton_path);
  const IndexMatrix index =
      build_index(unit, skeleton, static_cast<std::uint32_t>(cfg.index.k),
                  flags.jobs);
  save_index_binary(out_path, index);
  std::cout << "wrote " << out_path << " (" << index.n << " x " << index.k_eff
            << ", g = " << index.g << ")\n";
  return 0;
}

int cmd_pipeline(const CommonFlags& flags, const std::string& out_dir) {
  RunConfig cfg = read_config(flags.config_path);
  if (flags.seed) cfg.pipeline.seed = *flags.seed;
  const PipelineResult result = run_pipeline(cfg, flags.jobs);
  write_pipeline_artifacts(result, out_dir);
  std::cout << metrics_report_text(result.confusion);
  std::cout << "coverage " << result.mean_cluster_coverage << "\n";
  std::cout << "artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_ablate(const CommonFlags& flags, const std::string& out_path) {
  RunConfig cfg = read_config(flags.config_path);
  const auto rows = run_ablation(cfg, flags.jobs);
  std::ofstream out(out_path);
  if (!out) throw ParseError("cannot write " + out_path);
  out << ablation_csv(rows);
  std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_eval(const std::string& truth_path, const std::string& pred_path,
             const std::string& format, std::uint32_t classes,
             const std::string& out_path) {
  const PointCloud truth = load_cloud(truth_path, parse_format(format));
  const PointCloud pred = load_cloud(pred_path, parse_format(format));
  if (!truth.has_labels() || !pred.has_labels())
    throw ParseError("eval: both clouds must carry labels");
  std::uint32_t num_classes = classes;
  if (num_classes == 0) {
    for (std::uint32_t l : truth.labels) num_classes = std::max(num_classes, l + 1);
    for (std::uint32_t l : pred.labels) num_classes = std::max(num_classes, l + 1);
  }
  ConfusionMatrix cm(num_classes);
  cm.accumulate(truth.labels, pred.labels);
  std::cout << metrics_report_text(cm);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot write " + out_path);
    out << metrics_report_json(cm) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton-based point-cloud aggregation pipeline"};
  app.require_subcommand(1);

  CommonFlags synth_flags, skeleton_flags, index_flags, pipeline_flags,
      ablate_flags;
  std::string synth_out = "scene.csv";
  std::string skeleton_in, skeleton_out = "skeleton.json";
  std::string index_in, index_skeleton, index_out = "index.bin";
  std::string pipeline_out = "out";
  std::string ablate_out = "ablation.csv";
  std::string eval_truth, eval_pred, eval_format = "csv", eval_out;
  std::uint32_t eval_classes = 0;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  add_common(synth, synth_flags);
  synth->add_option("--out", synth_out, "output cloud path");

  CLI::App* skeleton =
      app.add_subcommand("skeleton", "train a pooling skeleton on a cloud");
  add_common(skeleton, skeleton_flags);
  skeleton->add_option("--in", skeleton_in, "input cloud")->required();
  skeleton->add_option("--out", skeleton_out, "output skeleton JSON");

  CLI::App* index =
      app.add_subcommand("index", "build the K-NN index matrix for a cloud");
  add_common(index, index_flags);
  index->add_option("--in", index_in, "input cloud")->required();
  index->add_option("--skeleton", index_skeleton, "skeleton JSON")->required();
  index->add_option("--out", index_out, "output index binary");

  CLI::App* pipeline =
      app.add_subcommand("pipeline", "run the full pipeline on seeded scenes");
  add_common(pipeline, pipeline_flags, /*with_format=*/false);
  pipeline->add_option("--out", pipeline_out, "artifact directory");

  CLI::App* ablate =
      app.add_subcommand("ablate", "one-knob-at-a-time ablation sweep");
  add_common(ablate, ablate_flags, /*with_format=*/false);
  ablate->add_option("--out", ablate_out, "output CSV path");

  CLI::App* eval =
      app.add_subcommand("eval", "compare two labelled clouds point-wise");
  eval->add_option("--truth", eval_truth, "ground-truth cloud")->required();
  eval->add_option("--pred", eval_pred, "predicted cloud")->required();
  eval->add_option("--format", eval_format, "cloud file format")
      ->check(CLI::IsMember({"csv", "binary"}));
  eval->add_option("--classes", eval_classes,
                   "class count (default: inferred from labels)");
  eval->add_option("--out", eval_out, "also write a metrics JSON here");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(synth_flags, synth_out);
    if (skeleton->parsed())
      return cmd_skeleton(skeleton_flags, skeleton_in, skeleton_out);
    if (index->parsed())
      return cmd_index(index_flags, index_in, index_skeleton, index_out);
    if (pipeline->parsed()) return cmd_pipeline(pipeline_flags, pipeline_out);
    if (ablate->parsed()) return cmd_ablate(ablate_flags, ablate_out);
    if (eval->parsed())
      return cmd_eval(eval_truth, eval_pred, eval_format, eval_classes,
                      eval_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dynagg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
