#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynagg/config.hpp"
#include "dynagg/index.hpp"
#include "dynagg/integrate.hpp"
#include "dynagg/metrics.hpp"
#include "dynagg/som.hpp"
#include "dynagg/synth.hpp"

namespace dynagg {

/// Everything produced for one scene: synth -> downsample -> normalize ->
/// size -> SOM -> index -> aggregate -> (integrate) -> propagate ->
/// classify -> extrapolate back to the raw cloud.
struct SceneResult {
  std::uint64_t scene_seed = 0;
  Eigen::Index n_raw = 0;
  Eigen::Index n_input = 0;  // after grid downsampling
  std::uint32_t m = 0;
  Eigen::Index empty_node_count = 0;
  double g = 0.0;
  double quantization_error = 0.0;  // unit frame
  double cluster_coverage = 0.0;    // fraction of clusters holding a node
  SceneLayout layout;
  UnitCubeTransform transform;  // input cloud -> unit cube
  Skeleton skeleton;            // unit frame
  IndexMatrix index;
  std::vector<std::uint32_t> input_truth;
  std::vector<std::uint32_t> raw_truth;
  std::vector<std::uint32_t> raw_predicted;
};

struct PipelineResult {
  std::vector<SceneResult> scenes;
  ConfusionMatrix confusion;  // accumulated over raw points, scene order
  double mean_iou = 0.0;
  double mean_class_accuracy = 0.0;
  double mean_cluster_coverage = 0.0;
};

/// Runs one scene end to end. `gru` supplies the shared integrator
/// parameters; pass nullptr to skip integration regardless of the config.
SceneResult run_scene(const RunConfig& cfg, std::uint64_t scene_seed,
                      const GruParams* gru);

/// Runs scene_count scenes (seeded from pipeline.seed) and accumulates the
/// dataset metrics. Scene-level parallelism only; any `jobs` value yields
/// identical results.
PipelineResult run_pipeline(const RunConfig& cfg, unsigned jobs = 1);

/// Writes per-scene skeleton.json / index.bin / stats.json plus the
/// dataset metrics.json and metrics.txt under out_dir. Byte-stable for a
/// fixed config and seed set.
void write_pipeline_artifacts(const PipelineResult& result,
                              const std::filesystem::path& out_dir);

/// Nearest-centroid label stub: class centroids fitted on (features,
/// truth), every row then labelled by its closest fitted centroid (ties to
/// the lower class id).
std::vector<std::uint32_t> nearest_centroid_classify(
    const Eigen::MatrixXd& features, const std::vector<std::uint32_t>& truth,
    std::uint32_t num_classes);

struct AblationRow {
  std::string knob;   // "k" | "sizing" | "aggregate" | "propagate"
  std::string value;  // e.g. "3", "logarithm", "static:100", "semi_average"
  std::uint64_t seed = 0;
  double metric = 0.0;  // 0.5 * cluster coverage + 0.5 * mA
};

/// One-knob-at-a-time sweep around the config's operating point. The
/// integrator stays out of these runs so the knobs act on the aggregation
/// path alone. Row order is fixed by the config lists; repeated combos are
/// computed once.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, unsigned jobs = 1);

/// The surrogate score run_ablation assigns one (combo, seed) batch.
double ablation_metric(const PipelineResult& result);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::vector<AblationRow> parse_ablation_csv(const std::string& text);

}  // namespace dynagg
