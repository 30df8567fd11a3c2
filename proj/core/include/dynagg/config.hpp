#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynagg/pool.hpp"
#include "dynagg/sizing.hpp"
#include "dynagg/som.hpp"
#include "dynagg/synth.hpp"

namespace dynagg {

struct IndexConfig {
  Eigen::Index k = 3;

  void validate() const;
};

struct IntegrateConfig {
  bool enabled = true;
  Eigen::Index hidden_dim = 32;
  Eigen::Index output_dim = 16;
  std::uint64_t param_seed = 7;

  void validate() const;
};

struct PipelineSettings {
  Eigen::Index scene_count = 4;
  std::uint64_t seed = 42;
  double downsample_cell_cm = 5.0;

  void validate() const;
};

/// One-knob-at-a-time sweep around the default operating point. Every list
/// must contain the corresponding default so the reference row appears in
/// each sweep.
struct AblationConfig {
  std::vector<Eigen::Index> k_values{1, 2, 3, 4, 5, 7};
  std::vector<std::string> sizing{"logarithm", "power", "linear",
                                  "static:100"};
  std::vector<AggregateFn> aggregate{AggregateFn::semi_average,
                                     AggregateFn::mean, AggregateFn::max};
  std::vector<PropagateFn> propagate{PropagateFn::max, PropagateFn::mean};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Eigen::Index scenes_per_seed = 1;

  void validate() const;
};

/// Everything a run needs, gathered from one JSON config file. Unknown
/// keys and malformed values are rejected with the offending field named.
struct RunConfig {
  PipelineSettings pipeline;
  SceneSpec synth;
  SizingPolicy sizing;
  SomConfig som;
  IndexConfig index;
  PoolChoice pool;
  IntegrateConfig integrate;
  AblationConfig ablate;

  void validate() const;
};

RunConfig default_config();

/// Parses a JSON document over the defaults. `origin` tags error messages
/// (usually the file path). Sections: pipeline, synth, sizing, som, index,
/// pool, integrate, ablate — all optional, all strictly checked.
RunConfig parse_config(const std::string& text,
                       const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

AggregateFn aggregate_fn_from_string(const std::string& name);
PropagateFn propagate_fn_from_string(const std::string& name);

/// Sizing selector: "logarithm" | "power" | "linear" | "static" |
/// "static:<m>". Parameters other than the kind (and fixed value) come
/// from `base`.
SizingPolicy sizing_from_string(const std::string& name, SizingPolicy base);

/// Inverse of sizing_from_string for labelling sweep rows ("static:100").
std::string sizing_label(const SizingPolicy& policy);

}  // namespace dynagg
