#include "dynagg/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "dynagg/errors.hpp"

namespace dynagg {

namespace {

using nlohmann::json;

/// Strict reader over one config section: typed lookups plus a final sweep
/// that rejects keys nothing consumed, so typos surface as errors instead
/// of silently keeping defaults.
class Section {
 public:
  Section(const json& j, std::string prefix)
      : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object())
      throw ConfigError(prefix_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(prefix_ + "." + key + ": wrong type");
    }
  }

  void get_index(const char* key, Eigen::Index& out) {
    std::int64_t v = out;
    get(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError(prefix_ + "." + item.key() + ": unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_pipeline(const json& j, PipelineSettings& out) {
  Section s(j, "pipeline");
  s.get_index("scene_count", out.scene_count);
  s.get("seed", out.seed);
  s.get("downsample_cell_cm", out.downsample_cell_cm);
  s.finish();
}

void read_synth(const json& j, SceneSpec& out) {
  Section s(j, "synth");
  s.get("extent_x", out.extent_x);
  s.get("extent_y", out.extent_y);
  s.get("extent_z", out.extent_z);
  s.get_index("floor_points", out.floor_points);
  s.get_index("ceiling_points", out.ceiling_points);
  s.get_index("wall_points", out.wall_points);
  s.get_index("cluster_count", out.cluster_count);
  s.get_index("cluster_points", out.cluster_points);
  s.get("cluster_radius", out.cluster_radius);
  s.get("feature_noise", out.feature_noise);
  s.get("floor_class", out.floor_class);
  s.get("ceiling_class", out.ceiling_class);
  s.get("wall_class", out.wall_class);
  s.get("cluster_class_base", out.cluster_class_base);
  s.get_index("cluster_class_span", out.cluster_class_span);
  s.get("rng_seed", out.rng_seed);
  s.finish();
}

void read_sizing(const json& j, SizingPolicy& out) {
  Section s(j, "sizing");
  std::string kind = to_string(out.kind);
  s.get("kind", kind);
  s.get("a", out.a);
  s.get("b", out.b);
  s.get("coefficient", out.coefficient);
  s.get("exponent", out.exponent);
  s.get("slope", out.slope);
  s.get("value", out.value);
  s.get("m_min", out.m_min);
  s.get("m_max", out.m_max);
  s.finish();
  try {
    out = sizing_from_string(kind, out);
  } catch (const ConfigError&) {
    throw ConfigError("sizing.kind: unknown policy '" + kind + "'");
  }
}

void read_som(const json& j, SomConfig& out) {
  Section s(j, "som");
  s.get("initial_learning_rate", out.initial_learning_rate);
  s.get("initial_neighborhood_radius", out.initial_neighborhood_radius);
  s.get("epochs_max", out.epochs_max);
  s.get("convergence_tol", out.convergence_tol);
  s.get("rng_seed", out.rng_seed);
  s.finish();
}

void read_index(const json& j, IndexConfig& out) {
  Section s(j, "index");
  s.get_index("k", out.k);
  s.finish();
}

void read_pool(const json& j, PoolChoice& out) {
  Section s(j, "pool");
  std::string agg = to_string(out.aggregate);
  std::string prop = to_string(out.propagate);
  s.get("aggregate", agg);
  s.get("propagate", prop);
  s.finish();
  try {
    out.aggregate = aggregate_fn_from_string(agg);
  } catch (const ConfigError&) {
    throw ConfigError("pool.aggregate: unknown function '" + agg + "'");
  }
  try {
    out.propagate = propagate_fn_from_string(prop);
  } catch (const ConfigError&) {
    throw ConfigError("pool.propagate: unknown function '" + prop + "'");
  }
}

void read_integrate(const json& j, IntegrateConfig& out) {
  Section s(j, "integrate");
  s.get("enabled", out.enabled);
  s.get_index("hidden_dim", out.hidden_dim);
  s.get_index("output_dim", out.output_dim);
  s.get("param_seed", out.param_seed);
  s.finish();
}

void read_ablate(const json& j, AblationConfig& out) {
  Section s(j, "ablate");
  std::vector<std::int64_t> ks;
  for (Eigen::Index k : out.k_values) ks.push_back(k);
  s.get("k_values", ks);
  out.k_values.assign(ks.begin(), ks.end());
  s.get("sizing", out.sizing);
  std::vector<std::string> agg, prop;
  for (AggregateFn f : out.aggregate) agg.push_back(to_string(f));
  for (PropagateFn f : out.propagate) prop.push_back(to_string(f));
  s.get("aggregate", agg);
  s.get("propagate", prop);
  s.get("seeds", out.seeds);
  s.get_index("scenes_per_seed", out.scenes_per_seed);
  s.finish();
  out.aggregate.clear();
  for (const auto& name : agg) {
    try {
      out.aggregate.push_back(aggregate_fn_from_string(name));
    } catch (const ConfigError&) {
      throw ConfigError("ablate.aggregate: unknown function '" + name + "'");
    }
  }
  out.propagate.clear();
  for (const auto& name : prop) {
    try {
      out.propagate.push_back(propagate_fn_from_string(name));
    } catch (const ConfigError&) {
      throw ConfigError("ablate.propagate: unknown function '" + name + "'");
    }
  }
}

}  // namespace

void IndexConfig::validate() const {
  if (k < 1) throw ConfigError("index.k: must be >= 1");
}

void IntegrateConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("integrate.hidden_dim: must be >= 1");
  if (output_dim < 1) throw ConfigError("integrate.output_dim: must be >= 1");
}

void PipelineSettings::validate() const {
  if (scene_count < 1) throw ConfigError("pipeline.scene_count: must be >= 1");
  if (!(downsample_cell_cm > 0))
    throw ConfigError("pipeline.downsample_cell_cm: must be > 0");
}

void AblationConfig::validate() const {
  if (k_values.empty()) throw ConfigError("ablate.k_values: must be non-empty");
  for (Eigen::Index k : k_values)
    if (k < 1) throw ConfigError("ablate.k_values: entries must be >= 1");
  if (sizing.empty()) throw ConfigError("ablate.sizing: must be non-empty");
  for (const auto& name : sizing) sizing_from_string(name, SizingPolicy{});
  if (aggregate.empty())
    throw ConfigError("ablate.aggregate: must be non-empty");
  if (propagate.empty())
    throw ConfigError("ablate.propagate: must be non-empty");
  if (seeds.empty()) throw ConfigError("ablate.seeds: must be non-empty");
  if (scenes_per_seed < 1)
    throw ConfigError("ablate.scenes_per_seed: must be >= 1");
}

void RunConfig::validate() const {
  pipeline.validate();
  synth.validate();
  sizing.validate();
  som.validate();
  index.validate();
  integrate.validate();
  ablate.validate();
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");

  RunConfig cfg;
  static const std::set<std::string> known{"pipeline", "synth",  "sizing",
                                           "som",      "index",  "pool",
                                           "integrate", "ablate"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError(origin + ": unknown section '" + item.key() + "'");

  if (j.contains("pipeline")) read_pipeline(j["pipeline"], cfg.pipeline);
  if (j.contains("synth")) read_synth(j["synth"], cfg.synth);
  if (j.contains("sizing")) read_sizing(j["sizing"], cfg.sizing);
  if (j.contains("som")) read_som(j["som"], cfg.som);
  if (j.contains("index")) read_index(j["index"], cfg.index);
  if (j.contains("pool")) read_pool(j["pool"], cfg.pool);
  if (j.contains("integrate")) read_integrate(j["integrate"], cfg.integrate);
  if (j.contains("ablate")) read_ablate(j["ablate"], cfg.ablate);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

AggregateFn aggregate_fn_from_string(const std::string& name) {
  if (name == "semi_average") return AggregateFn::semi_average;
  if (name == "mean") return AggregateFn::mean;
  if (name == "max") return AggregateFn::max;
  throw ConfigError("unknown aggregate function '" + name + "'");
}

PropagateFn propagate_fn_from_string(const std::string& name) {
  if (name == "max") return PropagateFn::max;
  if (name == "mean") return PropagateFn::mean;
  throw ConfigError("unknown propagate function '" + name + "'");
}

SizingPolicy sizing_from_string(const std::string& name, SizingPolicy base) {
  if (name == "logarithm") {
    base.kind = SizingKind::logarithm;
    return base;
  }
  if (name == "power") {
    base.kind = SizingKind::power;
    return base;
  }
  if (name == "linear") {
    base.kind = SizingKind::linear;
    return base;
  }
  if (name == "static") {
    base.kind = SizingKind::fixed;
    return base;
  }
  if (name.rfind("static:", 0) == 0) {
    base.kind = SizingKind::fixed;
    const std::string arg = name.substr(7);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(arg, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad static sizing value '" + name + "'");
    }
    if (used != arg.size() || v < 1)
      throw ConfigError("bad static sizing value '" + name + "'");
    base.value = static_cast<std::uint32_t>(v);
    // A pinned node count escapes the policy clamp window if needed.
    base.m_min = std::min(base.m_min, base.value);
    base.m_max = std::max(base.m_max, base.value);
    return base;
  }
  throw ConfigError("unknown sizing policy '" + name + "'");
}

std::string sizing_label(const SizingPolicy& policy) {
  if (policy.kind == SizingKind::fixed)
    return "static:" + std::to_string(policy.value);
  return to_string(policy.kind);
}

}  // namespace dynagg
