#include "dynagg/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <json.hpp>
#include <sstream>

#include "dynagg/errors.hpp"
#include "dynagg/parallel.hpp"
#include "dynagg/pool.hpp"
#include "dynagg/rng.hpp"
#include "dynagg/sizing.hpp"

namespace dynagg {

namespace {

GruParams make_gru(const RunConfig& cfg) {
  return GruParams::seeded(SceneSpec::feature_channels,
                           cfg.integrate.hidden_dim, cfg.integrate.output_dim,
                           cfg.integrate.param_seed);
}

double coverage_fraction(const SceneLayout& layout, const Skeleton& skeleton,
                         const UnitCubeTransform& transform) {
  const Eigen::MatrixX3d world = transform.to_world(skeleton.node_positions);
  const double reach = 1.5 * layout.cluster_radius;
  Eigen::Index covered = 0;
  for (Eigen::Index d = 0; d < layout.cluster_centers.rows(); ++d) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < world.rows(); ++j)
      best = std::min(best,
                      (world.row(j) - layout.cluster_centers.row(d)).norm());
    if (best <= reach) ++covered;
  }
  return static_cast<double>(covered) /
         static_cast<double>(layout.cluster_centers.rows());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SceneResult run_scene(const RunConfig& cfg, std::uint64_t scene_seed,
                      const GruParams* gru) {
  SceneResult out;
  out.scene_seed = scene_seed;

  SceneSpec spec = cfg.synth;
  spec.rng_seed = scene_seed;
  const PointCloud raw = generate_scene(spec, &out.layout);
  out.n_raw = raw.size();
  out.raw_truth = raw.labels;

  const PointCloud input = grid_downsample(raw, cfg.pipeline.downsample_cell_cm);
  out.n_input = input.size();
  out.input_truth = input.labels;

  auto [unit, transform] = normalize_unit_cube(input);
  out.transform = transform;

  out.m = skeleton_size(cfg.sizing, static_cast<std::uint64_t>(unit.size()));
  SomConfig som = cfg.som;
  som.rng_seed = Rng::mix(scene_seed, 1);
  out.skeleton = train_skeleton(unit, init_skeleton(unit, out.m, som), som);
  out.quantization_error = quantization_error(unit, out.skeleton);
  out.cluster_coverage = coverage_fraction(out.layout, out.skeleton, transform);

  out.index = build_index(unit, out.skeleton,
                          static_cast<std::uint32_t>(cfg.index.k));
  out.g = out.index.g;
  out.empty_node_count =
      static_cast<Eigen::Index>(empty_nodes(out.index).size());

  FeatureMatrix point_feats{input.features, FeatureSpace::point};
  FeatureMatrix node_feats =
      aggregate(point_feats, out.index, cfg.pool.aggregate);

  if (cfg.integrate.enabled && gru) {
    const Eigen::Index pad_to =
        std::max<Eigen::Index>(cfg.sizing.m_max, node_feats.rows());
    const PaddedSequence seq = pad_sequence(node_feats.values, pad_to);
    node_feats.values = gru_forward(seq, *gru);
  }

  const FeatureMatrix point_out =
      propagate(node_feats, out.index, cfg.pool.propagate);

  const std::vector<std::uint32_t> input_pred = nearest_centroid_classify(
      point_out.values, input.labels, spec.num_classes());

  PointCloud labelled = input;
  labelled.labels = input_pred;
  out.raw_predicted = nearest_neighbor_extrapolate(labelled, raw);
  return out;
}

PipelineResult run_pipeline(const RunConfig& cfg, unsigned jobs) {
  cfg.validate();
  PipelineResult result;
  result.scenes.resize(static_cast<std::size_t>(cfg.pipeline.scene_count));

  GruParams gru;
  if (cfg.integrate.enabled) gru = make_gru(cfg);

  parallel_for(result.scenes.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t scene_seed =
          Rng::mix(cfg.pipeline.seed, static_cast<std::uint64_t>(i));
      result.scenes[i] = run_scene(cfg, scene_seed,
                                   cfg.integrate.enabled ? &gru : nullptr);
    }
  });

  result.confusion = ConfusionMatrix(cfg.synth.num_classes());
  double coverage_sum = 0.0;
  for (const SceneResult& scene : result.scenes) {
    result.confusion.accumulate(scene.raw_truth, scene.raw_predicted);
    coverage_sum += scene.cluster_coverage;
  }
  result.mean_iou = mean_iou(result.confusion);
  result.mean_class_accuracy = mean_class_accuracy(result.confusion);
  result.mean_cluster_coverage =
      coverage_sum / static_cast<double>(result.scenes.size());
  return result;
}

void write_pipeline_artifacts(const PipelineResult& result,
                              const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < result.scenes.size(); ++i) {
    const SceneResult& scene = result.scenes[i];
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu", i);
    const fs::path dir = out_dir / name;
    fs::create_directories(dir);
    save_skeleton_json(dir / "skeleton.json", scene.skeleton);
    save_index_binary(dir / "index.bin", scene.index);

    const auto t_minmax = std::minmax_element(scene.index.counts.begin(),
                                              scene.index.counts.end());
    nlohmann::json stats;
    stats["scene_seed"] = scene.scene_seed;
    stats["n_raw"] = scene.n_raw;
    stats["n_input"] = scene.n_input;
    stats["m"] = scene.m;
    stats["empty_nodes"] = scene.empty_node_count;
    stats["g"] = scene.g;
    stats["quantization_error"] = scene.quantization_error;
    stats["cluster_coverage"] = scene.cluster_coverage;
    stats["t_min"] = *t_minmax.first;
    stats["t_max"] = *t_minmax.second;
    stats["t_mean"] = scene.g;  // sum(T_j)/M by definition
    std::ofstream sf(dir / "stats.json");
    if (!sf) throw ParseError("cannot write " + (dir / "stats.json").string());
    sf << stats.dump(2) << "\n";
  }

  std::ofstream mj(out_dir / "metrics.json");
  if (!mj)
    throw ParseError("cannot write " + (out_dir / "metrics.json").string());
  mj << metrics_report_json(result.confusion) << "\n";
  std::ofstream mt(out_dir / "metrics.txt");
  if (!mt)
    throw ParseError("cannot write " + (out_dir / "metrics.txt").string());
  mt << metrics_report_text(result.confusion);
}

std::vector<std::uint32_t> nearest_centroid_classify(
    const Eigen::MatrixXd& features, const std::vector<std::uint32_t>& truth,
    std::uint32_t num_classes) {
  if (features.rows() == 0) throw ShapeError("classifier: empty feature block");
  if (static_cast<std::size_t>(features.rows()) != truth.size())
    throw ShapeError("classifier: feature rows and labels differ in length");

  Eigen::MatrixXd centroids =
      Eigen::MatrixXd::Zero(num_classes, features.cols());
  std::vector<std::uint64_t> counts(num_classes, 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const std::uint32_t cls = truth[static_cast<std::size_t>(i)];
    if (cls >= num_classes)
      throw ShapeError("classifier: label out of range at row " +
                       std::to_string(i));
    centroids.row(cls) += features.row(i);
    ++counts[cls];
  }
  bool any = false;
  for (std::uint32_t c = 0; c < num_classes; ++c)
    if (counts[c] > 0) {
      centroids.row(c) /= static_cast<double>(counts[c]);
      any = true;
    }
  if (!any) throw ShapeError("classifier: no class present in truth");

  std::vector<std::uint32_t> pred(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_cls = 0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      if (counts[c] == 0) continue;
      const double d = (features.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_cls = c;
      }
    }
    pred[static_cast<std::size_t>(i)] = best_cls;
  }
  return pred;
}

double ablation_metric(const PipelineResult& result) {
  return 0.5 * result.mean_cluster_coverage +
         0.5 * result.mean_class_accuracy;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, unsigned jobs) {
  cfg.validate();
  const AblationConfig& ab = cfg.ablate;

  struct Combo {
    Eigen::Index k;
    std::string sizing;
    AggregateFn aggregate;
    PropagateFn propagate;
  };
  const Combo base{cfg.index.k, sizing_label(cfg.sizing), cfg.pool.aggregate,
                   cfg.pool.propagate};

  // Sweep order is fixed by the config lists; identical combos (every sweep
  // contains the operating point) resolve to one computed task.
  struct PendingRow {
    std::string knob, value, key;
    std::uint64_t seed;
  };
  std::vector<PendingRow> pending;
  std::map<std::string, Combo> combos;
  auto push = [&](const std::string& knob, const std::string& value,
                  Combo combo) {
    std::ostringstream key;
    key << combo.k << '|' << combo.sizing << '|' << to_string(combo.aggregate)
        << '|' << to_string(combo.propagate);
    combos.emplace(key.str(), combo);
    for (std::uint64_t seed : ab.seeds)
      pending.push_back({knob, value, key.str(), seed});
  };

  for (Eigen::Index k : ab.k_values) {
    Combo c = base;
    c.k = k;
    push("k", std::to_string(k), c);
  }
  for (const std::string& name : ab.sizing) {
    Combo c = base;
    c.sizing = sizing_label(sizing_from_string(name, cfg.sizing));
    push("sizing", c.sizing, c);
  }
  for (AggregateFn fn : ab.aggregate) {
    Combo c = base;
    c.aggregate = fn;
    push("aggregate", to_string(fn), c);
  }
  for (PropagateFn fn : ab.propagate) {
    Combo c = base;
    c.propagate = fn;
    push("propagate", to_string(fn), c);
  }

  // One task per distinct (combo, seed).
  struct Task {
    std::string key;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  std::map<std::string, std::size_t> task_slot;
  for (const PendingRow& row : pending) {
    const std::string tkey = row.key + '#' + std::to_string(row.seed);
    if (task_slot.emplace(tkey, tasks.size()).second)
      tasks.push_back({row.key, row.seed});
  }

  std::vector<double> metrics(tasks.size(), 0.0);
  parallel_for(tasks.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const Combo& combo = combos.at(tasks[t].key);
      RunConfig run = cfg;
      run.index.k = combo.k;
      run.sizing = sizing_from_string(combo.sizing, cfg.sizing);
      run.pool.aggregate = combo.aggregate;
      run.pool.propagate = combo.propagate;
      // The untrained integrator would only blur what these knobs change;
      // the sweep measures the aggregation path.
      run.integrate.enabled = false;
      run.pipeline.scene_count = ab.scenes_per_seed;
      run.pipeline.seed = tasks[t].seed;
      metrics[t] = ablation_metric(run_pipeline(run, 1));
    }
  });

  std::vector<AblationRow> rows;
  rows.reserve(pending.size());
  for (const PendingRow& row : pending) {
    const std::string tkey = row.key + '#' + std::to_string(row.seed);
    rows.push_back(
        {row.knob, row.value, row.seed, metrics[task_slot.at(tkey)]});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "knob,value,seed,metric\n";
  for (const AblationRow& row : rows)
    os << row.knob << ',' << row.value << ',' << row.seed << ','
       << format_double(row.metric) << "\n";
  return os.str();
}

std::vector<AblationRow> parse_ablation_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "knob,value,seed,metric")
    throw ParseError("ablation csv: bad header");
  std::vector<AblationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string, 4> field;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      if (f < 3 && comma == std::string::npos)
        throw ParseError("ablation csv line " + std::to_string(line_no) +
                         ": expected 4 fields");
      if (f == 3 && comma != std::string::npos)
        throw ParseError("ablation csv line " + std::to_string(line_no) +
                         ": too many fields");
      field[static_cast<std::size_t>(f)] =
          line.substr(start, comma == std::string::npos ? std::string::npos
                                                        : comma - start);
      start = comma + 1;
    }
    AblationRow row;
    row.knob = field[0];
    row.value = field[1];
    try {
      std::size_t used = 0;
      row.seed = std::stoull(field[2], &used);
      if (used != field[2].size()) throw std::invalid_argument("seed");
      row.metric = std::stod(field[3], &used);
      if (used != field[3].size()) throw std::invalid_argument("metric");
    } catch (const std::exception&) {
      throw ParseError("ablation csv line " + std::to_string(line_no) +
                       ": bad number");
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dynagg
