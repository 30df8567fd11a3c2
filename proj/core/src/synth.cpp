#include "dynagg/synth.hpp"

#include <cmath>
#include <string>

#include "dynagg/errors.hpp"
#include "dynagg/rng.hpp"

namespace dynagg {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("synth." + field + ": " + what);
}

/// Uniform sample inside a ball of radius r (exact at r = 0).
Eigen::Vector3d ball_sample(Rng& rng, double r) {
  Eigen::Vector3d dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
  const double u = rng.uniform();
  const double norm = dir.norm();
  if (r == 0.0 || norm < 1e-12) return Eigen::Vector3d::Zero();
  return dir * (r * std::cbrt(u) / norm);
}

}  // namespace

void SceneSpec::validate() const {
  require(std::isfinite(extent_x) && extent_x > 0, "extent_x", "must be > 0");
  require(std::isfinite(extent_y) && extent_y > 0, "extent_y", "must be > 0");
  require(std::isfinite(extent_z) && extent_z > 0, "extent_z", "must be > 0");
  require(floor_points >= 1, "floor_points", "must be >= 1");
  require(ceiling_points >= 1, "ceiling_points", "must be >= 1");
  require(wall_points >= 1, "wall_points", "must be >= 1");
  require(cluster_count >= 1, "cluster_count", "must be >= 1");
  require(cluster_points >= 1, "cluster_points", "must be >= 1");
  require(std::isfinite(cluster_radius) && cluster_radius >= 0,
          "cluster_radius", "must be >= 0");
  require(std::isfinite(feature_noise) && feature_noise >= 0, "feature_noise",
          "must be >= 0");
  require(cluster_class_span >= 1, "cluster_class_span", "must be >= 1");
  require(total_points() <= 200000, "total point count",
          "exceeds the 2e5 scene budget");
}

Eigen::Index SceneSpec::total_points() const {
  return floor_points + ceiling_points + wall_points +
         cluster_count * cluster_points;
}

std::uint32_t SceneSpec::num_classes() const {
  std::uint32_t top = std::max({floor_class, ceiling_class, wall_class});
  const auto used_span = static_cast<std::uint32_t>(
      std::min<Eigen::Index>(cluster_class_span, cluster_count));
  top = std::max(top, cluster_class_base + used_span - 1);
  return top + 1;
}

Eigen::Vector3d class_palette(std::uint32_t class_id) {
  const double t = static_cast<double>(class_id) * 2.39996;  // golden angle
  return {0.5 + 0.45 * std::sin(t), 0.5 + 0.45 * std::sin(t + 2.094),
          0.5 + 0.45 * std::sin(t + 4.189)};
}

PointCloud generate_scene(const SceneSpec& spec, SceneLayout* layout) {
  spec.validate();
  Rng rng(spec.rng_seed);

  // Cluster centres first: rejection-sampled for separation so objects do
  // not merge into one blob. Falls back to the last draw if the box is too
  // crowded, keeping generation total.
  const double margin = std::max(spec.cluster_radius, 0.05);
  const double min_sep = 3.0 * spec.cluster_radius;
  Eigen::MatrixX3d centers(spec.cluster_count, 3);
  for (Eigen::Index d = 0; d < spec.cluster_count; ++d) {
    Eigen::Vector3d c;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      c = {rng.uniform(margin, spec.extent_x - margin),
           rng.uniform(margin, spec.extent_y - margin),
           rng.uniform(margin, spec.extent_z - margin)};
      bool ok = true;
      for (Eigen::Index e = 0; e < d; ++e)
        if ((centers.row(e).transpose() - c).norm() < min_sep) {
          ok = false;
          break;
        }
      if (ok) break;
    }
    centers.row(d) = c.transpose();
  }
  if (layout) {
    layout->cluster_centers = centers;
    layout->cluster_radius = spec.cluster_radius;
  }

  const Eigen::Index n = spec.total_points();
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  cloud.features.resize(n, 3);
  cloud.labels.resize(static_cast<std::size_t>(n));

  Eigen::Index row = 0;
  auto emit = [&](const Eigen::Vector3d& p, std::uint32_t cls) {
    cloud.positions.row(row) = p.transpose();
    const Eigen::Vector3d base = class_palette(cls);
    for (int ch = 0; ch < 3; ++ch)
      cloud.features(row, ch) = base[ch] + spec.feature_noise * rng.gaussian();
    cloud.labels[static_cast<std::size_t>(row)] = cls;
    ++row;
  };

  for (Eigen::Index i = 0; i < spec.floor_points; ++i)
    emit({rng.uniform(0, spec.extent_x), rng.uniform(0, spec.extent_y), 0.0},
         spec.floor_class);
  for (Eigen::Index i = 0; i < spec.ceiling_points; ++i)
    emit({rng.uniform(0, spec.extent_x), rng.uniform(0, spec.extent_y),
          spec.extent_z},
         spec.ceiling_class);
  for (Eigen::Index i = 0; i < spec.wall_points; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform(0, spec.extent_z);
    switch (i % 4) {
      case 0:
        emit({u * spec.extent_x, 0.0, v}, spec.wall_class);
        break;
      case 1:
        emit({u * spec.extent_x, spec.extent_y, v}, spec.wall_class);
        break;
      case 2:
        emit({0.0, u * spec.extent_y, v}, spec.wall_class);
        break;
      default:
        emit({spec.extent_x, u * spec.extent_y, v}, spec.wall_class);
        break;
    }
  }
  for (Eigen::Index d = 0; d < spec.cluster_count; ++d) {
    const auto cls = static_cast<std::uint32_t>(
        spec.cluster_class_base +
        static_cast<std::uint32_t>(d % spec.cluster_class_span));
    for (Eigen::Index i = 0; i < spec.cluster_points; ++i)
      emit(centers.row(d).transpose() + ball_sample(rng, spec.cluster_radius),
           cls);
  }

  cloud.validate();
  return cloud;
}

}  // namespace dynagg
