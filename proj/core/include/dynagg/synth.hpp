#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dynagg/cloud.hpp"

namespace dynagg {

/// Recipe for a deterministic synthetic indoor scene: large uniform
/// surfaces (floor, ceiling, four walls) plus a handful of small dense
/// clusters standing in for feature-rich objects. Three colour-like
/// feature channels carry a per-class palette with additive noise so a
/// downstream classifier has signal to work with.
struct SceneSpec {
  /// Every generated cloud carries this many feature channels.
  static constexpr Eigen::Index feature_channels = 3;

  double extent_x = 8.0;  // metres
  double extent_y = 6.0;
  double extent_z = 3.0;

  Eigen::Index floor_points = 4000;
  Eigen::Index ceiling_points = 1000;
  Eigen::Index wall_points = 2000;  // split round-robin over the four walls

  Eigen::Index cluster_count = 4;
  Eigen::Index cluster_points = 300;  // per cluster
  double cluster_radius = 0.25;       // metres; 0 collapses a cluster to a point

  double feature_noise = 0.05;  // stddev of the per-channel palette jitter

  std::uint32_t floor_class = 0;
  std::uint32_t ceiling_class = 1;
  std::uint32_t wall_class = 2;
  std::uint32_t cluster_class_base = 3;   // cluster d gets base + d % span
  Eigen::Index cluster_class_span = 2;

  std::uint64_t rng_seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  Eigen::Index total_points() const;
  std::uint32_t num_classes() const;
};

/// Where the generator actually placed things — needed by tests that check
/// skeleton nodes land on the clusters.
struct SceneLayout {
  Eigen::MatrixX3d cluster_centers;  // D x 3, world frame
  double cluster_radius = 0.0;
};

/// Deterministic per seed: same spec, same bytes. Points come out in a
/// fixed order (floor, ceiling, walls, clusters) with labels and three
/// feature channels attached.
PointCloud generate_scene(const SceneSpec& spec, SceneLayout* layout = nullptr);

/// The palette colour assigned to a class id (unit-range components).
Eigen::Vector3d class_palette(std::uint32_t class_id);

}  // namespace dynagg
