#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dynagg {

enum class CloudFormat { csv, binary };

/// N points with coordinates in meters, optional per-point feature
/// channels and optional class labels.
struct PointCloud {
  Eigen::MatrixX3d positions;          // N x 3
  Eigen::MatrixXd features;            // N x C, zero columns when absent
  std::vector<std::uint32_t> labels;   // empty or length N
  std::optional<double> resolution_tag;  // grid resolution in cm, if any

  Eigen::Index size() const { return positions.rows(); }
  Eigen::Index channels() const { return features.cols(); }
  bool has_features() const { return features.cols() > 0; }
  bool has_labels() const { return !labels.empty(); }

  /// Throws ShapeError when an invariant is broken: N >= 1, finite
  /// coordinates/features, feature and label row counts matching N.
  void validate() const;
};

/// Per-axis min-max record produced by normalize_unit_cube. Degenerate
/// axes keep scale 0 and map to 0.5 in the unit frame.
struct UnitCubeTransform {
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();

  Eigen::Vector3d to_unit(const Eigen::Vector3d& world) const;
  Eigen::Vector3d to_world(const Eigen::Vector3d& unit) const;
  Eigen::MatrixX3d to_world(const Eigen::MatrixX3d& unit) const;
};

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                CloudFormat format);

/// Min-max scale every axis into [0,1]; zero-extent axes map to 0.5.
std::pair<PointCloud, UnitCubeTransform> normalize_unit_cube(
    const PointCloud& cloud);

/// Voxel-grid reduction: one point per occupied cell of side `cell_cm`
/// (centimeters), positioned at the member centroid with channel-wise
/// mean features and majority-vote labels (ties to the smallest id).
/// Voxels are anchored at the coordinate origin, so re-running at the
/// same cell size is a no-op. Output order is first occurrence in the
/// input.
PointCloud grid_downsample(const PointCloud& cloud, double cell_cm);

/// Label every `fine` point with the label of its nearest `coarse` point
/// (Euclidean; ties to the lowest coarse index).
std::vector<std::uint32_t> nearest_neighbor_extrapolate(
    const PointCloud& coarse, const PointCloud& fine, unsigned jobs = 1);

}  // namespace dynagg
