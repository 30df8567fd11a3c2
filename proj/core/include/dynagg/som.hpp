#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dynagg/cloud.hpp"

namespace dynagg {

/// M pooling nodes arranged on a near-square 2D lattice. Node j sits at
/// lattice cell (j / grid_cols, j % grid_cols); that row-major order is
/// also the sequence order consumed by the recurrent integrator.
struct Skeleton {
  Eigen::MatrixX3d node_positions;      // M x 3, same frame as the cloud
  std::uint32_t grid_rows = 0;
  std::uint32_t grid_cols = 0;
  std::vector<std::uint32_t> node_order;  // serialization permutation
  std::vector<double> training_log;       // per-epoch quantization error

  Eigen::Index size() const { return node_positions.rows(); }
  void validate() const;
};

struct SomConfig {
  double initial_learning_rate = 0.4;
  /// In lattice units; values <= 0 select max(grid_rows, grid_cols) / 2.
  double initial_neighborhood_radius = 0.0;
  std::uint32_t epochs_max = 100;
  /// Relative change of epoch quantization error that counts as converged.
  double convergence_tol = 1e-3;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Place m nodes uniformly at random inside the cloud's per-axis bounding
/// box. The lattice is the tightest near-square factorization with
/// rows = floor(sqrt(m)) and rows*cols >= m. Deterministic per seed.
Skeleton init_skeleton(const PointCloud& cloud, std::uint32_t m,
                       const SomConfig& cfg);

/// Kohonen training: per epoch the points are visited in a seeded shuffled
/// order, the winner is the nearest node (ties to the lower index), and
/// every node within the neighborhood moves by
/// lr * exp(-d_grid^2 / (2 sigma^2)) * (p - s) with sigma = radius / 2.
/// The first half of epochs_max is the ordering phase, annealing the
/// learning rate from initial_learning_rate to 0.01 and the radius from
/// initial_neighborhood_radius to 1 lattice unit; both then stay at their
/// floors until the relative change of the epoch quantization error drops
/// below convergence_tol (checked only after annealing) or epochs_max is
/// reached.
Skeleton train_skeleton(const PointCloud& cloud, Skeleton skeleton,
                        const SomConfig& cfg);

/// Mean over points of the squared distance to the nearest node.
double quantization_error(const PointCloud& cloud, const Skeleton& skeleton);

/// JSON schema: {m, grid_shape:[r,c], nodes:[[x,y,z],...], order:[...]}
void save_skeleton_json(const std::filesystem::path& path,
                        const Skeleton& skeleton);
Skeleton load_skeleton_json(const std::filesystem::path& path);

}  // namespace dynagg
