#include "dynagg/som.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <json.hpp>

#include "dynagg/errors.hpp"
#include "dynagg/kdtree.hpp"
#include "dynagg/rng.hpp"

namespace dynagg {

void Skeleton::validate() const {
  const Eigen::Index m = node_positions.rows();
  if (m < 1) throw ShapeError("skeleton has no nodes");
  if (!node_positions.allFinite())
    throw ShapeError("skeleton has non-finite node positions");
  if (static_cast<Eigen::Index>(grid_rows) * grid_cols < m)
    throw ShapeError("skeleton lattice smaller than node count");
  if (node_order.size() != static_cast<std::size_t>(m))
    throw ShapeError("node_order length does not match node count");
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  for (std::uint32_t idx : node_order) {
    if (idx >= m || seen[idx])
      throw ShapeError("node_order is not a permutation");
    seen[idx] = true;
  }
}

void SomConfig::validate() const {
  if (!(initial_learning_rate > 0.0) || initial_learning_rate > 1.0)
    throw ConfigError("som.learning_rate must be in (0, 1]");
  if (epochs_max < 1) throw ConfigError("som.epochs_max must be >= 1");
  if (!(convergence_tol > 0.0))
    throw ConfigError("som.tol must be positive");
}

namespace {

std::pair<std::uint32_t, std::uint32_t> lattice_shape(std::uint32_t m) {
  const auto rows = static_cast<std::uint32_t>(
      std::floor(std::sqrt(static_cast<double>(m))));
  const std::uint32_t r = std::max<std::uint32_t>(rows, 1);
  const std::uint32_t c = (m + r - 1) / r;
  return {r, c};
}

}  // namespace

Skeleton init_skeleton(const PointCloud& cloud, std::uint32_t m,
                       const SomConfig& cfg) {
  cfg.validate();
  cloud.validate();
  if (m < 1) throw ConfigError("skeleton size must be >= 1");

  const Eigen::Vector3d lo = cloud.positions.colwise().minCoeff().transpose();
  const Eigen::Vector3d hi = cloud.positions.colwise().maxCoeff().transpose();

  Skeleton skeleton;
  auto [rows, cols] = lattice_shape(m);
  skeleton.grid_rows = rows;
  skeleton.grid_cols = cols;
  skeleton.node_positions.resize(m, 3);
  Rng rng(cfg.rng_seed);
  for (std::uint32_t j = 0; j < m; ++j)
    for (int a = 0; a < 3; ++a)
      skeleton.node_positions(j, a) = rng.uniform(lo[a], hi[a]);
  skeleton.node_order.resize(m);
  for (std::uint32_t j = 0; j < m; ++j) skeleton.node_order[j] = j;
  return skeleton;
}

Skeleton train_skeleton(const PointCloud& cloud, Skeleton skeleton,
                        const SomConfig& cfg) {
  cfg.validate();
  cloud.validate();
  skeleton.validate();

  const Eigen::Index m = skeleton.size();
  const Eigen::Index n = cloud.size();
  const std::uint32_t cols = skeleton.grid_cols;

  double radius0 = cfg.initial_neighborhood_radius;
  if (radius0 <= 0.0)
    radius0 = std::max(skeleton.grid_rows, skeleton.grid_cols) / 2.0;
  radius0 = std::max(radius0, 1.0);

  Rng rng(Rng::mix(cfg.rng_seed, 0x50a1));
  std::vector<std::uint32_t> visit_order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < visit_order.size(); ++i)
    visit_order[i] = static_cast<std::uint32_t>(i);

  // Neighborhood of each winner for the current epoch: pairs of
  // (node, gaussian weight) within the 3-sigma cutoff.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> hood(
      static_cast<std::size_t>(m));

  skeleton.training_log.clear();
  double prev_qe = std::numeric_limits<double>::quiet_NaN();

  // Two phases: an ordering phase anneals the neighborhood from radius0
  // down to 1 lattice unit (learning rate 0.4 -> 0.01 alongside); the
  // convergence phase then holds both floors and runs until the epoch
  // quantization error settles. Stopping is only allowed once annealing
  // is done — a wide neighborhood keeps the map contracted around the
  // data mean, which looks stationary to the QE long before the map has
  // actually organized.
  const std::uint32_t ordering_epochs =
      std::max<std::uint32_t>(1, cfg.epochs_max / 2);
  constexpr double kFloorRate = 0.01;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    const double frac = std::min(
        1.0, static_cast<double>(epoch) / static_cast<double>(ordering_epochs));
    const double lr = cfg.initial_learning_rate +
                      (kFloorRate - cfg.initial_learning_rate) * frac;
    const double radius = radius0 + (1.0 - radius0) * frac;
    const double sigma = radius / 2.0;
    const double cutoff_sq = 9.0 * sigma * sigma;
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

    for (std::uint32_t w = 0; w < m; ++w) {
      auto& list = hood[w];
      list.clear();
      const double wr = w / cols, wc = w % cols;
      for (std::uint32_t j = 0; j < m; ++j) {
        const double jr = j / cols, jc = j % cols;
        const double d_sq = (jr - wr) * (jr - wr) + (jc - wc) * (jc - wc);
        if (d_sq <= cutoff_sq)
          list.emplace_back(j, std::exp(-d_sq * inv_two_sigma_sq));
      }
    }

    rng.shuffle(visit_order);
    double qe_sum = 0.0;
    for (std::uint32_t i : visit_order) {
      const double px = cloud.positions(i, 0);
      const double py = cloud.positions(i, 1);
      const double pz = cloud.positions(i, 2);

      std::uint32_t winner = 0;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) {
        const double dx = skeleton.node_positions(j, 0) - px;
        const double dy = skeleton.node_positions(j, 1) - py;
        const double dz = skeleton.node_positions(j, 2) - pz;
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best) {
          best = d;
          winner = static_cast<std::uint32_t>(j);
        }
      }
      qe_sum += best;

      for (const auto& [j, h] : hood[winner]) {
        const double step = lr * h;
        skeleton.node_positions(j, 0) +=
            step * (px - skeleton.node_positions(j, 0));
        skeleton.node_positions(j, 1) +=
            step * (py - skeleton.node_positions(j, 1));
        skeleton.node_positions(j, 2) +=
            step * (pz - skeleton.node_positions(j, 2));
      }
    }

    const double qe = qe_sum / static_cast<double>(n);
    skeleton.training_log.push_back(qe);
    if (epoch > ordering_epochs) {
      const double rel = std::abs(qe - prev_qe) /
                         std::max(prev_qe, std::numeric_limits<double>::min());
      if (rel < cfg.convergence_tol) break;
    }
    prev_qe = qe;
  }
  return skeleton;
}

double quantization_error(const PointCloud& cloud, const Skeleton& skeleton) {
  cloud.validate();
  skeleton.validate();
  KdTree3 tree(skeleton.node_positions);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.positions.row(i).transpose();
    sum += tree.knn(p, 1).front().dist_sq;
  }
  return sum / static_cast<double>(cloud.size());
}

void save_skeleton_json(const std::filesystem::path& path,
                        const Skeleton& skeleton) {
  skeleton.validate();
  nlohmann::json j;
  j["m"] = skeleton.size();
  j["grid_shape"] = {skeleton.grid_rows, skeleton.grid_cols};
  auto nodes = nlohmann::json::array();
  for (Eigen::Index i = 0; i < skeleton.size(); ++i)
    nodes.push_back({skeleton.node_positions(i, 0),
                     skeleton.node_positions(i, 1),
                     skeleton.node_positions(i, 2)});
  j["nodes"] = std::move(nodes);
  j["order"] = skeleton.node_order;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Skeleton load_skeleton_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Skeleton skeleton;
  try {
    const auto m = j.at("m").get<Eigen::Index>();
    const auto shape = j.at("grid_shape");
    skeleton.grid_rows = shape.at(0).get<std::uint32_t>();
    skeleton.grid_cols = shape.at(1).get<std::uint32_t>();
    const auto& nodes = j.at("nodes");
    if (static_cast<Eigen::Index>(nodes.size()) != m)
      throw ParseError(path.string() + ": node list length mismatch");
    skeleton.node_positions.resize(m, 3);
    for (Eigen::Index i = 0; i < m; ++i)
      for (int a = 0; a < 3; ++a)
        skeleton.node_positions(i, a) =
            nodes.at(static_cast<std::size_t>(i)).at(a).get<double>();
    skeleton.node_order = j.at("order").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  skeleton.validate();
  return skeleton;
}

}  // namespace dynagg
