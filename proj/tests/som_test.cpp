#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "dynagg/cloud.hpp"
#include "dynagg/errors.hpp"
#include "dynagg/rng.hpp"
#include "dynagg/som.hpp"
#include "oracles.hpp"

using dynagg::ConfigError;
using dynagg::init_skeleton;
using dynagg::load_skeleton_json;
using dynagg::ParseError;
using dynagg::PointCloud;
using dynagg::quantization_error;
using dynagg::Rng;
using dynagg::save_skeleton_json;
using dynagg::ShapeError;
using dynagg::Skeleton;
using dynagg::SomConfig;
using dynagg::train_skeleton;

namespace {

/// n points uniform in an axis-aligned cube of the given side around c.
PointCloud cube_cloud(Rng& rng, Eigen::Index n, const Eigen::Vector3d& c,
                      double side) {
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a)
      cloud.positions(i, a) = c[a] + rng.uniform(-side / 2, side / 2);
  cloud.features.resize(n, 0);
  return cloud;
}

/// n points uniform in a ball of the given radius around c.
PointCloud ball_cloud(Rng& rng, Eigen::Index n, const Eigen::Vector3d& c,
                      double radius) {
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  Eigen::Index i = 0;
  while (i < n) {
    const Eigen::Vector3d p(rng.uniform(-radius, radius),
                            rng.uniform(-radius, radius),
                            rng.uniform(-radius, radius));
    if (p.norm() <= radius) {
      cloud.positions.row(i) = (c + p).transpose();
      ++i;
    }
  }
  cloud.features.resize(n, 0);
  return cloud;
}

PointCloud concat(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.positions.resize(a.size() + b.size(), 3);
  out.positions << a.positions, b.positions;
  out.features.resize(out.size(), 0);
  return out;
}

}  // namespace

TEST_SUITE("som") {

TEST_CASE("lattice factorization is near-square") {
  Rng rng(81);
  const PointCloud cloud = oracle::random_cloud(rng, 20);
  SomConfig cfg;

  auto shape = [&](std::uint32_t m) {
    const Skeleton s = init_skeleton(cloud, m, cfg);
    return std::pair<std::uint32_t, std::uint32_t>{s.grid_rows, s.grid_cols};
  };
  CHECK(shape(1) == std::pair<std::uint32_t, std::uint32_t>{1, 1});
  CHECK(shape(2) == std::pair<std::uint32_t, std::uint32_t>{1, 2});
  CHECK(shape(7) == std::pair<std::uint32_t, std::uint32_t>{2, 4});
  CHECK(shape(12) == std::pair<std::uint32_t, std::uint32_t>{3, 4});
  CHECK(shape(16) == std::pair<std::uint32_t, std::uint32_t>{4, 4});
  // rows * cols always covers m
  for (std::uint32_t m : {3u, 5u, 11u, 13u, 99u, 100u, 101u}) {
    const auto [r, c] = shape(m);
    CHECK(static_cast<std::uint64_t>(r) * c >= m);
    CHECK(r == static_cast<std::uint32_t>(std::floor(std::sqrt(double(m)))));
  }
}

TEST_CASE("init places nodes inside the bounding box, deterministically") {
  Rng rng(82);
  PointCloud cloud = oracle::random_cloud(rng, 50);
  cloud.positions.col(1) *= 0.25;  // squash one axis

  SomConfig cfg;
  cfg.rng_seed = 7;
  const Skeleton a = init_skeleton(cloud, 12, cfg);
  const Skeleton b = init_skeleton(cloud, 12, cfg);
  CHECK(a.node_positions == b.node_positions);

  const Eigen::Vector3d lo = cloud.positions.colwise().minCoeff().transpose();
  const Eigen::Vector3d hi = cloud.positions.colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < a.size(); ++j)
    for (int axis = 0; axis < 3; ++axis) {
      CHECK(a.node_positions(j, axis) >= lo[axis]);
      CHECK(a.node_positions(j, axis) <= hi[axis]);
    }

  // node_order starts as the identity permutation
  for (std::uint32_t j = 0; j < 12; ++j) CHECK(a.node_order[j] == j);

  cfg.rng_seed = 8;
  const Skeleton c = init_skeleton(cloud, 12, cfg);
  CHECK(a.node_positions != c.node_positions);

  CHECK_THROWS_AS(init_skeleton(cloud, 0, cfg), ConfigError);
}

TEST_CASE("a single node converges to the cloud centroid") {
  Rng rng(83);
  const PointCloud cloud =
      cube_cloud(rng, 200, Eigen::Vector3d(0.3, 0.6, 0.45), 0.1);
  SomConfig cfg;
  cfg.rng_seed = 3;
  const Skeleton trained = train_skeleton(cloud, init_skeleton(cloud, 1, cfg), cfg);
  const Eigen::Vector3d centroid =
      cloud.positions.colwise().mean().transpose();
  CHECK((trained.node_positions.row(0).transpose() - centroid).norm() < 1e-2);
}

TEST_CASE("two nodes split two tight clusters") {
  Rng rng(84);
  const Eigen::Vector3d ca(0.25, 0.5, 0.5), cb(0.75, 0.5, 0.5);
  const double radius = 0.1;
  const PointCloud cloud =
      concat(ball_cloud(rng, 100, ca, radius), ball_cloud(rng, 100, cb, radius));

  SomConfig cfg;
  cfg.rng_seed = 5;
  const Skeleton trained = train_skeleton(cloud, init_skeleton(cloud, 2, cfg), cfg);

  for (const Eigen::Vector3d& center : {ca, cb}) {
    double best = 1e9;
    for (Eigen::Index j = 0; j < 2; ++j)
      best = std::min(best,
                      (trained.node_positions.row(j).transpose() - center).norm());
    CHECK(best <= radius);
  }
}

TEST_CASE("epochs_max 1 runs exactly one epoch") {
  Rng rng(85);
  const PointCloud cloud = oracle::random_cloud(rng, 100);
  SomConfig cfg;
  cfg.epochs_max = 1;
  cfg.convergence_tol = 1e9;
  const Skeleton init = init_skeleton(cloud, 9, cfg);
  const Skeleton trained = train_skeleton(cloud, init, cfg);
  CHECK(trained.training_log.size() == 1);
  CHECK(trained.node_positions != init.node_positions);  // one epoch moved
}

TEST_CASE("training is deterministic per seed") {
  Rng rng(86);
  const PointCloud cloud = oracle::random_cloud(rng, 300);
  SomConfig cfg;
  cfg.rng_seed = 11;
  cfg.epochs_max = 30;
  const Skeleton a = train_skeleton(cloud, init_skeleton(cloud, 16, cfg), cfg);
  const Skeleton b = train_skeleton(cloud, init_skeleton(cloud, 16, cfg), cfg);
  CHECK(a.node_positions == b.node_positions);
  CHECK(a.training_log == b.training_log);
}

TEST_CASE("quantization error hand values and oracle") {
  // nodes exactly on the points -> zero
  Rng rng(87);
  PointCloud cloud = oracle::random_cloud(rng, 8);
  Skeleton on_points;
  on_points.node_positions = cloud.positions;
  on_points.grid_rows = 2;
  on_points.grid_cols = 4;
  on_points.node_order = {0, 1, 2, 3, 4, 5, 6, 7};
  CHECK(quantization_error(cloud, on_points) == 0.0);

  // one node at the origin, one point at (1,0,0) -> squared distance 1
  PointCloud one;
  one.positions.resize(1, 3);
  one.positions << 1, 0, 0;
  one.features.resize(1, 0);
  Skeleton origin;
  origin.node_positions = Eigen::MatrixX3d::Zero(1, 3);
  origin.grid_rows = origin.grid_cols = 1;
  origin.node_order = {0};
  CHECK(quantization_error(one, origin) == 1.0);

  // random instance vs exhaustive scan
  const PointCloud pts = oracle::random_cloud(rng, 120);
  SomConfig cfg;
  const Skeleton nodes = init_skeleton(pts, 10, cfg);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pts.size(); ++i)
    sum += oracle::brute_knn(nodes.node_positions,
                             pts.positions.row(i).transpose(), 1)
               .front()
               .dist_sq;
  CHECK(quantization_error(pts, nodes) ==
        doctest::Approx(sum / double(pts.size())).epsilon(1e-12));
}

TEST_CASE("quantization error settles over the final half of training") {
  Rng rng(88);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const PointCloud cloud = oracle::random_cloud(rng, 400);
    SomConfig cfg;
    cfg.rng_seed = seed;
    cfg.convergence_tol = 1e-12;  // force a full run
    cfg.epochs_max = 60;
    const Skeleton trained =
        train_skeleton(cloud, init_skeleton(cloud, 12, cfg), cfg);
    const auto& log = trained.training_log;
    REQUIRE(log.size() >= 2);
    for (std::size_t e = log.size() / 2; e < log.size(); ++e)
      CHECK(log[e] <= log[e - 1] * 1.05);
  }
}

TEST_CASE("trained nodes stay near the unit cube") {
  Rng rng(89);
  const PointCloud cloud = oracle::random_cloud(rng, 500);
  SomConfig cfg;
  cfg.rng_seed = 13;
  const Skeleton trained =
      train_skeleton(cloud, init_skeleton(cloud, 25, cfg), cfg);
  for (Eigen::Index j = 0; j < trained.size(); ++j)
    for (int a = 0; a < 3; ++a) {
      CHECK(trained.node_positions(j, a) >= -0.1);
      CHECK(trained.node_positions(j, a) <= 1.1);
    }
}

TEST_CASE("training log is filled and convergence can stop early") {
  Rng rng(90);
  const PointCloud cloud = oracle::random_cloud(rng, 200);
  SomConfig cfg;
  cfg.rng_seed = 17;
  cfg.epochs_max = 100;
  cfg.convergence_tol = 0.05;  // loose: should stop well before 100
  const Skeleton trained =
      train_skeleton(cloud, init_skeleton(cloud, 9, cfg), cfg);
  CHECK(trained.training_log.size() >= 1);
  CHECK(trained.training_log.size() < 100);
}

TEST_CASE("config validation") {
  SomConfig bad_lr;
  bad_lr.initial_learning_rate = 0.0;
  CHECK_THROWS_AS(bad_lr.validate(), ConfigError);
  bad_lr.initial_learning_rate = 1.5;
  CHECK_THROWS_AS(bad_lr.validate(), ConfigError);

  SomConfig bad_epochs;
  bad_epochs.epochs_max = 0;
  CHECK_THROWS_AS(bad_epochs.validate(), ConfigError);

  SomConfig bad_tol;
  bad_tol.convergence_tol = 0.0;
  CHECK_THROWS_AS(bad_tol.validate(), ConfigError);

  CHECK_NOTHROW(SomConfig{}.validate());
}

TEST_CASE("skeleton validation") {
  Skeleton s;
  s.node_positions = Eigen::MatrixX3d::Zero(4, 3);
  s.grid_rows = 2;
  s.grid_cols = 2;
  s.node_order = {0, 1, 2, 3};
  CHECK_NOTHROW(s.validate());

  Skeleton small_grid = s;
  small_grid.grid_cols = 1;  // 2*1 < 4
  CHECK_THROWS_AS(small_grid.validate(), ShapeError);

  Skeleton bad_order = s;
  bad_order.node_order = {0, 1, 2, 2};
  CHECK_THROWS_AS(bad_order.validate(), ShapeError);

  Skeleton short_order = s;
  short_order.node_order = {0, 1};
  CHECK_THROWS_AS(short_order.validate(), ShapeError);

  Skeleton nan_node = s;
  nan_node.node_positions(1, 1) = std::nan("");
  CHECK_THROWS_AS(nan_node.validate(), ShapeError);
}

TEST_CASE("json round trip preserves the skeleton exactly") {
  Rng rng(91);
  const PointCloud cloud = oracle::random_cloud(rng, 60);
  SomConfig cfg;
  cfg.rng_seed = 19;
  cfg.epochs_max = 20;
  Skeleton s = train_skeleton(cloud, init_skeleton(cloud, 6, cfg), cfg);
  s.node_order = {3, 1, 4, 0, 2, 5};  // non-trivial permutation survives

  oracle::TempDir dir;
  const auto path = dir / "skeleton.json";
  save_skeleton_json(path, s);
  const Skeleton back = load_skeleton_json(path);
  CHECK(back.node_positions == s.node_positions);
  CHECK(back.grid_rows == s.grid_rows);
  CHECK(back.grid_cols == s.grid_cols);
  CHECK(back.node_order == s.node_order);
}

TEST_CASE("skeleton json rejects malformed input") {
  oracle::TempDir dir;

  const auto garbled = dir / "garbled.json";
  std::ofstream(garbled) << "{ not json";
  CHECK_THROWS_AS(load_skeleton_json(garbled), ParseError);

  const auto mismatch = dir / "mismatch.json";
  std::ofstream(mismatch)
      << R"({"m": 3, "grid_shape": [1, 3], "nodes": [[0,0,0]], "order": [0,1,2]})";
  CHECK(oracle::contains(oracle::catch_message<ParseError>(
                             [&] { load_skeleton_json(mismatch); }),
                         "length mismatch"));

  const auto missing = dir / "missing.json";
  std::ofstream(missing) << R"({"m": 1, "nodes": [[0,0,0]], "order": [0]})";
  CHECK_THROWS_AS(load_skeleton_json(missing), ParseError);

  const auto bad_order = dir / "bad_order.json";
  std::ofstream(bad_order)
      << R"({"m": 2, "grid_shape": [1, 2], "nodes": [[0,0,0],[1,1,1]], "order": [0,0]})";
  CHECK_THROWS_AS(load_skeleton_json(bad_order), ShapeError);

  CHECK_THROWS_AS(load_skeleton_json(dir / "absent.json"), ParseError);
}

}  // TEST_SUITE
