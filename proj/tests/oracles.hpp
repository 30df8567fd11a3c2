#pragma once

// Brute-force reference implementations and shared helpers for the test
// suite. Everything in here is intentionally naive (quadratic scans, plain
// loops) so the optimized library code has an independent yardstick. The
// accumulation order of every oracle mirrors the library's documented
// order, which makes exact floating-point comparison legitimate.

#include <unistd.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dynagg/cloud.hpp"
#include "dynagg/index.hpp"
#include "dynagg/kdtree.hpp"
#include "dynagg/pool.hpp"
#include "dynagg/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// generic helpers

/// Runs fn and returns the message of the expected exception type, or an
/// empty string when fn does not throw it. Lets tests assert on message
/// fragments without pinning the full wording.
template <typename Exception, typename Fn>
std::string catch_message(Fn&& fn) {
  try {
    fn();
  } catch (const Exception& e) {
    return e.what();
  } catch (...) {
  }
  return {};
}

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

/// |analytic - numeric| within rel_tol of the larger magnitude, with an
/// absolute floor for gradients that are (near) zero.
inline bool grad_close(double analytic, double numeric, double rel_tol,
                       double abs_floor) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return std::abs(analytic - numeric) <= std::max(rel_tol * scale, abs_floor);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Self-cleaning unique directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dynagg_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// random instance generators (all seeded through dynagg::Rng)

inline Eigen::MatrixX3d random_points(dynagg::Rng& rng, Eigen::Index n,
                                      double lo = 0.0, double hi = 1.0) {
  Eigen::MatrixX3d out(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) out(i, a) = rng.uniform(lo, hi);
  return out;
}

inline Eigen::MatrixXd random_matrix(dynagg::Rng& rng, Eigen::Index rows,
                                     Eigen::Index cols, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) out(i, c) = rng.uniform(lo, hi);
  return out;
}

inline dynagg::PointCloud random_cloud(dynagg::Rng& rng, Eigen::Index n,
                                       Eigen::Index channels = 0,
                                       std::uint32_t num_classes = 0) {
  dynagg::PointCloud cloud;
  cloud.positions = random_points(rng, n);
  cloud.features = channels > 0 ? random_matrix(rng, n, channels)
                                : Eigen::MatrixXd(n, 0);
  if (num_classes > 0) {
    cloud.labels.resize(static_cast<std::size_t>(n));
    for (auto& l : cloud.labels)
      l = static_cast<std::uint32_t>(rng.uniform_index(num_classes));
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// nearest-neighbor oracles

/// Exhaustive k-nearest scan with the library's tie rule: ascending
/// (dist_sq, index). The distance expression mirrors KdTree3 exactly.
inline std::vector<dynagg::Neighbor> brute_knn(const Eigen::MatrixX3d& points,
                                               const Eigen::Vector3d& query,
                                               std::size_t k) {
  std::vector<dynagg::Neighbor> all;
  all.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::Vector3d p = points.row(i).transpose();
    all.push_back({(p - query).squaredNorm(), static_cast<std::uint32_t>(i)});
  }
  std::sort(all.begin(), all.end());
  if (all.size() > k) all.resize(k);
  return all;
}

/// Builds a valid IndexMatrix from a raw table: counts, ascending inverse
/// lists and g are derived the same way the library derives them.
inline dynagg::IndexMatrix make_index(std::uint32_t n, std::uint32_t m,
                                      std::uint32_t k_eff,
                                      std::vector<std::uint32_t> table) {
  dynagg::IndexMatrix index;
  index.n = n;
  index.m = m;
  index.k_eff = k_eff;
  index.table = std::move(table);
  index.counts.assign(m, 0);
  for (std::uint32_t entry : index.table) ++index.counts[entry];
  index.inverse.assign(m, {});
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t s = 0; s < k_eff; ++s)
      index.inverse[index.at(i, s)].push_back(i);
  index.g = static_cast<double>(static_cast<std::uint64_t>(n) * k_eff) /
            static_cast<double>(m);
  index.validate();
  return index;
}

/// Quadratic index construction: per point, the k_eff nearest nodes with
/// ties toward the lower node index.
inline dynagg::IndexMatrix brute_index(const dynagg::PointCloud& cloud,
                                       const Eigen::MatrixX3d& nodes,
                                       std::uint32_t k) {
  const auto n = static_cast<std::uint32_t>(cloud.size());
  const auto m = static_cast<std::uint32_t>(nodes.rows());
  const std::uint32_t k_eff = std::min(k, m);
  std::vector<std::uint32_t> table;
  table.reserve(static_cast<std::size_t>(n) * k_eff);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto nb = brute_knn(
        nodes, cloud.positions.row(static_cast<Eigen::Index>(i)).transpose(),
        k_eff);
    for (const auto& x : nb) table.push_back(x.index);
  }
  return make_index(n, m, k_eff, std::move(table));
}

// ---------------------------------------------------------------------------
// pooling oracles (loop order mirrors the library so sums match bitwise)

inline Eigen::MatrixXd brute_aggregate(const Eigen::MatrixXd& features,
                                       const dynagg::IndexMatrix& index,
                                       dynagg::AggregateFn fn) {
  const Eigen::Index channels = features.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(index.m, channels);
  for (std::uint32_t j = 0; j < index.m; ++j) {
    if (index.counts[j] == 0) continue;
    if (fn == dynagg::AggregateFn::max) {
      for (Eigen::Index c = 0; c < channels; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        bool first = true;
        for (std::uint32_t i = 0; i < index.n; ++i)
          for (std::uint32_t s = 0; s < index.k_eff; ++s)
            if (index.at(i, s) == j) {
              const double v = features(i, c);
              if (first || v > best) {
                best = v;
                first = false;
              }
            }
        out(j, c) = best;
      }
    } else {
      for (std::uint32_t i = 0; i < index.n; ++i)
        for (std::uint32_t s = 0; s < index.k_eff; ++s)
          if (index.at(i, s) == j) out.row(j) += features.row(i);
      const double divisor = fn == dynagg::AggregateFn::semi_average
                                 ? index.g
                                 : static_cast<double>(index.counts[j]);
      out.row(j) /= divisor;
    }
  }
  return out;
}

inline Eigen::MatrixXd brute_aggregate_backward(
    const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& features,
    const dynagg::IndexMatrix& index, dynagg::AggregateFn fn) {
  const Eigen::Index channels = grad_out.cols();
  Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(index.n, channels);
  for (std::uint32_t j = 0; j < index.m; ++j) {
    if (index.counts[j] == 0) continue;
    switch (fn) {
      case dynagg::AggregateFn::semi_average: {
        for (std::uint32_t i = 0; i < index.n; ++i)
          for (std::uint32_t s = 0; s < index.k_eff; ++s)
            if (index.at(i, s) == j)
              grad_in.row(i) += grad_out.row(j) / index.g;
        break;
      }
      case dynagg::AggregateFn::mean: {
        const double inv = 1.0 / static_cast<double>(index.counts[j]);
        for (std::uint32_t i = 0; i < index.n; ++i)
          for (std::uint32_t s = 0; s < index.k_eff; ++s)
            if (index.at(i, s) == j) grad_in.row(i) += grad_out.row(j) * inv;
        break;
      }
      case dynagg::AggregateFn::max: {
        for (Eigen::Index c = 0; c < channels; ++c) {
          std::int64_t arg = -1;
          double best = -std::numeric_limits<double>::infinity();
          for (std::uint32_t i = 0; i < index.n; ++i)
            for (std::uint32_t s = 0; s < index.k_eff; ++s)
              if (index.at(i, s) == j) {
                const double v = features(i, c);
                if (arg < 0 || v > best) {
                  best = v;
                  arg = i;
                }
              }
          if (arg >= 0) grad_in(arg, c) += grad_out(j, c);
        }
        break;
      }
    }
  }
  return grad_in;
}

inline Eigen::MatrixXd brute_propagate(const Eigen::MatrixXd& node_features,
                                       const dynagg::IndexMatrix& index,
                                       dynagg::PropagateFn fn) {
  const Eigen::Index channels = node_features.cols();
  Eigen::MatrixXd out(index.n, channels);
  for (std::uint32_t i = 0; i < index.n; ++i) {
    if (fn == dynagg::PropagateFn::max) {
      for (Eigen::Index c = 0; c < channels; ++c) {
        double best = node_features(index.at(i, 0), c);
        for (std::uint32_t s = 1; s < index.k_eff; ++s)
          best = std::max(best, node_features(index.at(i, s), c));
        out(i, c) = best;
      }
    } else {
      out.row(i).setZero();
      for (std::uint32_t s = 0; s < index.k_eff; ++s)
        out.row(i) += node_features.row(index.at(i, s));
      out.row(i) /= static_cast<double>(index.k_eff);
    }
  }
  return out;
}

inline Eigen::MatrixXd brute_propagate_backward(
    const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& node_features,
    const dynagg::IndexMatrix& index, dynagg::PropagateFn fn) {
  const Eigen::Index channels = grad_out.cols();
  Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(index.m, channels);
  for (std::uint32_t i = 0; i < index.n; ++i) {
    if (fn == dynagg::PropagateFn::max) {
      for (Eigen::Index c = 0; c < channels; ++c) {
        std::uint32_t best_slot = 0;
        double best = node_features(index.at(i, 0), c);
        for (std::uint32_t s = 1; s < index.k_eff; ++s) {
          const double v = node_features(index.at(i, s), c);
          if (v > best) {  // strict: ties keep the lowest slot
            best = v;
            best_slot = s;
          }
        }
        grad_in(index.at(i, best_slot), c) += grad_out(i, c);
      }
    } else {
      const double inv = 1.0 / static_cast<double>(index.k_eff);
      for (std::uint32_t s = 0; s < index.k_eff; ++s)
        grad_in.row(index.at(i, s)) += grad_out.row(i) * inv;
    }
  }
  return grad_in;
}

/// Random index instance over a fresh cloud: N points, M nodes, K slots.
inline dynagg::IndexMatrix random_index(dynagg::Rng& rng, std::uint32_t n,
                                        std::uint32_t m, std::uint32_t k) {
  dynagg::PointCloud cloud = random_cloud(rng, n);
  const Eigen::MatrixX3d nodes = random_points(rng, m);
  return brute_index(cloud, nodes, k);
}

}  // namespace oracle
