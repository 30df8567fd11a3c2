#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dynagg/cloud.hpp"
#include "dynagg/som.hpp"

namespace dynagg {

/// The N x K table linking every point to its K_eff nearest skeleton
/// nodes, plus the derived per-node inverse lists and receptive-field
/// counts. g is the average receptive field size sum(T_j)/M = N*K_eff/M,
/// the divisor of semi-average pooling.
struct IndexMatrix {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint32_t k_eff = 0;
  std::vector<std::uint32_t> table;               // n * k_eff, row-major
  std::vector<std::vector<std::uint32_t>> inverse;  // per node, ascending
  std::vector<std::uint32_t> counts;                // T_j, length m
  double g = 0.0;

  std::uint32_t at(std::uint32_t point, std::uint32_t slot) const {
    return table[static_cast<std::size_t>(point) * k_eff + slot];
  }

  void validate() const;
};

/// K-nearest-node search for every point (kd-tree backed), ties broken
/// toward the lower node index, each row sorted ascending by distance.
/// K_eff = min(k, M).
IndexMatrix build_index(const PointCloud& cloud, const Skeleton& skeleton,
                        std::uint32_t k, unsigned jobs = 1);

/// Nodes never referenced by the table (T_j = 0), ascending.
std::vector<std::uint32_t> empty_nodes(const IndexMatrix& index);

/// Binary layout: magic "DGGI", u64 N, u32 M, u32 K_eff, then
/// N x K_eff u32 entries row-major, little endian.
void save_index_binary(const std::filesystem::path& path,
                       const IndexMatrix& index);
IndexMatrix load_index_binary(const std::filesystem::path& path);

}  // namespace dynagg
