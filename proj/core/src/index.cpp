#include "dynagg/index.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

#include "dynagg/errors.hpp"
#include "dynagg/kdtree.hpp"
#include "dynagg/parallel.hpp"

namespace dynagg {

void IndexMatrix::validate() const {
  if (n == 0 || m == 0 || k_eff == 0)
    throw ShapeError("index matrix has empty dimensions");
  if (k_eff > m) throw ShapeError("index matrix K_eff exceeds node count");
  if (table.size() != static_cast<std::size_t>(n) * k_eff)
    throw ShapeError("index table size mismatch");
  for (std::uint32_t entry : table)
    if (entry >= m) throw ShapeError("index table entry out of range");
  if (counts.size() != m || inverse.size() != m)
    throw ShapeError("index inverse structures size mismatch");
  std::uint64_t total = 0;
  for (std::uint32_t j = 0; j < m; ++j) {
    if (inverse[j].size() != counts[j])
      throw ShapeError("inverse list length disagrees with T_j");
    total += counts[j];
  }
  if (total != static_cast<std::uint64_t>(n) * k_eff)
    throw ShapeError("sum of T_j does not equal N*K_eff");
}

namespace {

void derive_inverse(IndexMatrix& index) {
  index.counts.assign(index.m, 0);
  for (std::uint32_t entry : index.table) ++index.counts[entry];
  index.inverse.assign(index.m, {});
  for (std::uint32_t j = 0; j < index.m; ++j)
    index.inverse[j].reserve(index.counts[j]);
  // Walking points in ascending order keeps every inverse list sorted.
  for (std::uint32_t i = 0; i < index.n; ++i)
    for (std::uint32_t s = 0; s < index.k_eff; ++s)
      index.inverse[index.at(i, s)].push_back(i);
  index.g = static_cast<double>(static_cast<std::uint64_t>(index.n) *
                                index.k_eff) /
            static_cast<double>(index.m);
}

}  // namespace

IndexMatrix build_index(const PointCloud& cloud, const Skeleton& skeleton,
                        std::uint32_t k, unsigned jobs) {
  cloud.validate();
  skeleton.validate();
  if (k < 1) throw ConfigError("index.k must be >= 1");

  IndexMatrix index;
  index.n = static_cast<std::uint32_t>(cloud.size());
  index.m = static_cast<std::uint32_t>(skeleton.size());
  index.k_eff = std::min<std::uint32_t>(k, index.m);
  index.table.resize(static_cast<std::size_t>(index.n) * index.k_eff);

  const KdTree3 tree(skeleton.node_positions);
  parallel_for(index.n, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector3d q =
          cloud.positions.row(static_cast<Eigen::Index>(i)).transpose();
      const auto neighbors = tree.knn(q, index.k_eff);
      for (std::uint32_t s = 0; s < index.k_eff; ++s)
        index.table[i * index.k_eff + s] = neighbors[s].index;
    }
  });

  derive_inverse(index);
  return index;
}

std::vector<std::uint32_t> empty_nodes(const IndexMatrix& index) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t j = 0; j < index.m; ++j)
    if (index.counts[j] == 0) out.push_back(j);
  return out;
}

namespace {
constexpr char kIndexMagic[4] = {'D', 'G', 'G', 'I'};
}

void save_index_binary(const std::filesystem::path& path,
                       const IndexMatrix& index) {
  index.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(kIndexMagic, 4);
  const std::uint64_t n64 = index.n;
  out.write(reinterpret_cast<const char*>(&n64), sizeof n64);
  out.write(reinterpret_cast<const char*>(&index.m), sizeof index.m);
  out.write(reinterpret_cast<const char*>(&index.k_eff), sizeof index.k_eff);
  out.write(reinterpret_cast<const char*>(index.table.data()),
            static_cast<std::streamsize>(index.table.size() *
                                         sizeof(std::uint32_t)));
}

IndexMatrix load_index_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kIndexMagic, 4) != 0)
    throw ParseError(path.string() + ": bad magic at offset 0");
  IndexMatrix index;
  std::uint64_t n64 = 0;
  in.read(reinterpret_cast<char*>(&n64), sizeof n64);
  in.read(reinterpret_cast<char*>(&index.m), sizeof index.m);
  in.read(reinterpret_cast<char*>(&index.k_eff), sizeof index.k_eff);
  if (!in) throw ParseError(path.string() + ": truncated header");
  index.n = static_cast<std::uint32_t>(n64);
  index.table.resize(static_cast<std::size_t>(index.n) * index.k_eff);
  if (!in.read(reinterpret_cast<char*>(index.table.data()),
               static_cast<std::streamsize>(index.table.size() *
                                            sizeof(std::uint32_t))))
    throw ParseError(path.string() + ": truncated table block");
  derive_inverse(index);
  index.validate();
  return index;
}

}  // namespace dynagg
