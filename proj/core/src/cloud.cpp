#include "dynagg/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "dynagg/errors.hpp"
#include "dynagg/kdtree.hpp"
#include "dynagg/parallel.hpp"

namespace dynagg {

void PointCloud::validate() const {
  if (positions.rows() < 1) throw ShapeError("point cloud is empty");
  if (!positions.allFinite())
    throw ShapeError("point cloud has non-finite coordinates");
  if (features.cols() > 0) {
    if (features.rows() != positions.rows())
      throw ShapeError("feature rows do not match point count");
    if (!features.allFinite())
      throw ShapeError("point cloud has non-finite feature values");
  }
  if (!labels.empty() &&
      labels.size() != static_cast<std::size_t>(positions.rows()))
    throw ShapeError("label count does not match point count");
}

Eigen::Vector3d UnitCubeTransform::to_unit(const Eigen::Vector3d& world) const {
  Eigen::Vector3d out;
  for (int a = 0; a < 3; ++a)
    out[a] = scale[a] > 0.0 ? (world[a] - offset[a]) / scale[a] : 0.5;
  return out;
}

Eigen::Vector3d UnitCubeTransform::to_world(const Eigen::Vector3d& unit) const {
  return offset + unit.cwiseProduct(scale);
}

Eigen::MatrixX3d UnitCubeTransform::to_world(const Eigen::MatrixX3d& unit) const {
  Eigen::MatrixX3d out(unit.rows(), 3);
  for (Eigen::Index i = 0; i < unit.rows(); ++i)
    out.row(i) = to_world(Eigen::Vector3d(unit.row(i))).transpose();
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double_field(const std::string& text, std::size_t line_no,
                          const char* what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError("line " + std::to_string(line_no) + ": malformed " +
                     what + " value '" + text + "'");
  if (!std::isfinite(value))
    throw ParseError("line " + std::to_string(line_no) + ": non-finite " +
                     what + " value '" + text + "'");
  return value;
}

std::uint32_t parse_label_field(const std::string& text, std::size_t line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const unsigned long value = std::strtoul(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw ParseError("line " + std::to_string(line_no) +
                     ": malformed label '" + text + "'");
  return static_cast<std::uint32_t>(value);
}

PointCloud load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" ||
      header[2] != "z")
    throw ParseError(path.string() + ": header must start with x,y,z");
  std::size_t n_channels = 0;
  bool has_labels = false;
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i] == "label") {
      if (i + 1 != header.size())
        throw ParseError(path.string() + ": label must be the last column");
      has_labels = true;
    } else if (header[i] == "f" + std::to_string(n_channels)) {
      ++n_channels;
    } else {
      throw ParseError(path.string() + ": unexpected header column '" +
                       header[i] + "'");
    }
  }
  const std::size_t expected = 3 + n_channels + (has_labels ? 1 : 0);

  std::vector<double> coords;
  std::vector<double> feats;
  std::vector<std::uint32_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected) + " fields, got " +
                       std::to_string(fields.size()));
    for (int a = 0; a < 3; ++a)
      coords.push_back(parse_double_field(fields[a], line_no, "coordinate"));
    for (std::size_t c = 0; c < n_channels; ++c)
      feats.push_back(parse_double_field(fields[3 + c], line_no, "feature"));
    if (has_labels) labels.push_back(parse_label_field(fields.back(), line_no));
  }
  const std::size_t n = coords.size() / 3;
  if (n == 0) throw ParseError(path.string() + ": no data rows");

  PointCloud cloud;
  cloud.positions.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a)
      cloud.positions(static_cast<Eigen::Index>(i), a) = coords[i * 3 + a];
  cloud.features.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(n_channels));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < n_channels; ++c)
      cloud.features(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(c)) = feats[i * n_channels + c];
  cloud.labels = std::move(labels);
  cloud.validate();
  return cloud;
}

void save_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "x,y,z";
  for (Eigen::Index c = 0; c < cloud.channels(); ++c) out << ",f" << c;
  if (cloud.has_labels()) out << ",label";
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", cloud.positions(i, a));
      out << (a ? "," : "") << buf;
    }
    for (Eigen::Index c = 0; c < cloud.channels(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", cloud.features(i, c));
      out << ',' << buf;
    }
    if (cloud.has_labels()) out << ',' << cloud.labels[i];
    out << "\n";
  }
}

constexpr char kCloudMagic[4] = {'D', 'G', 'G', '1'};

PointCloud load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCloudMagic, 4) != 0)
    throw ParseError(path.string() + ": bad magic at offset 0");
  std::uint64_t n = 0;
  std::uint32_t c = 0;
  std::uint8_t has_labels = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&c), sizeof c);
  in.read(reinterpret_cast<char*>(&has_labels), sizeof has_labels);
  if (!in) throw ParseError(path.string() + ": truncated header");
  if (n == 0) throw ParseError(path.string() + ": zero points");

  PointCloud cloud;
  cloud.positions.resize(static_cast<Eigen::Index>(n), 3);
  cloud.features.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(c));
  std::vector<double> row(3 + c);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(double))))
      throw ParseError(path.string() + ": truncated at row " +
                       std::to_string(i));
    for (int a = 0; a < 3; ++a)
      cloud.positions(static_cast<Eigen::Index>(i), a) = row[a];
    for (std::uint32_t ch = 0; ch < c; ++ch)
      cloud.features(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(ch)) = row[3 + ch];
  }
  if (has_labels) {
    cloud.labels.resize(n);
    if (!in.read(reinterpret_cast<char*>(cloud.labels.data()),
                 static_cast<std::streamsize>(n * sizeof(std::uint32_t))))
      throw ParseError(path.string() + ": truncated label block");
  }
  cloud.validate();
  return cloud;
}

void save_binary(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(kCloudMagic, 4);
  const std::uint64_t n = static_cast<std::uint64_t>(cloud.size());
  const std::uint32_t c = static_cast<std::uint32_t>(cloud.channels());
  const std::uint8_t has_labels = cloud.has_labels() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&c), sizeof c);
  out.write(reinterpret_cast<const char*>(&has_labels), sizeof has_labels);
  std::vector<double> row(3 + c);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) row[a] = cloud.positions(i, a);
    for (Eigen::Index ch = 0; ch < cloud.channels(); ++ch)
      row[3 + static_cast<std::size_t>(ch)] = cloud.features(i, ch);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (has_labels)
    out.write(reinterpret_cast<const char*>(cloud.labels.data()),
              static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  return format == CloudFormat::csv ? load_csv(path) : load_binary(path);
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                CloudFormat format) {
  cloud.validate();
  if (format == CloudFormat::csv)
    save_csv(path, cloud);
  else
    save_binary(path, cloud);
}

std::pair<PointCloud, UnitCubeTransform> normalize_unit_cube(
    const PointCloud& cloud) {
  cloud.validate();
  UnitCubeTransform t;
  t.offset = cloud.positions.colwise().minCoeff().transpose();
  t.scale = (cloud.positions.colwise().maxCoeff().transpose() - t.offset);

  PointCloud out = cloud;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    for (int a = 0; a < 3; ++a)
      out.positions(i, a) = t.scale[a] > 0.0
                                ? (cloud.positions(i, a) - t.offset[a]) /
                                      t.scale[a]
                                : 0.5;
  return {std::move(out), t};
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.x),
                            static_cast<std::uint64_t>(k.y),
                            static_cast<std::uint64_t>(k.z)}) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud grid_downsample(const PointCloud& cloud, double cell_cm) {
  cloud.validate();
  if (!(cell_cm > 0.0)) throw ConfigError("cell size must be positive");
  const double cell_m = cell_cm / 100.0;

  struct Acc {
    Eigen::Vector3d pos_sum = Eigen::Vector3d::Zero();
    Eigen::VectorXd feat_sum;
    std::map<std::uint32_t, std::uint32_t> label_votes;
    std::size_t count = 0;
  };

  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot_of;
  std::vector<Acc> voxels;
  slot_of.reserve(static_cast<std::size_t>(cloud.size()));

  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    VoxelKey key{
        static_cast<std::int64_t>(std::floor(cloud.positions(i, 0) / cell_m)),
        static_cast<std::int64_t>(std::floor(cloud.positions(i, 1) / cell_m)),
        static_cast<std::int64_t>(std::floor(cloud.positions(i, 2) / cell_m))};
    auto [it, inserted] = slot_of.try_emplace(key, voxels.size());
    if (inserted) {
      voxels.emplace_back();
      voxels.back().feat_sum = Eigen::VectorXd::Zero(cloud.channels());
    }
    Acc& acc = voxels[it->second];
    acc.pos_sum += cloud.positions.row(i).transpose();
    if (cloud.has_features()) acc.feat_sum += cloud.features.row(i).transpose();
    if (cloud.has_labels()) ++acc.label_votes[cloud.labels[i]];
    ++acc.count;
  }

  PointCloud out;
  const Eigen::Index m = static_cast<Eigen::Index>(voxels.size());
  out.positions.resize(m, 3);
  out.features.resize(m, cloud.channels());
  if (cloud.has_labels()) out.labels.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const Acc& acc = voxels[static_cast<std::size_t>(j)];
    const double inv = 1.0 / static_cast<double>(acc.count);
    out.positions.row(j) = (acc.pos_sum * inv).transpose();
    if (cloud.has_features())
      out.features.row(j) = (acc.feat_sum * inv).transpose();
    if (cloud.has_labels()) {
      std::uint32_t best_label = 0;
      std::uint32_t best_votes = 0;
      for (const auto& [label, votes] : acc.label_votes) {
        if (votes > best_votes) {  // map iterates ids ascending, ties keep
          best_votes = votes;      // the smallest id
          best_label = label;
        }
      }
      out.labels[static_cast<std::size_t>(j)] = best_label;
    }
  }
  out.resolution_tag = cell_cm;
  return out;
}

std::vector<std::uint32_t> nearest_neighbor_extrapolate(
    const PointCloud& coarse, const PointCloud& fine, unsigned jobs) {
  if (coarse.size() == 0) throw ShapeError("coarse cloud is empty");
  coarse.validate();
  fine.validate();
  if (!coarse.has_labels()) throw ShapeError("coarse cloud has no labels");

  KdTree3 tree(coarse.positions);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(fine.size()));
  parallel_for(out.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector3d q =
          fine.positions.row(static_cast<Eigen::Index>(i)).transpose();
      out[i] = coarse.labels[tree.nearest(q)];
    }
  });
  return out;
}

}  // namespace dynagg
