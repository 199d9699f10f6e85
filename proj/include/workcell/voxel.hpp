#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "workcell/geometry.hpp"

namespace workcell {

enum class VoxelLabel : std::uint8_t { Empty = 0, Obstacle = 1, Robot = 2, Tool = 3 };

/// Axis-aligned voxel grid over [min_corner, max_corner). A point maps to the
/// voxel floor((p - min_corner) / voxel_size) per axis; points outside the
/// region are discarded.
struct GridSpec {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Ones();
  double voxel_size = 0.05;

  void validate() const {
    if (!(voxel_size > 0.0))
      throw std::invalid_argument("GridSpec: voxel_size must be > 0");
    for (int i = 0; i < 3; ++i)
      if (!(max_corner[i] > min_corner[i]))
        throw std::invalid_argument("GridSpec: max_corner must exceed min_corner");
  }

  std::array<int, 3> dims() const {
    std::array<int, 3> n{};
    for (int i = 0; i < 3; ++i)
      n[i] = static_cast<int>(
          std::floor((max_corner[i] - min_corner[i]) / voxel_size + 1e-9));
    return n;
  }

  std::int64_t voxel_count() const {
    const auto n = dims();
    return static_cast<std::int64_t>(n[0]) * n[1] * n[2];
  }

  std::uint32_t linear(int ix, int iy, int iz) const {
    const auto n = dims();
    return static_cast<std::uint32_t>(
        ix + static_cast<std::int64_t>(n[0]) * (iy + static_cast<std::int64_t>(n[1]) * iz));
  }

  std::array<int, 3> coords(std::uint32_t index) const {
    const auto n = dims();
    const int ix = static_cast<int>(index % n[0]);
    const int iy = static_cast<int>((index / n[0]) % n[1]);
    const int iz = static_cast<int>(index / (static_cast<std::int64_t>(n[0]) * n[1]));
    return {ix, iy, iz};
  }

  std::optional<std::uint32_t> index_of(const Vec3& p) const {
    const auto n = dims();
    std::array<int, 3> c{};
    for (int i = 0; i < 3; ++i) {
      const double f = std::floor((p[i] - min_corner[i]) / voxel_size);
      if (f < 0.0 || f >= static_cast<double>(n[i])) return std::nullopt;
      c[i] = static_cast<int>(f);
    }
    return linear(c[0], c[1], c[2]);
  }

  Vec3 center(std::uint32_t index) const {
    const auto c = coords(index);
    return min_corner + Vec3((c[0] + 0.5) * voxel_size, (c[1] + 0.5) * voxel_size,
                             (c[2] + 0.5) * voxel_size);
  }
};

/// Dense per-voxel class labels over a grid.
struct LabeledVoxelGrid {
  GridSpec spec;
  std::vector<std::uint8_t> labels;

  LabeledVoxelGrid() = default;
  explicit LabeledVoxelGrid(const GridSpec& s)
      : spec(s), labels(static_cast<std::size_t>(s.voxel_count()), 0) {}

  VoxelLabel label(std::uint32_t index) const {
    return static_cast<VoxelLabel>(labels[index]);
  }
};

/// Sorted, de-duplicated voxel indices of the given points.
inline std::vector<std::uint32_t> voxelize(std::span<const Vec3> points,
                                           const GridSpec& spec) {
  spec.validate();
  std::vector<std::uint32_t> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (auto idx = spec.index_of(p)) out.push_back(*idx);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Classifies occupied voxels by their centers: tool wins over robot, robot
/// over obstacle; everything else stays empty.
inline LabeledVoxelGrid segment(std::span<const std::uint32_t> occupied,
                                const GridSpec& spec,
                                std::span<const Cuboid> robot_cuboids,
                                const std::optional<Cuboid>& tool_cuboid) {
  LabeledVoxelGrid grid(spec);
  for (const std::uint32_t idx : occupied) {
    const Vec3 c = spec.center(idx);
    VoxelLabel label = VoxelLabel::Obstacle;
    if (tool_cuboid && tool_cuboid->contains(c)) {
      label = VoxelLabel::Tool;
    } else {
      for (const auto& link : robot_cuboids) {
        if (link.contains(c)) {
          label = VoxelLabel::Robot;
          break;
        }
      }
    }
    grid.labels[idx] = static_cast<std::uint8_t>(label);
  }
  return grid;
}

}  // namespace workcell
