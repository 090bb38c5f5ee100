#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fieldnav/vec3.hpp"

namespace fieldnav {

/// Geometry of a regular voxel lattice. Voxel (0,0,0) is centered at `origin`;
/// voxel (i,j,k) is centered at origin + resolution * (i,j,k) and covers the
/// half-open cell [center - res/2, center + res/2) on each axis.
struct GridSpec {
  std::array<int, 3> dims{101, 101, 101};
  double resolution = 2.0;
  Vec3 origin{-100.0, -100.0, -100.0};

  /// Spec whose middle voxel is centered on `center`.
  static GridSpec centered(const Vec3& center, std::array<int, 3> dims, double resolution);

  void validate() const;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t flat(const GridIndex& g) const {
    return (static_cast<std::size_t>(g.i) * dims[1] + g.j) * dims[2] + g.k;
  }
  GridIndex unflat(std::size_t idx) const {
    const int k = static_cast<int>(idx % dims[2]);
    idx /= dims[2];
    const int j = static_cast<int>(idx % dims[1]);
    return {static_cast<int>(idx / dims[1]), j, k};
  }
  bool contains(const GridIndex& g) const {
    return g.i >= 0 && g.j >= 0 && g.k >= 0 && g.i < dims[0] && g.j < dims[1] && g.k < dims[2];
  }
  bool on_shell(const GridIndex& g) const {
    return g.i == 0 || g.j == 0 || g.k == 0 || g.i == dims[0] - 1 || g.j == dims[1] - 1 ||
           g.k == dims[2] - 1;
  }
  /// Flat-index stride of a unit step along `axis`.
  std::size_t stride(int axis) const {
    return axis == 0 ? static_cast<std::size_t>(dims[1]) * dims[2]
                     : (axis == 1 ? static_cast<std::size_t>(dims[2]) : 1);
  }

  /// Continuous grid coordinates: voxel centers sit on integers.
  Vec3 to_continuous(const WorldPoint& p) const { return (p - origin) * (1.0 / resolution); }
  WorldPoint from_continuous(const Vec3& c) const { return origin + c * resolution; }
  Vec3 center() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Nearest voxel of a continuous grid coordinate, rounding exact half-way
/// values up on each axis. No bounds check.
GridIndex nearest_voxel(const Vec3& continuous);

GridIndex world_to_grid(const WorldPoint& p, const GridSpec& spec);
WorldPoint grid_to_world(const GridIndex& g, const GridSpec& spec);

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridSpec& spec);
  OccupancyGrid(const GridSpec& spec, std::vector<std::uint8_t> cells);

  const GridSpec& spec() const { return spec_; }
  bool occupied(const GridIndex& g) const { return cells_[spec_.flat(g)] != 0; }
  bool occupied(std::size_t flat) const { return cells_[flat] != 0; }
  /// Out-of-bounds indices count as occupied.
  bool blocked(const GridIndex& g) const { return !spec_.contains(g) || occupied(g); }
  void set(const GridIndex& g, bool value) { cells_[spec_.flat(g)] = value ? 1 : 0; }
  void set(std::size_t flat, bool value) { cells_[flat] = value ? 1 : 0; }

  std::size_t occupied_count() const;
  std::span<const std::uint8_t> cells() const { return cells_; }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> cells_;
};

OccupancyGrid voxelize(std::span<const WorldPoint> points, const GridSpec& spec);

/// Morphological dilation with a (2r+1)^3 cube.
OccupancyGrid dilate(const OccupancyGrid& grid, int radius);

/// Marks every voxel whose center lies below `ground_height` as occupied.
void mark_floor(OccupancyGrid& grid, double ground_height);

struct ComponentMask {
  GridSpec spec;
  std::vector<std::uint8_t> member;
  std::size_t size = 0;

  bool contains(const GridIndex& g) const { return spec.contains(g) && member[spec.flat(g)] != 0; }
};

/// 6-connected flood fill over free voxels from `seed`.
ComponentMask free_component(const OccupancyGrid& grid, const GridIndex& seed);

/// True when free voxels a and b share a 6-connected free component. Searches
/// toward b and stops on arrival, so it visits the whole component only when
/// the answer is false.
bool free_connected(const OccupancyGrid& grid, const GridIndex& a, const GridIndex& b);

/// Calls fn(neighbor) for each in-bounds 6-neighbor of g.
template <typename Fn>
void for_each_neighbor6(const GridSpec& spec, const GridIndex& g, Fn&& fn) {
  for (int axis = 0; axis < 3; ++axis) {
    for (int dir = -1; dir <= 1; dir += 2) {
      GridIndex n = g;
      n[axis] += dir;
      if (spec.contains(n)) fn(n);
    }
  }
}

}  // namespace fieldnav
