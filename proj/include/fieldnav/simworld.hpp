#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fieldnav/grid.hpp"

namespace fieldnav {

/// Axis-aligned building.
struct Box {
  Vec3 center;
  Vec3 size;  ///< full edge lengths in meters

  Vec3 lo() const { return center - size * 0.5; }
  Vec3 hi() const { return center + size * 0.5; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct WorldGenParams {
  std::string preset = "custom";
  int min_buildings = 0;
  int max_buildings = 0;
  double footprint_min = 10.0;  ///< m
  double footprint_max = 30.0;
  double height_min = 10.0;
  double height_max = 40.0;
  double street_width = 22.0;   ///< minimum axis gap between any two buildings
  double half_extent = 100.0;   ///< world bounds are +-half_extent on x and y
  double ground_height = 0.0;
  std::uint64_t seed = 0;

  /// High-rise blocks on a tight street grid.
  static WorldGenParams dense(std::uint64_t seed);
  /// Low-rise buildings with open space between them.
  static WorldGenParams sparse(std::uint64_t seed);
  /// "dense" or "sparse".
  static WorldGenParams from_preset(const std::string& name, std::uint64_t seed);

  void validate() const;
  friend bool operator==(const WorldGenParams&, const WorldGenParams&) = default;
};

struct World {
  std::uint64_t seed = 0;
  WorldGenParams params;
  double ground_height = 0.0;
  double half_extent = 100.0;
  std::vector<Box> boxes;

  friend bool operator==(const World&, const World&) = default;
};

World generate_world(const WorldGenParams& params);

/// Axis gap between two box footprints: the larger of the x and y separations.
double footprint_gap(const Box& a, const Box& b);

struct LidarSpec {
  int azimuth_steps = 128;
  int elevation_steps = 256;
  double min_elevation_deg = -80.0;
  double max_elevation_deg = 80.0;
  double max_range = 100.0;  ///< m
  double range_noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  int ray_count() const { return azimuth_steps * elevation_steps; }
  /// Unit direction of ray (a, e); both grids are half-open so azimuth 0 and
  /// elevation 0 are always present.
  Vec3 direction(int a, int e) const;
  void validate() const;
};

/// One return per ray: the nearest box face or ground hit within max_range.
std::vector<WorldPoint> scan(const World& world, const WorldPoint& sensor, const LidarSpec& spec);

/// Ray parameter of the first hit of origin + t*dir with the box, t in [0, inf).
std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Box& box);

bool inside_any_box(const World& world, const WorldPoint& p);
/// True if the closed segment touches any building or dips below the ground plane.
bool segment_hits_world(const World& world, const WorldPoint& a, const WorldPoint& b);

double chebyshev_distance(const WorldPoint& p, const Box& box);
double euclidean_distance(const WorldPoint& p, const Box& box);

/// Solid rasterization of the buildings: every voxel whose cell contains part
/// of a box is occupied. The ground is not rasterized (see mark_floor).
OccupancyGrid rasterize_world(const World& world, const GridSpec& spec);

struct RayHit {
  GridIndex voxel;
  double t = 0.0;  ///< segment parameter in [0, 1] at which the voxel is entered
  int axis = -1;   ///< axis of the face crossed to enter it; -1 for the start voxel
};

/// Walks every voxel crossed by the segment a->b (continuous grid coordinates)
/// in order. fn(voxel, t_enter, axis) returns false to stop early.
void visit_voxels(const GridSpec& spec, const Vec3& a, const Vec3& b,
                  const std::function<bool(const GridIndex&, double, int)>& fn);

/// First occupied voxel along a->b in continuous grid coordinates.
std::optional<RayHit> traverse_continuous(const OccupancyGrid& grid, const Vec3& a, const Vec3& b);

/// First occupied voxel along the world segment a->b.
std::optional<RayHit> traverse_ray(const OccupancyGrid& grid, const WorldPoint& a, const WorldPoint& b);

}  // namespace fieldnav
