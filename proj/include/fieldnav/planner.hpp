#pragma once

#include <span>
#include <vector>

#include "fieldnav/grid.hpp"
#include "fieldnav/guidance.hpp"

namespace fieldnav {

enum class AscentMode { Momentum, Adam };

struct AscentConfig {
  double beta1 = 0.9;
  double learning_rate = 0.1;  ///< voxels per step
  AscentMode mode = AscentMode::Momentum;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_steps = 5000;
  double goal_tolerance = 1.5;  ///< voxels
  /// Within this many voxels of the goal, finish straight once the segment is free (0 disables).
  double capture_radius = 7.5;
  int stall_window = 50;
  double stall_displacement = 0.5;  ///< voxels
  /// On a stall, restart once from start on the fallback field when one is supplied.
  bool stall_fallback = true;

  void validate() const;
};

struct Path {
  std::vector<WorldPoint> waypoints;
  double resolution = 1.0;
  double length_voxels = 0.0;
  double length_meters = 0.0;

  static Path from_waypoints(std::vector<WorldPoint> waypoints, double resolution);
  /// Every k-th waypoint plus both endpoints, for reporting.
  std::vector<WorldPoint> decimated(int k = 10) const;
};

struct PathLength {
  double voxels = 0.0;
  double meters = 0.0;
};

PathLength path_length(const Path& path);
PathLength path_length(std::span<const WorldPoint> waypoints, double resolution);

struct AscentStats {
  int steps = 0;
  int truncations = 0;
  int fallback_step = -1;  ///< step at which the fallback field took over, -1 if never
  Vec3 last_position;      ///< continuous grid coordinates where ascent ended
  bool climbed = false;    ///< path came from climb_field
};

/// Follows the guidance field uphill from start to goal.
///
/// Each step samples the field as a direction: the eight surrounding voxel
/// vectors are unit-normalized, trilinearly blended and renormalized. Momentum
/// mode keeps an exponential average of those unit directions; adam mode runs
/// the per-component adaptive update instead. Steps that would enter an
/// occupied voxel stop at the face and slide along it. On a stall with a
/// fallback field supplied, the ascent restarts from start on that field and
/// the stalled trace is discarded.
Path follow_field(const GradientField& grad, const OccupancyGrid& occ_dilated, const WorldPoint& start,
                  const WorldPoint& goal, const AscentConfig& cfg, AscentStats* stats = nullptr,
                  const GradientField* fallback = nullptr);

/// Best-first ascent on phi through voxel centers: the frontier voxel with the
/// highest phi is expanded next, over 26-neighbors whose bounding box is free.
/// Where the maximum principle is strict the expansion climbs phi directly;
/// plateaus such as dead-end voxels are crossed by the search.
Path climb_field(const FieldGrid& field, const OccupancyGrid& occ_dilated, const WorldPoint& start,
                 const WorldPoint& goal);

/// Unit direction at a continuous grid position (zero if no support).
Vec3 sample_direction(const GradientField& grad, const Vec3& p);

}  // namespace fieldnav
