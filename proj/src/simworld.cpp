#include "fieldnav/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fieldnav/error.hpp"
#include "fieldnav/rng.hpp"

namespace fieldnav {

WorldGenParams WorldGenParams::dense(std::uint64_t seed) {
  WorldGenParams p;
  p.preset = "dense";
  p.min_buildings = 10;
  p.max_buildings = 16;
  p.footprint_min = 12.0;
  p.footprint_max = 26.0;
  p.height_min = 20.0;
  p.height_max = 60.0;
  p.street_width = 22.0;
  p.seed = seed;
  return p;
}

WorldGenParams WorldGenParams::sparse(std::uint64_t seed) {
  WorldGenParams p;
  p.preset = "sparse";
  p.min_buildings = 6;
  p.max_buildings = 12;
  p.footprint_min = 8.0;
  p.footprint_max = 20.0;
  p.height_min = 5.0;
  p.height_max = 15.0;
  p.street_width = 30.0;
  p.seed = seed;
  return p;
}

WorldGenParams WorldGenParams::from_preset(const std::string& name, std::uint64_t seed) {
  if (name == "dense") return dense(seed);
  if (name == "sparse") return sparse(seed);
  throw Error(ErrorCode::InvalidArgument, "unknown world preset '" + name + "'");
}

void WorldGenParams::validate() const {
  if (min_buildings < 0 || max_buildings < min_buildings) {
    throw Error(ErrorCode::InvalidArgument, "building count range is empty");
  }
  if (!(footprint_min > 0.0 && footprint_max >= footprint_min)) {
    throw Error(ErrorCode::InvalidArgument, "footprint range is empty");
  }
  if (!(height_min > 0.0 && height_max >= height_min)) {
    throw Error(ErrorCode::InvalidArgument, "height range is empty");
  }
  if (street_width < 0.0 || !(half_extent > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "street width and world extent must be positive");
  }
  if (footprint_max > 2.0 * half_extent) {
    throw Error(ErrorCode::ParamsInfeasible, "footprint larger than the world");
  }
}

double footprint_gap(const Box& a, const Box& b) {
  const Vec3 alo = a.lo(), ahi = a.hi(), blo = b.lo(), bhi = b.hi();
  const double gx = std::max(blo.x - ahi.x, alo.x - bhi.x);
  const double gy = std::max(blo.y - ahi.y, alo.y - bhi.y);
  return std::max(gx, gy);
}

World generate_world(const WorldGenParams& params) {
  params.validate();
  Rng rng(params.seed);
  World world;
  world.seed = params.seed;
  world.params = params;
  world.ground_height = params.ground_height;
  world.half_extent = params.half_extent;

  const int count = static_cast<int>(rng.uniform_int(params.min_buildings, params.max_buildings));
  constexpr int kAttemptsPerBuilding = 2000;
  constexpr int kLayoutRestarts = 20;
  int best = 0;
  for (int restart = 0; restart < kLayoutRestarts; ++restart) {
    world.boxes.clear();
    for (int b = 0; b < count; ++b) {
      bool placed = false;
      for (int attempt = 0; attempt < kAttemptsPerBuilding && !placed; ++attempt) {
        Box box;
        box.size = {rng.uniform(params.footprint_min, params.footprint_max),
                    rng.uniform(params.footprint_min, params.footprint_max),
                    rng.uniform(params.height_min, params.height_max)};
        const double hx = params.half_extent - box.size.x / 2.0;
        const double hy = params.half_extent - box.size.y / 2.0;
        box.center = {rng.uniform(-hx, hx), rng.uniform(-hy, hy), params.ground_height + box.size.z / 2.0};
        placed = std::all_of(world.boxes.begin(), world.boxes.end(), [&](const Box& other) {
          return footprint_gap(box, other) >= params.street_width;
        });
        if (placed) world.boxes.push_back(box);
      }
      if (!placed) break;
    }
    if (static_cast<int>(world.boxes.size()) == count) return world;
    best = std::max(best, static_cast<int>(world.boxes.size()));
  }
  throw Error(ErrorCode::ParamsInfeasible, "could only place " + std::to_string(best) + " of " +
                                               std::to_string(count) + " buildings with street width " +
                                               std::to_string(params.street_width));
  return world;
}

Vec3 LidarSpec::direction(int a, int e) const {
  const double az = 2.0 * std::numbers::pi * a / azimuth_steps;
  const double el_deg = min_elevation_deg + (max_elevation_deg - min_elevation_deg) * e / elevation_steps;
  const double el = el_deg * std::numbers::pi / 180.0;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

void LidarSpec::validate() const {
  if (azimuth_steps <= 0 || elevation_steps <= 0) throw Error(ErrorCode::InvalidArgument, "ray_count must be > 0");
  if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_range must be > 0");
}

std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Box& box) {
  const Vec3 lo = box.lo(), hi = box.hi();
  double tnear = 0.0;
  double tfar = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t1 = (lo[a] - o[a]) / d[a];
    double t2 = (hi[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tnear = std::max(tnear, t1);
    tfar = std::min(tfar, t2);
    if (tnear > tfar) return std::nullopt;
  }
  return tnear;
}

bool inside_any_box(const World& world, const WorldPoint& p) {
  return std::any_of(world.boxes.begin(), world.boxes.end(), [&](const Box& b) {
    const Vec3 lo = b.lo(), hi = b.hi();
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  });
}

std::vector<WorldPoint> scan(const World& world, const WorldPoint& sensor, const LidarSpec& spec) {
  spec.validate();
  if (inside_any_box(world, sensor) || sensor.z <= world.ground_height) {
    throw Error(ErrorCode::SensorInsideObstacle, "sensor position is inside an obstacle");
  }
  Rng noise(spec.noise_seed);
  std::vector<WorldPoint> points;
  points.reserve(spec.ray_count());
  for (int a = 0; a < spec.azimuth_steps; ++a) {
    for (int e = 0; e < spec.elevation_steps; ++e) {
      const Vec3 d = spec.direction(a, e);
      double best = std::numeric_limits<double>::infinity();
      bool ground = false;
      for (const auto& box : world.boxes) {
        if (auto t = ray_box(sensor, d, box); t && *t < best) best = *t;
      }
      if (d.z < 0.0) {
        const double tg = (world.ground_height - sensor.z) / d.z;
        if (tg < best) {
          best = tg;
          ground = true;
        }
      }
      if (!(best <= spec.max_range)) continue;
      if (spec.range_noise_sigma > 0.0) {
        best = std::max(0.0, best + spec.range_noise_sigma * noise.normal());
        ground = false;
      }
      WorldPoint p = sensor + d * best;
      if (ground) p.z = world.ground_height;
      points.push_back(p);
    }
  }
  return points;
}

bool segment_hits_world(const World& world, const WorldPoint& a, const WorldPoint& b) {
  if (std::min(a.z, b.z) < world.ground_height) return true;
  const Vec3 d = b - a;
  for (const auto& box : world.boxes) {
    if (auto t = ray_box(a, d, box); t && *t <= 1.0) return true;
  }
  return false;
}

double chebyshev_distance(const WorldPoint& p, const Box& box) {
  const Vec3 lo = box.lo(), hi = box.hi();
  double m = 0.0;
  for (int a = 0; a < 3; ++a) m = std::max(m, std::max({0.0, lo[a] - p[a], p[a] - hi[a]}));
  return m;
}

double euclidean_distance(const WorldPoint& p, const Box& box) {
  const Vec3 lo = box.lo(), hi = box.hi();
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double g = std::max({0.0, lo[a] - p[a], p[a] - hi[a]});
    s += g * g;
  }
  return std::sqrt(s);
}

OccupancyGrid rasterize_world(const World& world, const GridSpec& spec) {
  OccupancyGrid grid(spec);
  for (const auto& box : world.boxes) {
    const GridIndex lo = nearest_voxel(spec.to_continuous(box.lo()));
    const GridIndex hi = nearest_voxel(spec.to_continuous(box.hi()));
    GridIndex a, b;
    for (int ax = 0; ax < 3; ++ax) {
      a[ax] = std::max(lo[ax], 0);
      b[ax] = std::min(hi[ax], spec.dims[ax] - 1);
    }
    for (int i = a.i; i <= b.i; ++i)
      for (int j = a.j; j <= b.j; ++j)
        for (int k = a.k; k <= b.k; ++k) grid.set(GridIndex{i, j, k}, true);
  }
  return grid;
}

namespace {

// Amanatides-Woo walk in cell coordinates u = c + 0.5, where cell = floor(u).
template <typename Fn>
void walk_cells(const GridSpec& spec, const Vec3& a, const Vec3& b, Fn&& fn) {
  const Vec3 ua = a + Vec3{0.5, 0.5, 0.5};
  const Vec3 ub = b + Vec3{0.5, 0.5, 0.5};
  const Vec3 d = ub - ua;
  GridIndex cell{static_cast<int>(std::floor(ua.x)), static_cast<int>(std::floor(ua.y)),
                 static_cast<int>(std::floor(ua.z))};
  const GridIndex last{static_cast<int>(std::floor(ub.x)), static_cast<int>(std::floor(ub.y)),
                       static_cast<int>(std::floor(ub.z))};
  int step[3];
  double t_max[3], t_delta[3];
  for (int ax = 0; ax < 3; ++ax) {
    if (d[ax] > 0.0) {
      step[ax] = 1;
      t_max[ax] = (cell[ax] + 1 - ua[ax]) / d[ax];
      t_delta[ax] = 1.0 / d[ax];
    } else if (d[ax] < 0.0) {
      step[ax] = -1;
      t_max[ax] = (cell[ax] - ua[ax]) / d[ax];
      t_delta[ax] = -1.0 / d[ax];
    } else {
      step[ax] = 0;
      t_max[ax] = std::numeric_limits<double>::infinity();
      t_delta[ax] = std::numeric_limits<double>::infinity();
    }
  }
  double t = 0.0;
  int axis = -1;
  // Bounded by the Manhattan cell distance, which guards against float drift.
  const int max_steps = std::abs(last.i - cell.i) + std::abs(last.j - cell.j) + std::abs(last.k - cell.k);
  for (int s = 0;; ++s) {
    if (spec.contains(cell) && !fn(cell, t, axis)) return;
    if (s >= max_steps) return;
    int ax = 0;
    if (t_max[1] < t_max[ax]) ax = 1;
    if (t_max[2] < t_max[ax]) ax = 2;
    if (t_max[ax] > 1.0) return;
    t = t_max[ax];
    cell[ax] += step[ax];
    t_max[ax] += t_delta[ax];
    axis = ax;
  }
}

}  // namespace

void visit_voxels(const GridSpec& spec, const Vec3& a, const Vec3& b,
                  const std::function<bool(const GridIndex&, double, int)>& fn) {
  walk_cells(spec, a, b, fn);
}

std::optional<RayHit> traverse_continuous(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  std::optional<RayHit> hit;
  walk_cells(grid.spec(), a, b, [&](const GridIndex& g, double t, int axis) {
    if (grid.occupied(g)) {
      hit = RayHit{g, t, axis};
      return false;
    }
    return true;
  });
  return hit;
}

std::optional<RayHit> traverse_ray(const OccupancyGrid& grid, const WorldPoint& a, const WorldPoint& b) {
  const GridSpec& spec = grid.spec();
  return traverse_continuous(grid, spec.to_continuous(a), spec.to_continuous(b));
}

}  // namespace fieldnav
