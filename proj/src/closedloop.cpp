#include "fieldnav/closedloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "fieldnav/error.hpp"
#include "fieldnav/rng.hpp"

namespace fieldnav {

std::string to_string(PlannerKind kind) { return kind == PlannerKind::Field ? "field" : "astar"; }

PlannerKind planner_from_string(const std::string& name) {
  if (name == "field") return PlannerKind::Field;
  if (name == "astar") return PlannerKind::AStar;
  throw Error(ErrorCode::InvalidArgument, "unknown closed-loop planner '" + name + "'");
}

EndpointSampling EndpointSampling::offline() {
  EndpointSampling s;
  s.separation_min = 20.0;
  s.separation_max = 50.0;
  return s;
}

EndpointSampling EndpointSampling::closed_loop() { return EndpointSampling{}; }

double TrialReport::mean_plan_s() const {
  if (plan_runtime_s.empty()) return 0.0;
  double s = 0.0;
  for (double t : plan_runtime_s) s += t;
  return s / static_cast<double>(plan_runtime_s.size());
}

namespace {

bool clear_of_buildings(const World& world, const WorldPoint& p, double clearance) {
  return std::all_of(world.boxes.begin(), world.boxes.end(),
                     [&](const Box& b) { return chebyshev_distance(p, b) >= clearance; });
}

bool inside_bounds(const World& world, const WorldPoint& p, double margin) {
  const double lim = world.half_extent - margin;
  return std::abs(p.x) <= lim && std::abs(p.y) <= lim;
}

}  // namespace

std::pair<WorldPoint, WorldPoint> sample_endpoints(const World& world, const EndpointSampling& cfg,
                                                   std::uint64_t seed) {
  if (!(cfg.separation_max >= cfg.separation_min && cfg.separation_min >= 0.0) ||
      !(cfg.altitude_max >= cfg.altitude_min) || cfg.clearance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "endpoint sampling ranges are empty");
  }
  Rng rng(derive_seed(seed, 0x656e6470));
  const double lim = world.half_extent - cfg.edge_margin;
  const double ground = world.ground_height;
  for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
    const WorldPoint start{rng.uniform(-lim, lim), rng.uniform(-lim, lim),
                           ground + rng.uniform(cfg.altitude_min, cfg.altitude_max)};
    const double sep = rng.uniform(cfg.separation_min, cfg.separation_max);
    const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gz = ground + rng.uniform(cfg.altitude_min, cfg.altitude_max);
    const double dz = gz - start.z;
    if (std::abs(dz) > sep) continue;
    const double horiz = std::sqrt(sep * sep - dz * dz);
    const WorldPoint goal{start.x + horiz * std::cos(az), start.y + horiz * std::sin(az), gz};
    if (!inside_bounds(world, goal, cfg.edge_margin)) continue;
    if (!clear_of_buildings(world, start, cfg.clearance) || !clear_of_buildings(world, goal, cfg.clearance)) continue;
    return {start, goal};
  }
  throw Error(ErrorCode::SamplingExhausted,
              "no valid endpoint pair after " + std::to_string(cfg.max_rejections) + " rejections");
}

TrialReport run_trial(const World& world, const TrialConfig& cfg) {
  try {
    const auto [start, goal] = sample_endpoints(world, cfg.endpoints, cfg.seed);
    return run_trial(world, cfg, start, goal);
  } catch (const Error& e) {
    TrialReport r;
    r.planner = to_string(cfg.planner);
    r.seed = cfg.seed;
    r.failure = "planner_error";
    r.detail = e.what();
    return r;
  }
}

TrialReport run_trial(const World& world, const TrialConfig& cfg, const WorldPoint& start, const WorldPoint& goal) {
  using Clock = std::chrono::steady_clock;
  TrialReport report;
  report.planner = to_string(cfg.planner);
  report.seed = cfg.seed;
  report.start = start;
  report.goal = goal;

  const GridSpec spec = planning_spec(world, start, goal, cfg.grid);
  const double arrive_m = cfg.field.ascent.goal_tolerance * spec.resolution;
  std::vector<WorldPoint> points;
  std::vector<WorldPoint> flown{start};
  WorldPoint pos = start;
  FieldGrid warm;
  bool have_warm = false;

  auto finish = [&](bool ok, std::string failure, std::string detail) {
    report.success = ok;
    report.failure = std::move(failure);
    report.detail = std::move(detail);
    report.flown_path = Path::from_waypoints(flown, spec.resolution);
    return report;
  };

  for (int iter = 1; iter <= cfg.max_planning_iterations; ++iter) {
    report.planning_iterations = iter;
    IterationLog entry;
    const auto t0 = Clock::now();

    std::vector<WorldPoint> ret;
    try {
      ret = scan(world, pos, cfg.lidar);
    } catch (const Error& e) {
      return finish(false, "collision", e.what());
    }
    for (const auto& p : ret) {
      if (p.z > world.ground_height) points.push_back(p);
    }
    const OccupancyGrid raw = voxelize(points, spec);
    entry.points = points.size();
    entry.occupied_voxels = raw.occupied_count();

    // Back the dilation off when the current position sits inside the margin
    // of a freshly revealed wall.
    std::optional<OccupancyGrid> grid;
    GridIndex sv, gv;
    try {
      sv = world_to_grid(pos, spec);
      gv = world_to_grid(goal, spec);
    } catch (const Error& e) {
      return finish(false, "planner_error", e.what());
    }
    for (int r = cfg.grid.dilation; r >= 0 && !grid; --r) {
      OccupancyGrid g = planning_grid(raw, r, world.ground_height);
      if (g.occupied(sv) || g.occupied(gv)) continue;
      if (!free_connected(g, sv, gv)) continue;
      grid = std::move(g);
      entry.dilation = r;
    }
    if (!grid) return finish(false, "planner_error", "no free connected planning grid at any dilation");

    Path path;
    try {
      if (cfg.planner == PlannerKind::Field) {
        FieldPlanResult res = plan_field(*grid, pos, goal, cfg.field, have_warm ? &warm : nullptr);
        path = std::move(res.path);
        warm = std::move(res.field);
        have_warm = true;
      } else {
        path = astar(*grid, sv, gv);
        path.waypoints.front() = pos;
        if (path.waypoints.size() == 1) path.waypoints.push_back(goal);
        else path.waypoints.back() = goal;
      }
    } catch (const Error& e) {
      entry.plan_s = std::chrono::duration<double>(Clock::now() - t0).count();
      report.plan_runtime_s.push_back(entry.plan_s);
      report.log.push_back(entry);
      return finish(false, "planner_error", e.what());
    }
    entry.plan_s = std::chrono::duration<double>(Clock::now() - t0).count();
    report.plan_runtime_s.push_back(entry.plan_s);
    report.log.push_back(entry);

    // Fly along the plan for at most advance_distance, checking true geometry.
    double budget = cfg.advance_distance;
    bool reached_end = true;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
      const WorldPoint& next = path.waypoints[i];
      const double seg = distance(pos, next);
      WorldPoint target = next;
      if (seg > budget) {
        target = pos + (next - pos) * (budget / seg);
        reached_end = false;
      }
      if (segment_hits_world(world, pos, target)) {
        flown.push_back(target);
        return finish(false, "collision", "advance segment intersects world geometry");
      }
      if (distance(target, pos) > 0.0) flown.push_back(target);
      budget -= distance(pos, target);
      pos = target;
      if (!reached_end) break;
    }
    if (distance(pos, goal) <= arrive_m) return finish(true, "", "");
  }
  return finish(false, "iteration_cap", "goal not reached within the planning iteration cap");
}

}  // namespace fieldnav
