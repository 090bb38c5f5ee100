#include "fieldnav/pipeline.hpp"

#include <chrono>

#include "fieldnav/error.hpp"

namespace fieldnav {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

GridSpec planning_spec(const World& world, const WorldPoint& start, const WorldPoint& goal, const GridConfig& cfg) {
  GridSpec spec;
  spec.dims = {cfg.dims, cfg.dims, cfg.dims};
  spec.resolution = cfg.resolution;
  const double half = cfg.resolution * (cfg.dims - 1) / 2.0;
  spec.origin = {0.5 * (start.x + goal.x) - half, 0.5 * (start.y + goal.y) - half,
                 world.ground_height - 0.5 * cfg.resolution};
  spec.validate();
  return spec;
}

OccupancyGrid planning_grid(const OccupancyGrid& raw, int dilation, double ground_height) {
  OccupancyGrid out = dilate(raw, dilation);
  mark_floor(out, ground_height);
  return out;
}

FieldPlanResult plan_on_field(const FieldGrid& field, const OccupancyGrid& occ, const WorldPoint& start,
                              const WorldPoint& goal, const FieldPlanConfig& cfg) {
  FieldPlanResult res;
  auto t0 = Clock::now();
  const GradientField raw = compute_gradient(field, occ, cfg.guidance.log_transform);
  const GradientField grad = gaussian_smooth(raw, cfg.guidance);
  res.guide_s = seconds_since(t0);
  t0 = Clock::now();
  try {
    res.path = follow_field(grad, occ, start, goal, cfg.ascent, &res.ascent,
                            cfg.guidance.smoothing_sigma > 0.0 ? &raw : nullptr);
  } catch (const Error& e) {
    const bool stuck = e.code() == ErrorCode::Stalled || e.code() == ErrorCode::MaxStepsExceeded;
    if (!stuck || !cfg.ascent.stall_fallback) throw;
    res.path = climb_field(field, occ, start, goal);
    res.ascent.climbed = true;
  }
  res.follow_s = seconds_since(t0);
  res.field = field;
  return res;
}

FieldPlanResult plan_field(const OccupancyGrid& occ, const WorldPoint& start, const WorldPoint& goal,
                           const FieldPlanConfig& cfg, const FieldGrid* warm_start) {
  const auto t0 = Clock::now();
  GoalSpec gs = cfg.conductivity;
  gs.goal_index = world_to_grid(goal, occ.spec());
  const ConductivityGrid sigma = build_conductivity(occ, gs);
  const StencilSystem sys = assemble(sigma, gs);
  const FieldGrid* guess = (warm_start && warm_start->spec == occ.spec()) ? warm_start : nullptr;
  FieldGrid field = solve(sys, cfg.solve, guess);
  require_converged(field);
  const double solve_s = seconds_since(t0);
  FieldPlanResult res = plan_on_field(field, occ, start, goal, cfg);
  res.solve_s = solve_s;
  return res;
}

}  // namespace fieldnav
