#include "fieldnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>

#include "fieldnav/error.hpp"
#include "fieldnav/simworld.hpp"

namespace fieldnav {

void AscentConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorCode::InvalidArgument, "beta1 must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (!(goal_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "goal_tolerance must be > 0");
  if (!(capture_radius >= 0.0)) throw Error(ErrorCode::InvalidArgument, "capture_radius must be >= 0");
  if (max_steps <= 0 || stall_window <= 0) throw Error(ErrorCode::InvalidArgument, "step budgets must be > 0");
}

PathLength path_length(std::span<const WorldPoint> waypoints, double resolution) {
  PathLength len;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len.meters += distance(waypoints[i - 1], waypoints[i]);
  len.voxels = len.meters / resolution;
  return len;
}

PathLength path_length(const Path& path) { return path_length(path.waypoints, path.resolution); }

Path Path::from_waypoints(std::vector<WorldPoint> waypoints, double resolution) {
  Path p;
  p.waypoints = std::move(waypoints);
  p.resolution = resolution;
  const PathLength len = path_length(p);
  p.length_voxels = len.voxels;
  p.length_meters = len.meters;
  return p;
}

std::vector<WorldPoint> Path::decimated(int k) const {
  std::vector<WorldPoint> out;
  if (waypoints.empty()) return out;
  k = std::max(1, k);
  for (std::size_t i = 0; i < waypoints.size(); i += static_cast<std::size_t>(k)) out.push_back(waypoints[i]);
  if ((waypoints.size() - 1) % static_cast<std::size_t>(k) != 0) out.push_back(waypoints.back());
  return out;
}

Vec3 sample_direction(const GradientField& grad, const Vec3& p) {
  const GridSpec& spec = grad.spec;
  int base[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] >= 0.0 && p[a] <= spec.dims[a] - 1)) {
      throw Error(ErrorCode::OutOfBounds, "sample position outside grid");
    }
    base[a] = std::min(static_cast<int>(std::floor(p[a])), spec.dims[a] - 2);
    t[a] = p[a] - base[a];
  }
  Vec3 acc;
  for (int c = 0; c < 8; ++c) {
    const int di = (c >> 2) & 1, dj = (c >> 1) & 1, dk = c & 1;
    const double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
    if (w == 0.0) continue;
    const Vec3& g = grad.at(GridIndex{base[0] + di, base[1] + dj, base[2] + dk});
    const double n = norm(g);
    if (n > 0.0) acc += g * (w / n);
  }
  const double n = norm(acc);
  return n > 0.0 ? acc * (1.0 / n) : Vec3{};
}

namespace {

Vec3 clamp_to_grid(const GridSpec& spec, Vec3 p) {
  for (int a = 0; a < 3; ++a) p[a] = std::clamp(p[a], 0.0, static_cast<double>(spec.dims[a] - 1));
  return p;
}

GridIndex checked_voxel(const GridSpec& spec, const Vec3& c, const char* what) {
  const GridIndex g = nearest_voxel(c);
  if (!spec.contains(g)) throw Error(ErrorCode::OutOfBounds, std::string(what) + " lies outside the grid");
  return g;
}

}  // namespace

Path follow_field(const GradientField& grad, const OccupancyGrid& occ, const WorldPoint& start,
                  const WorldPoint& goal, const AscentConfig& cfg, AscentStats* stats,
                  const GradientField* fallback) {
  cfg.validate();
  const GridSpec& spec = grad.spec;
  if (spec != occ.spec()) throw Error(ErrorCode::DimMismatch, "guidance and occupancy grids differ");
  if (fallback && fallback->spec != spec) throw Error(ErrorCode::DimMismatch, "fallback guidance grid differs");

  const Vec3 sc = spec.to_continuous(start);
  const Vec3 gc = spec.to_continuous(goal);
  const GridIndex sv = checked_voxel(spec, sc, "start");
  const GridIndex gv = checked_voxel(spec, gc, "goal");
  if (occ.occupied(sv)) throw Error(ErrorCode::StartOccupied, "start voxel is occupied");
  if (occ.occupied(gv)) throw Error(ErrorCode::GoalOccupied, "goal voxel is occupied");

  AscentStats local;
  AscentStats& st = stats ? *stats : local;
  st = {};

  if (distance(sc, gc) <= cfg.goal_tolerance) return Path::from_waypoints({start, goal}, spec.resolution);
  if (!free_connected(occ, sv, gv)) {
    throw Error(ErrorCode::NoPathExists, "start and goal lie in different free components");
  }

  std::vector<Vec3> trace{sc};
  Vec3 p = sc;
  Vec3 velocity, m1, m2;
  double b1_pow = 1.0, b2_pow = 1.0;
  const GradientField* field = &grad;

  auto switch_to_fallback = [&](int step) {
    if (!fallback || field == fallback || !cfg.stall_fallback) return false;
    field = fallback;
    velocity = m1 = m2 = Vec3{};
    b1_pow = b2_pow = 1.0;
    p = sc;
    trace.assign(1, sc);
    st.fallback_step = step;
    return true;
  };

  for (int step = 1; step <= cfg.max_steps; ++step) {
    st.steps = step;
    const Vec3 dir = sample_direction(*field, p);
    if (dir == Vec3{}) {
      if (switch_to_fallback(step)) continue;
      throw Error(ErrorCode::Stalled, "guidance vanishes at step " + std::to_string(step));
    }

    Vec3 delta;
    if (cfg.mode == AscentMode::Momentum) {
      velocity = velocity * cfg.beta1 + dir * (1.0 - cfg.beta1);
      delta = velocity * cfg.learning_rate;
    } else {
      b1_pow *= cfg.beta1;
      b2_pow *= cfg.adam_beta2;
      for (int a = 0; a < 3; ++a) {
        m1[a] = cfg.beta1 * m1[a] + (1.0 - cfg.beta1) * dir[a];
        m2[a] = cfg.adam_beta2 * m2[a] + (1.0 - cfg.adam_beta2) * dir[a] * dir[a];
        const double mhat = m1[a] / (1.0 - b1_pow);
        const double vhat = m2[a] / (1.0 - b2_pow);
        delta[a] = cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
      }
    }

    // Each blocked axis is zeroed in turn so the step slides along faces,
    // edges and corners instead of stopping.
    Vec3 next = p;
    Vec3 move = clamp_to_grid(spec, p + delta) - p;
    for (int pass = 0; pass < 3 && norm(move) > 0.0; ++pass) {
      const Vec3 target = clamp_to_grid(spec, next + move);
      const auto hit = traverse_continuous(occ, next, target);
      if (!hit) {
        next = target;
        break;
      }
      if (pass == 0) ++st.truncations;
      const Vec3 seg = target - next;
      const double len = norm(seg);
      const double t = len > 0.0 ? std::max(0.0, hit->t - 1e-6 / len) : 0.0;
      if (t > 0.0 && !traverse_continuous(occ, next, next + seg * t)) next = next + seg * t;
      if (hit->axis < 0) break;
      move = seg * (1.0 - t);
      move[hit->axis] = 0.0;
      velocity[hit->axis] = 0.0;
      m1[hit->axis] = 0.0;
    }
    p = next;
    trace.push_back(p);
    st.last_position = p;

    const double to_goal = distance(p, gc);
    if (to_goal <= std::max(cfg.goal_tolerance, cfg.capture_radius) && !traverse_continuous(occ, p, gc)) {
      trace.push_back(gc);
      std::vector<WorldPoint> waypoints;
      waypoints.reserve(trace.size());
      for (const auto& c : trace) waypoints.push_back(spec.from_continuous(c));
      waypoints.front() = start;
      waypoints.back() = goal;
      return Path::from_waypoints(std::move(waypoints), spec.resolution);
    }
    const std::size_t window = static_cast<std::size_t>(cfg.stall_window);
    if (trace.size() - 1 >= window &&
        distance(p, trace[trace.size() - 1 - window]) < cfg.stall_displacement) {
      if (switch_to_fallback(step)) continue;
      throw Error(ErrorCode::Stalled, "displacement below threshold at step " + std::to_string(step));
    }
  }
  throw Error(ErrorCode::MaxStepsExceeded, "no arrival within " + std::to_string(cfg.max_steps) + " steps");
}

Path climb_field(const FieldGrid& field, const OccupancyGrid& occ, const WorldPoint& start, const WorldPoint& goal) {
  const GridSpec& spec = field.spec;
  if (spec != occ.spec()) throw Error(ErrorCode::DimMismatch, "field and occupancy grids differ");
  const GridIndex sv = checked_voxel(spec, spec.to_continuous(start), "start");
  const GridIndex gv = checked_voxel(spec, spec.to_continuous(goal), "goal");
  if (occ.occupied(sv)) throw Error(ErrorCode::StartOccupied, "start voxel is occupied");
  if (occ.occupied(gv)) throw Error(ErrorCode::GoalOccupied, "goal voxel is occupied");
  if (!free_connected(occ, sv, gv)) {
    throw Error(ErrorCode::NoPathExists, "start and goal lie in different free components");
  }

  // A diagonal move is admissible only if every voxel in its bounding box is free.
  auto box_free = [&](const GridIndex& a, const GridIndex& b) {
    for (int i = std::min(a.i, b.i); i <= std::max(a.i, b.i); ++i)
      for (int j = std::min(a.j, b.j); j <= std::max(a.j, b.j); ++j)
        for (int k = std::min(a.k, b.k); k <= std::max(a.k, b.k); ++k)
          if (occ.occupied(GridIndex{i, j, k})) return false;
    return true;
  };

  // Max-heap on phi; ties go to the lower flat index.
  using Entry = std::pair<double, std::int64_t>;
  auto lower = [](const Entry& a, const Entry& b) { return a.first != b.first ? a.first < b.first : a.second > b.second; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> open(lower);
  std::vector<std::int64_t> parent(spec.voxel_count(), -1);
  const auto s_flat = static_cast<std::int64_t>(spec.flat(sv));
  const auto g_flat = static_cast<std::int64_t>(spec.flat(gv));
  parent[s_flat] = s_flat;
  open.push({field.phi[s_flat], s_flat});
  while (!open.empty() && parent[g_flat] < 0) {
    const GridIndex v = spec.unflat(static_cast<std::size_t>(open.top().second));
    open.pop();
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          const GridIndex n{v.i + di, v.j + dj, v.k + dk};
          if (n == v || !spec.contains(n)) continue;
          const auto nf = static_cast<std::int64_t>(spec.flat(n));
          if (parent[nf] >= 0 || !box_free(v, n)) continue;
          parent[nf] = static_cast<std::int64_t>(spec.flat(v));
          open.push({field.phi[nf], nf});
        }
  }

  std::vector<WorldPoint> chain;
  for (std::int64_t f = g_flat; f != s_flat; f = parent[f]) chain.push_back(grid_to_world(spec.unflat(f), spec));
  chain.push_back(grid_to_world(sv, spec));
  std::vector<WorldPoint> waypoints{start};
  waypoints.insert(waypoints.end(), chain.rbegin(), chain.rend());
  waypoints.push_back(goal);
  return Path::from_waypoints(std::move(waypoints), spec.resolution);
}

}  // namespace fieldnav
