#include "fieldnav/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "fieldnav/error.hpp"
#include "fieldnav/rng.hpp"
#include "fieldnav/simworld.hpp"

namespace fieldnav {

namespace {

constexpr double kStepCost[4] = {0.0, 1.0, std::numbers::sqrt2, std::numbers::sqrt3};

void check_endpoint(const OccupancyGrid& occ, const GridIndex& g, ErrorCode code, const char* what) {
  if (!occ.spec().contains(g)) throw Error(ErrorCode::OutOfBounds, std::string(what) + " outside grid");
  if (occ.occupied(g)) throw Error(code, std::string(what) + " voxel is occupied");
}

struct OpenEntry {
  double f;
  double h;
  std::size_t index;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return index > o.index;
  }
};

}  // namespace

Path astar(const OccupancyGrid& occ, const GridIndex& start, const GridIndex& goal, AStarStats* stats) {
  check_endpoint(occ, start, ErrorCode::StartOccupied, "start");
  check_endpoint(occ, goal, ErrorCode::GoalOccupied, "goal");
  const GridSpec& spec = occ.spec();
  AStarStats local;
  AStarStats& st = stats ? *stats : local;
  st = {};

  const std::size_t n = spec.voxel_count();
  const std::size_t s = spec.flat(start);
  const std::size_t t = spec.flat(goal);
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  auto heuristic = [&](const GridIndex& v) { return distance(to_vec(v), to_vec(goal)); };

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  g[s] = 0.0;
  open.push({heuristic(start), heuristic(start), s});
  bool found = false;
  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    if (closed[cur.index]) continue;
    if (cur.index == t) {
      found = true;
      break;
    }
    closed[cur.index] = 1;
    ++st.expanded;
    const GridIndex cg = spec.unflat(cur.index);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk) {
          const int moves = (di != 0) + (dj != 0) + (dk != 0);
          if (moves == 0) continue;
          const GridIndex nb{cg.i + di, cg.j + dj, cg.k + dk};
          if (!spec.contains(nb)) continue;
          const std::size_t f = spec.flat(nb);
          if (closed[f] || occ.occupied(f)) continue;
          const double ng = g[cur.index] + kStepCost[moves];
          if (ng < g[f]) {
            g[f] = ng;
            parent[f] = static_cast<std::int64_t>(cur.index);
            const double h = heuristic(nb);
            open.push({ng + h, h, f});
          }
        }
      }
    }
  }
  if (!found) throw Error(ErrorCode::NoPathExists, "A* exhausted the free component of the start");

  std::vector<GridIndex> cells;
  for (std::int64_t v = static_cast<std::int64_t>(t); v >= 0; v = parent[v]) {
    cells.push_back(spec.unflat(static_cast<std::size_t>(v)));
  }
  std::reverse(cells.begin(), cells.end());
  std::vector<WorldPoint> waypoints;
  waypoints.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    waypoints.push_back(grid_to_world(cells[i], spec));
    if (i > 0) {
      const int moves = (cells[i].i != cells[i - 1].i) + (cells[i].j != cells[i - 1].j) + (cells[i].k != cells[i - 1].k);
      ++st.step_counts[moves - 1];
    }
  }
  st.cost = g[t];
  return Path::from_waypoints(std::move(waypoints), spec.resolution);
}

void RrtStarConfig::validate() const {
  if (samples <= 0) throw Error(ErrorCode::InvalidArgument, "RRT* samples must be > 0");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) throw Error(ErrorCode::InvalidArgument, "goal_bias must be in [0, 1]");
  if (!(steer_step > 0.0) || !(goal_region > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "steer_step and goal_region must be > 0");
  }
}

Path rrt_star(const OccupancyGrid& occ, const WorldPoint& start, const WorldPoint& goal, const RrtStarConfig& cfg,
              RrtStarStats* stats) {
  cfg.validate();
  const GridSpec& spec = occ.spec();
  const Vec3 sc = spec.to_continuous(start);
  const Vec3 gc = spec.to_continuous(goal);
  check_endpoint(occ, nearest_voxel(sc), ErrorCode::StartOccupied, "start");
  check_endpoint(occ, nearest_voxel(gc), ErrorCode::GoalOccupied, "goal");

  // Sample inside the bounding box of the free voxels.
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  std::size_t free_count = 0;
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    if (occ.occupied(v)) continue;
    ++free_count;
    const GridIndex g = spec.unflat(v);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], static_cast<double>(g[a]));
      hi[a] = std::max(hi[a], static_cast<double>(g[a]));
    }
  }
  const double unit_ball = 4.0 / 3.0 * std::numbers::pi;
  const double gamma = cfg.rewiring_gamma > 0.0
                           ? cfg.rewiring_gamma
                           : 2.0 * std::cbrt(1.0 + 1.0 / 3.0) * std::cbrt(static_cast<double>(free_count) / unit_ball);

  struct Node {
    Vec3 pos;
    int parent;
    double cost;
    std::vector<int> children;
  };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(cfg.samples) + 1);
  nodes.push_back({sc, -1, 0.0, {}});
  std::vector<int> goal_nodes;
  auto segment_free = [&](const Vec3& a, const Vec3& b) { return !traverse_continuous(occ, a, b); };
  auto consider_goal = [&](int id) {
    if (distance(nodes[id].pos, gc) <= cfg.goal_region && segment_free(nodes[id].pos, gc)) goal_nodes.push_back(id);
  };
  auto best_goal = [&]() {
    std::pair<double, int> best{std::numeric_limits<double>::infinity(), -1};
    for (int id : goal_nodes) {
      const double c = nodes[id].cost + distance(nodes[id].pos, gc);
      if (c < best.first) best = {c, id};
    }
    return best;
  };
  consider_goal(0);

  RrtStarStats local;
  RrtStarStats& st = stats ? *stats : local;
  st = {};
  st.gamma = gamma;

  Rng rng(cfg.rng_seed);
  std::vector<int> near;
  std::vector<int> stack;
  for (int it = 1; it <= cfg.samples; ++it) {
    const bool checkpoint = it % 1000 == 0 || it == cfg.samples;
    const bool toward_goal = rng.uniform() < cfg.goal_bias;
    Vec3 q = gc;
    if (!toward_goal) q = {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)};

    bool extended = false;
    if (!occ.blocked(nearest_voxel(q))) {
      int nearest = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Vec3 d = nodes[i].pos - q;
        const double d2 = dot(d, d);
        if (d2 < best_d2) {
          best_d2 = d2;
          nearest = static_cast<int>(i);
        }
      }
      const Vec3 from = nodes[nearest].pos;
      const double d = std::sqrt(best_d2);
      if (d > 0.0) {
        const Vec3 x_new = d > cfg.steer_step ? from + (q - from) * (cfg.steer_step / d) : q;
        extended = !occ.blocked(nearest_voxel(x_new)) && segment_free(from, x_new);
        if (extended) {
          const double count = static_cast<double>(nodes.size() + 1);
          const double radius = std::min(cfg.steer_step, gamma * std::cbrt(std::log(count) / count));
          near.clear();
          for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (distance(nodes[i].pos, x_new) <= radius) near.push_back(static_cast<int>(i));
          }
          int parent = nearest;
          double cost = nodes[nearest].cost + distance(from, x_new);
          for (int j : near) {
            if (j == nearest) continue;
            const double c = nodes[j].cost + distance(nodes[j].pos, x_new);
            if (c < cost && segment_free(nodes[j].pos, x_new)) {
              parent = j;
              cost = c;
            }
          }
          const int id = static_cast<int>(nodes.size());
          nodes.push_back({x_new, parent, cost, {}});
          nodes[parent].children.push_back(id);

          for (int j : near) {
            if (j == parent) continue;
            const double c = cost + distance(x_new, nodes[j].pos);
            if (c + 1e-12 < nodes[j].cost && segment_free(x_new, nodes[j].pos)) {
              auto& siblings = nodes[nodes[j].parent].children;
              siblings.erase(std::find(siblings.begin(), siblings.end(), j));
              nodes[j].parent = id;
              nodes[id].children.push_back(j);
              const double delta = c - nodes[j].cost;
              stack.assign(1, j);
              while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                nodes[u].cost += delta;
                for (int ch : nodes[u].children) stack.push_back(ch);
              }
            }
          }
          consider_goal(id);
        }
      }
    }
    if (checkpoint) st.checkpoints.push_back({it, best_goal().first});
  }

  st.nodes = nodes.size();
  st.tree_positions.reserve(nodes.size());
  st.tree_parents.reserve(nodes.size());
  for (const auto& nd : nodes) {
    st.tree_positions.push_back(nd.pos);
    st.tree_parents.push_back(nd.parent);
  }

  const auto [best_cost, best_id] = best_goal();
  if (best_id < 0) {
    throw Error(ErrorCode::NoPathFound, "no tree node reached the goal region in " + std::to_string(cfg.samples) +
                                            " iterations");
  }
  std::vector<WorldPoint> waypoints;
  for (int v = best_id; v >= 0; v = nodes[v].parent) waypoints.push_back(spec.from_continuous(nodes[v].pos));
  std::reverse(waypoints.begin(), waypoints.end());
  waypoints.front() = start;
  if (nodes[best_id].pos != gc) waypoints.push_back(goal);
  else waypoints.back() = goal;
  return Path::from_waypoints(std::move(waypoints), spec.resolution);
}

}  // namespace fieldnav
