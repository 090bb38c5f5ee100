#include <doctest.h>

#include <cmath>

#include "fieldnav/baselines.hpp"
#include "fieldnav/error.hpp"
#include "fieldnav/pipeline.hpp"
#include "oracles.hpp"

using namespace fieldnav;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

bool path_clear(const Path& path, const OccupancyGrid& occ) {
  const GridSpec& s = occ.spec();
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    const Vec3 a = s.to_continuous(path.waypoints[i - 1]), b = s.to_continuous(path.waypoints[i]);
    const int samples = 4 + static_cast<int>(std::ceil(norm(b - a) * 20));
    for (const auto& v : oracle::supersample_voxels(s, a, b, samples))
      if (occ.occupied(v)) return false;
  }
  return true;
}

OccupancyGrid walled(const GridSpec& s, int x) {
  OccupancyGrid occ(s);
  for (int j = 0; j < s.dims[1]; ++j)
    for (int k = 0; k < s.dims[2]; ++k) occ.set({x, j, k}, true);
  return occ;
}

GridIndex random_index(Rng& rng, int n) {
  return {static_cast<int>(rng.uniform_int(0, n - 1)), static_cast<int>(rng.uniform_int(0, n - 1)),
          static_cast<int>(rng.uniform_int(0, n - 1))};
}

}  // namespace

TEST_CASE("A* trivial cases") {
  const GridSpec s = oracle::cube_spec(5, 2.0);
  const OccupancyGrid occ(s);
  const Path same = astar(occ, {2, 2, 2}, {2, 2, 2});
  CHECK(same.length_voxels == 0.0);
  CHECK(same.waypoints.size() == 1);

  AStarStats st;
  const Path diag = astar(occ, {1, 1, 1}, {2, 2, 2}, &st);
  CHECK(diag.length_voxels == doctest::Approx(std::sqrt(3.0)));
  CHECK(diag.length_meters == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK(st.step_counts == std::array<int, 3>{0, 0, 1});

  OccupancyGrid blocked(s);
  blocked.set({1, 1, 1}, true);
  CHECK(code_of([&] { astar(blocked, {1, 1, 1}, {3, 3, 3}); }) == ErrorCode::StartOccupied);
  CHECK(code_of([&] { astar(blocked, {3, 3, 3}, {1, 1, 1}); }) == ErrorCode::GoalOccupied);
  CHECK(code_of([&] { astar(occ, {0, 0, 0}, {5, 0, 0}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { astar(walled(s, 2), {0, 0, 0}, {4, 0, 0}); }) == ErrorCode::NoPathExists);
}

TEST_CASE("A* equals the Dijkstra oracle on random 10^3 grids") {
  const GridSpec s = oracle::cube_spec(10);
  Rng rng(3);
  int compared = 0;
  for (std::uint64_t seed = 0; compared < 100; ++seed) {
    const OccupancyGrid occ = oracle::random_grid(s, rng.uniform(0.1, 0.4), seed);
    const GridIndex a = random_index(rng, 10), b = random_index(rng, 10);
    if (occ.occupied(a) || occ.occupied(b)) continue;
    const auto dj = oracle::dijkstra(occ, a, b);
    if (!dj.found) {
      CHECK(code_of([&] { astar(occ, a, b); }) == ErrorCode::NoPathExists);
      continue;
    }
    ++compared;
    AStarStats st;
    const Path p = astar(occ, a, b, &st);
    CAPTURE(seed);
    // 1, sqrt 2 and sqrt 3 are rationally independent, so equal cost means equal step counts.
    CHECK(st.step_counts == dj.steps);
    CHECK(std::abs(st.cost - dj.cost) <= 1e-12);
    CHECK(std::abs(p.length_voxels - dj.cost) <= 1e-9);
    CHECK(st.expanded <= dj.settled);
    CHECK(p.waypoints.front() == grid_to_world(a, s));
    CHECK(p.waypoints.back() == grid_to_world(b, s));
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
      const GridIndex u = world_to_grid(p.waypoints[i - 1], s), v = world_to_grid(p.waypoints[i], s);
      CHECK(!occ.occupied(v));
      CHECK(std::max({std::abs(u.i - v.i), std::abs(u.j - v.j), std::abs(u.k - v.k)}) == 1);
    }
  }
}

TEST_CASE("A* is deterministic") {
  const GridSpec s = oracle::cube_spec(16);
  const OccupancyGrid occ = oracle::random_grid(s, 0.2, 9);
  const GridIndex a{0, 0, 0}, b{15, 15, 15};
  if (!occ.occupied(a) && !occ.occupied(b) && oracle::dijkstra(occ, a, b).found) {
    CHECK(astar(occ, a, b).waypoints == astar(occ, a, b).waypoints);
  }
  // Symmetric empty grid: every tie is resolved the same way each time.
  const OccupancyGrid empty(s);
  CHECK(astar(empty, {0, 0, 0}, {15, 9, 3}).waypoints == astar(empty, {0, 0, 0}, {15, 9, 3}).waypoints);
}

TEST_CASE("the 26-connected metric overestimates Euclidean length by a bounded factor") {
  const double kappa = std::sqrt(1 + std::pow(std::sqrt(2.0) - 1, 2) + std::pow(std::sqrt(3.0) - std::sqrt(2.0), 2));
  Rng rng(12);
  double worst = 0.0;
  const GridSpec s = oracle::cube_spec(30);
  const OccupancyGrid empty(s);
  for (int t = 0; t < 300; ++t) {
    const GridIndex a = random_index(rng, 30), b = random_index(rng, 30);
    if (a == b) continue;
    const double euclid = norm(Vec3{double(a.i - b.i), double(a.j - b.j), double(a.k - b.k)});
    const double ratio = oracle::dijkstra(empty, a, b).cost / euclid;
    worst = std::max(worst, ratio);
    CHECK(ratio <= kappa + 1e-12);
  }
  CHECK(worst > 1.05);
}

TEST_CASE("A* is no longer than the other planners up to the lattice factor") {
  const double kappa = std::sqrt(1 + std::pow(std::sqrt(2.0) - 1, 2) + std::pow(std::sqrt(3.0) - std::sqrt(2.0), 2));
  const GridSpec s = oracle::cube_spec(33);
  OccupancyGrid occ(s);
  for (int j = 0; j < 33; ++j)
    for (int k = 0; k < 33; ++k)
      if (std::abs(j - 26) > 1 || std::abs(k - 16) > 1) occ.set({16, j, k}, true);
  const GridIndex a{4, 6, 16}, b{28, 6, 16};
  const double astar_len = astar(occ, a, b).length_voxels;
  const FieldPlanResult field = plan_field(occ, grid_to_world(a, s), grid_to_world(b, s), FieldPlanConfig{});
  RrtStarConfig rc;
  rc.rng_seed = 4;
  const Path rrt = rrt_star(occ, grid_to_world(a, s), grid_to_world(b, s), rc);
  // Endpoints coincide with voxel centers, so the lattice factor applies without an offset.
  CHECK(astar_len <= kappa * field.path.length_voxels);
  CHECK(astar_len <= kappa * rrt.length_voxels);
}

TEST_CASE("RRT* config validation") {
  RrtStarConfig c;
  CHECK_NOTHROW(c.validate());
  c.samples = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RrtStarConfig{};
  c.goal_bias = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RrtStarConfig{};
  c.steer_step = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("RRT* on an empty world stays within 1.30 of the straight line") {
  const GridSpec s = oracle::cube_spec(33, 2.0);
  const OccupancyGrid occ(s);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    const WorldPoint a{rng.uniform(4, 60), rng.uniform(4, 60), rng.uniform(4, 60)};
    const WorldPoint b{rng.uniform(4, 60), rng.uniform(4, 60), rng.uniform(4, 60)};
    RrtStarConfig c;
    c.rng_seed = seed;
    RrtStarStats st;
    const Path p = rrt_star(occ, a, b, c, &st);
    CAPTURE(seed);
    CHECK(p.waypoints.front() == a);
    CHECK(p.waypoints.back() == b);
    CHECK(p.length_meters <= 1.30 * distance(a, b) + 1e-9);
    CHECK(st.gamma > 0.0);
  }
}

TEST_CASE("RRT* properties on a cluttered world") {
  const GridSpec s = oracle::cube_spec(25);
  OccupancyGrid occ = oracle::random_grid(s, 0.1, 31);
  const WorldPoint a{2, 2, 2}, b{22, 22, 22};
  occ.set(world_to_grid(a, s), false);
  occ.set(world_to_grid(b, s), false);
  RrtStarConfig c;
  c.rng_seed = 8;
  RrtStarStats s1, s2;
  const Path p1 = rrt_star(occ, a, b, c, &s1);
  const Path p2 = rrt_star(occ, a, b, c, &s2);

  CHECK(path_clear(p1, occ));
  CHECK(p1.waypoints == p2.waypoints);
  CHECK(s1.tree_positions == s2.tree_positions);
  CHECK(s1.tree_parents == s2.tree_parents);
  CHECK(s1.nodes == s1.tree_positions.size());
  for (const auto& q : s1.tree_positions) CHECK(!occ.occupied(nearest_voxel(q)));

  REQUIRE(s1.checkpoints.size() >= 3);
  CHECK(s1.checkpoints[0].iteration == 1000);
  CHECK(s1.checkpoints[1].iteration == 2000);
  CHECK(s1.checkpoints.back().iteration == 3000);
  for (std::size_t i = 1; i < s1.checkpoints.size(); ++i)
    CHECK(s1.checkpoints[i].best_cost <= s1.checkpoints[i - 1].best_cost);
  CHECK(s1.checkpoints.back().best_cost == doctest::Approx(p1.length_voxels).epsilon(1e-9));

  c.rng_seed = 9;
  CHECK(rrt_star(occ, a, b, c).waypoints != p1.waypoints);
}

TEST_CASE("RRT* errors") {
  const GridSpec s = oracle::cube_spec(15);
  const OccupancyGrid occ = walled(s, 7);
  CHECK(code_of([&] { rrt_star(occ, {2, 7, 7}, {12, 7, 7}, RrtStarConfig{}); }) == ErrorCode::NoPathFound);
  CHECK(code_of([&] { rrt_star(occ, {7, 7, 7}, {12, 7, 7}, RrtStarConfig{}); }) == ErrorCode::StartOccupied);
  CHECK(code_of([&] { rrt_star(occ, {2, 7, 7}, {7, 7, 7}, RrtStarConfig{}); }) == ErrorCode::GoalOccupied);
}
