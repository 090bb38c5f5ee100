#include <doctest.h>

#include <cmath>

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

GradientField uniform_field(const GridSpec& s, const Vec3& v) {
  GradientField g;
  g.spec = s;
  g.g.assign(s.voxel_count(), v);
  g.free.assign(s.voxel_count(), 1);
  return g;
}

// Every voxel a path segment crosses, by dense supersampling, must be free.
bool path_clear(const Path& path, const OccupancyGrid& occ) {
  const GridSpec& s = occ.spec();
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    const Vec3 a = s.to_continuous(path.waypoints[i - 1]), b = s.to_continuous(path.waypoints[i]);
    const int samples = 4 + static_cast<int>(std::ceil(norm(b - a) * 20));
    for (const auto& v : oracle::supersample_voxels(s, a, b, samples)) {
      if (occ.occupied(v)) return false;
    }
  }
  return true;
}

bool in_same_component(const OccupancyGrid& occ, const GridIndex& a, const GridIndex& b) {
  return !occ.occupied(a) && !occ.occupied(b) && free_component(occ, a).contains(b);
}

// The free outer shell is held at phi = 0, so routes along it carry no guidance.
bool interior_connected(const OccupancyGrid& occ, const GridIndex& a, const GridIndex& b) {
  OccupancyGrid inner = occ;
  const GridSpec& s = occ.spec();
  for (std::size_t v = 0; v < s.voxel_count(); ++v)
    if (s.on_shell(s.unflat(v))) inner.set(v, true);
  return in_same_component(inner, a, b);
}

}  // namespace

TEST_CASE("path length") {
  const Path p = Path::from_waypoints({{0, 0, 0}, {3, 4, 0}, {3, 4, 12}}, 2.0);
  CHECK(p.length_meters == doctest::Approx(17.0));
  CHECK(p.length_voxels == doctest::Approx(8.5));
  const PathLength l = path_length(p);
  CHECK(l.meters == p.length_meters);
  CHECK(l.voxels == p.length_voxels);
  CHECK(Path::from_waypoints({{1, 1, 1}}, 2.0).length_meters == 0.0);

  std::vector<WorldPoint> pts;
  for (int i = 0; i <= 25; ++i) pts.push_back({double(i), 0, 0});
  const auto d = Path::from_waypoints(pts, 1.0).decimated(10);
  REQUIRE(d.size() == 4);
  CHECK(d.front() == pts.front());
  CHECK(d[1] == pts[10]);
  CHECK(d[2] == pts[20]);
  CHECK(d.back() == pts.back());
}

TEST_CASE("ascent config validation") {
  AscentConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = AscentConfig{};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = AscentConfig{};
  c.capture_radius = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("start within tolerance of the goal returns the two endpoints") {
  const GridSpec s = oracle::cube_spec(9);
  const Path p = follow_field(uniform_field(s, {1, 0, 0}), OccupancyGrid(s), {4, 4, 4}, {5, 4, 4}, AscentConfig{});
  REQUIRE(p.waypoints.size() == 2);
  CHECK(p.waypoints.front() == WorldPoint{4, 4, 4});
  CHECK(p.waypoints.back() == WorldPoint{5, 4, 4});
}

TEST_CASE("ascent reports precondition errors") {
  const GridSpec s = oracle::cube_spec(9);
  OccupancyGrid occ(s);
  occ.set({1, 1, 1}, true);
  occ.set({7, 7, 7}, true);
  const GradientField g = uniform_field(s, {1, 0, 0});
  const AscentConfig c;
  CHECK(code_of([&] { follow_field(g, occ, {1, 1, 1}, {5, 5, 5}, c); }) == ErrorCode::StartOccupied);
  CHECK(code_of([&] { follow_field(g, occ, {5, 5, 5}, {7, 7, 7}, c); }) == ErrorCode::GoalOccupied);
  CHECK(code_of([&] { follow_field(g, occ, {5, 5, 5}, {9, 5, 5}, c); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { follow_field(g, OccupancyGrid(oracle::cube_spec(8)), {1, 1, 1}, {5, 5, 5}, c); }) ==
        ErrorCode::DimMismatch);

  OccupancyGrid wall(s);
  for (int j = 0; j < 9; ++j)
    for (int k = 0; k < 9; ++k) wall.set({4, j, k}, true);
  CHECK(code_of([&] { follow_field(g, wall, {1, 4, 4}, {7, 4, 4}, c); }) == ErrorCode::NoPathExists);
}

TEST_CASE("stall handling") {
  const GridSpec s = oracle::cube_spec(21);
  const OccupancyGrid occ(s);
  const GradientField away = uniform_field(s, {-1, 0, 0});
  const GradientField toward = uniform_field(s, {1, 0, 0});
  AscentConfig c;
  c.capture_radius = 0.0;

  SUBCASE("a field pointing away stalls at the boundary") {
    CHECK(code_of([&] { follow_field(away, occ, {3, 10, 10}, {18, 10, 10}, c); }) == ErrorCode::Stalled);
  }
  SUBCASE("the fallback restarts from the start") {
    AscentStats st;
    const Path p = follow_field(away, occ, {3, 10, 10}, {18, 10, 10}, c, &st, &toward);
    CHECK(st.fallback_step > 0);
    CHECK(p.waypoints.front() == WorldPoint{3, 10, 10});
    CHECK(p.waypoints.back() == WorldPoint{18, 10, 10});
    for (const auto& w : p.waypoints) CHECK(w.x >= 3.0);
    CHECK(p.length_meters == doctest::Approx(15.0).epsilon(1e-9));
  }
  SUBCASE("the fallback can be disabled") {
    c.stall_fallback = false;
    CHECK(code_of([&] { follow_field(away, occ, {3, 10, 10}, {18, 10, 10}, c, nullptr, &toward); }) ==
          ErrorCode::Stalled);
  }
  SUBCASE("a vanishing field stalls immediately") {
    CHECK(code_of([&] { follow_field(uniform_field(s, {}), occ, {3, 10, 10}, {18, 10, 10}, c); }) ==
          ErrorCode::Stalled);
  }
  SUBCASE("the step cap is reported") {
    c.max_steps = 10;
    CHECK(code_of([&] { follow_field(toward, occ, {3, 10, 10}, {18, 10, 10}, c); }) ==
          ErrorCode::MaxStepsExceeded);
  }
}

TEST_CASE("capture radius finishes with a straight free segment") {
  const GridSpec s = oracle::cube_spec(21);
  const GradientField away = uniform_field(s, {-1, 0, 0});
  AscentConfig c;
  c.capture_radius = 7.5;
  AscentStats st;
  const Path p = follow_field(away, OccupancyGrid(s), {10, 10, 10}, {16, 12, 10}, c, &st);
  CHECK(st.steps == 1);
  REQUIRE(p.waypoints.size() == 3);
  CHECK(p.waypoints.back() == WorldPoint{16, 12, 10});

  // The direct segment is blocked, so capture does not fire.
  OccupancyGrid wall(s);
  for (int j = 0; j < 21; ++j)
    for (int k = 0; k < 21; ++k)
      if (!(j > 17 && k > 17)) wall.set({13, j, k}, true);
  CHECK(code_of([&] { follow_field(away, wall, {10, 10, 10}, {16, 12, 10}, c); }) == ErrorCode::Stalled);
}

TEST_CASE("paths on an empty 51^3 grid stay close to the straight line") {
  const GridSpec s = oracle::cube_spec(51, 2.0);
  const OccupancyGrid occ(s);
  FieldPlanConfig cfg;
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    auto pick = [&] { return WorldPoint{rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(10, 90)}; };
    const WorldPoint a = pick(), b = pick();
    const FieldPlanResult r = plan_field(occ, a, b, cfg);
    CHECK(r.path.waypoints.front() == a);
    CHECK(r.path.waypoints.back() == b);
    CHECK(r.path.length_meters <= 1.10 * distance(a, b) + 1e-9);
  }
}

TEST_CASE("paths thread a 3-voxel gap in a wall") {
  const GridSpec s = oracle::cube_spec(33);
  OccupancyGrid occ(s);
  for (int j = 0; j < 33; ++j)
    for (int k = 0; k < 33; ++k)
      if (std::abs(j - 26) > 1 || std::abs(k - 16) > 1) occ.set({16, j, k}, true);
  FieldPlanConfig cfg;
  for (const auto mode : {AscentMode::Momentum, AscentMode::Adam}) {
    cfg.ascent.mode = mode;
    const FieldPlanResult r = plan_field(occ, {4, 6, 16}, {28, 6, 16}, cfg);
    CHECK(path_clear(r.path, occ));
    bool through = false;
    for (std::size_t i = 1; i < r.path.waypoints.size(); ++i) {
      const auto& a = r.path.waypoints[i - 1];
      const auto& b = r.path.waypoints[i];
      if ((a.x - 16) * (b.x - 16) <= 0.0) through |= std::abs(a.y - 26) <= 1.5 && std::abs(a.z - 16) <= 1.5;
    }
    CHECK(through);
  }
}

TEST_CASE("field planning is complete on random connected worlds") {
  const GridSpec s = oracle::cube_spec(33);
  FieldPlanConfig cfg;
  int planned = 0;
  for (std::uint64_t seed = 0; planned < 100; ++seed) {
    const OccupancyGrid occ = oracle::random_grid(s, 0.15, 1000 + seed);
    Rng rng(seed);
    const GridIndex a{static_cast<int>(rng.uniform_int(1, 31)), static_cast<int>(rng.uniform_int(1, 31)),
                      static_cast<int>(rng.uniform_int(1, 31))};
    const GridIndex b{static_cast<int>(rng.uniform_int(1, 31)), static_cast<int>(rng.uniform_int(1, 31)),
                      static_cast<int>(rng.uniform_int(1, 31))};
    if (a == b || !interior_connected(occ, a, b)) continue;
    ++planned;
    const WorldPoint wa = grid_to_world(a, s), wb = grid_to_world(b, s);
    CAPTURE(seed);
    FieldPlanResult r;
    REQUIRE_NOTHROW(r = plan_field(occ, wa, wb, cfg));
    CHECK(r.path.waypoints.back() == wb);
    CHECK(path_clear(r.path, occ));
  }
}

TEST_CASE("ascent is deterministic") {
  const GridSpec s = oracle::cube_spec(25);
  const OccupancyGrid occ = oracle::random_grid(s, 0.1, 77);
  FieldPlanConfig cfg;
  const WorldPoint a = grid_to_world({2, 3, 4}, s), b = grid_to_world({21, 20, 19}, s);
  REQUIRE(in_same_component(occ, {2, 3, 4}, {21, 20, 19}));
  const auto r1 = plan_field(occ, a, b, cfg);
  const auto r2 = plan_field(occ, a, b, cfg);
  CHECK(r1.path.waypoints == r2.path.waypoints);
  CHECK(r1.ascent.steps == r2.ascent.steps);
}

TEST_CASE("the log transform does not change the unsmoothed path") {
  const GridSpec s = oracle::cube_spec(25);
  OccupancyGrid occ(s);
  for (int j = 0; j < 18; ++j)
    for (int k = 0; k < 25; ++k) occ.set({12, j, k}, true);
  FieldPlanConfig plain;
  plain.guidance.smoothing_sigma = 0.0;
  FieldPlanConfig logged = plain;
  logged.guidance.log_transform = true;
  const WorldPoint a{3, 4, 12}, b{21, 4, 12};
  const auto p1 = plan_field(occ, a, b, plain).path;
  const auto p2 = plan_field(occ, a, b, logged).path;
  REQUIRE(p1.waypoints.size() == p2.waypoints.size());
  for (std::size_t i = 0; i < p1.waypoints.size(); ++i) CHECK(distance(p1.waypoints[i], p2.waypoints[i]) <= 1e-9);
}

TEST_CASE("discrete climb") {
  const GridSpec s = oracle::cube_spec(17);
  const GridIndex a{1, 2, 3}, b{15, 14, 13};
  OccupancyGrid occ;
  for (std::uint64_t seed = 5;; ++seed) {
    occ = oracle::random_grid(s, 0.3, seed);
    if (interior_connected(occ, a, b)) break;
  }
  GoalSpec gs;
  gs.goal_index = b;
  const FieldGrid f = solve(assemble(build_conductivity(occ, gs), gs), SolveConfig{});
  const WorldPoint wa = grid_to_world(a, s) + Vec3{0.2, -0.3, 0.1}, wb = grid_to_world(b, s);
  const Path p = climb_field(f, occ, wa, wb);
  CHECK(p.waypoints.front() == wa);
  CHECK(p.waypoints.back() == wb);
  CHECK(path_clear(p, occ));
  auto check_steps = [&](const Path& path) {
    for (std::size_t i = 2; i + 1 < path.waypoints.size(); ++i) {
      const GridIndex u = world_to_grid(path.waypoints[i - 1], s), v = world_to_grid(path.waypoints[i], s);
      CHECK(std::max({std::abs(u.i - v.i), std::abs(u.j - v.j), std::abs(u.k - v.k)}) == 1);
    }
  };
  check_steps(p);

  SUBCASE("on an empty grid the climb follows increasing phi") {
    const OccupancyGrid empty(s);
    const FieldGrid fe = solve(assemble(build_conductivity(empty, gs), gs), SolveConfig{});
    const Path pe = climb_field(fe, empty, wa, wb);
    for (std::size_t i = 2; i + 1 < pe.waypoints.size(); ++i)
      CHECK(fe.at(world_to_grid(pe.waypoints[i], s)) > fe.at(world_to_grid(pe.waypoints[i - 1], s)));
    CHECK(pe.length_voxels <= 1.2 * distance(s.to_continuous(wa), s.to_continuous(wb)));
  }
  SUBCASE("a flat field still reaches the goal") {
    FieldGrid flat = f;
    std::fill(flat.phi.begin(), flat.phi.end(), 0.5);
    const Path pf = climb_field(flat, occ, wa, wb);
    CHECK(pf.waypoints.back() == wb);
    CHECK(path_clear(pf, occ));
    check_steps(pf);
  }
  SUBCASE("preconditions") {
    OccupancyGrid wall(s);
    for (int j = 0; j < 17; ++j)
      for (int k = 0; k < 17; ++k) wall.set({8, j, k}, true);
    CHECK(code_of([&] { climb_field(f, wall, wa, wb); }) == ErrorCode::NoPathExists);
    CHECK(code_of([&] { climb_field(f, OccupancyGrid(oracle::cube_spec(16)), wa, wb); }) == ErrorCode::DimMismatch);
  }
}

TEST_CASE("the pipeline climbs when ascent stalls") {
  const GridSpec s = oracle::cube_spec(15);
  OccupancyGrid occ;
  int climbed = 0, planned = 0;
  FieldPlanConfig cfg;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    occ = oracle::random_grid(s, 0.35, 500 + seed);
    const GridIndex a{1, 1, 1}, b{13, 13, 13};
    if (!interior_connected(occ, a, b)) continue;
    ++planned;
    const auto r = plan_field(occ, grid_to_world(a, s), grid_to_world(b, s), cfg);
    CHECK(path_clear(r.path, occ));
    climbed += r.ascent.climbed;
    FieldPlanConfig strict = cfg;
    strict.ascent.stall_fallback = false;
    if (r.ascent.climbed || r.ascent.fallback_step >= 0) {
      CHECK_THROWS_AS(plan_field(occ, grid_to_world(a, s), grid_to_world(b, s), strict), Error);
    }
  }
  CHECK(planned > 20);
  CHECK(climbed > 0);
}
