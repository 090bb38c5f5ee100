#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "fieldnav/conductivity.hpp"
#include "fieldnav/error.hpp"
#include "fieldnav/solver.hpp"
#include "oracles.hpp"

using namespace fieldnav;

namespace {

struct Problem {
  OccupancyGrid occ;
  GoalSpec goal;
  ConductivityGrid sigma;
  StencilSystem sys;
};

Problem make(const OccupancyGrid& occ, GridIndex goal) {
  Problem p{occ, {}, {}, {}};
  p.occ.set(goal, false);
  p.goal.goal_index = goal;
  p.sigma = build_conductivity(p.occ, p.goal);
  p.sys = assemble(p.sigma, p.goal);
  return p;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) num = std::max(num, std::abs(a[i] - b[i])), den = std::max(den, std::abs(b[i]));
  return num / den;
}

}  // namespace

TEST_CASE("harmonic-mean face conductance") {
  CHECK(face_conductance(100, 100) == 100);
  CHECK(face_conductance(0, 100) == 0);
  CHECK(face_conductance(100, 0) == 0);
  CHECK(face_conductance(1, 3) == doctest::Approx(1.5));
}

TEST_CASE("3^3 grid with the goal at the center has no unknowns") {
  const Problem p = make(OccupancyGrid(oracle::cube_spec(3)), {1, 1, 1});
  int shell = 0, goal = 0;
  for (std::size_t v = 0; v < 27; ++v) {
    if (!p.sys.dirichlet[v]) continue;
    if (p.sys.dirichlet_value[v] == 1.0) ++goal;
    else ++shell;
  }
  CHECK(shell == 26);
  CHECK(goal == 1);
  CHECK(p.sys.unknown_count == 0);
  const FieldGrid f = solve(p.sys, {});
  CHECK(f.converged);
  CHECK(f.at({1, 1, 1}) == 1.0);
  CHECK(f.at({0, 1, 1}) == 0.0);
}

TEST_CASE("assembly structure") {
  const GridSpec s = oracle::cube_spec(7);
  const Problem p = make(oracle::random_grid(s, 0.25, 2), {3, 3, 3});
  const std::size_t n = s.voxel_count();
  for (int a = 0; a < 3; ++a)
    for (std::size_t v = 0; v < n; ++v) CHECK(p.sys.face[a][v] >= 0.0);
  // Diagonal is the sum of all incident face conductances: zero row sums away
  // from Dirichlet coupling.
  for (std::size_t v = 0; v < n; ++v) {
    if (!p.sys.is_unknown(v)) continue;
    const GridIndex g = s.unflat(v);
    double sum = 0;
    for (int a = 0; a < 3; ++a) {
      sum += p.sys.face[a][v];
      if (g[a] > 0) sum += p.sys.face[a][v - s.stride(a)];
    }
    CHECK(p.sys.diagonal[v] == doctest::Approx(sum).epsilon(1e-14));
  }
  // Symmetry: <x, Ay> = <Ax, y>.
  Rng rng(1);
  std::vector<double> x(n), y(n), ax(n), ay(n);
  for (std::size_t v = 0; v < n; ++v)
    if (p.sys.is_unknown(v)) x[v] = rng.uniform(-1, 1), y[v] = rng.uniform(-1, 1);
  p.sys.apply(x, ax);
  p.sys.apply(y, ay);
  double xay = 0, axy = 0;
  for (std::size_t v = 0; v < n; ++v) xay += x[v] * ay[v], axy += ax[v] * y[v];
  CHECK(xay == doctest::Approx(axy).epsilon(1e-12));
  // Obstacles are never unknowns and have no conducting faces.
  for (std::size_t v = 0; v < n; ++v) {
    if (!p.occ.occupied(v)) continue;
    CHECK_FALSE(p.sys.is_unknown(v));
    for (int a = 0; a < 3; ++a) CHECK(p.sys.face[a][v] == 0.0);
  }
}

TEST_CASE("assembly errors") {
  const GridSpec s = oracle::cube_spec(5);
  OccupancyGrid occ(s);
  GoalSpec g;
  g.goal_index = {2, 2, 2};
  ConductivityGrid c = build_conductivity(occ, g);
  c.sigma[s.flat({2, 2, 2})] = 0.0;
  try {
    assemble(c, g);
    FAIL("expected GoalOccupied");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GoalOccupied);
  }
  g.goal_index = {0, 2, 2};
  CHECK_THROWS_AS(assemble(build_conductivity(occ, g), g), Error);
}

TEST_CASE("5^3 empty grid matches the dense direct solve") {
  const Problem p = make(OccupancyGrid(oracle::cube_spec(5)), {2, 2, 2});
  const FieldGrid f = solve(p.sys, {});
  CHECK(f.converged);
  CHECK(f.residual <= 1e-8);
  CHECK(max_rel_err(f.phi, oracle::dense_field(p.sigma, {2, 2, 2})) <= 1e-6);
}

TEST_CASE("random small systems match the dense direct solve") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int n = 5 + static_cast<int>(seed % 3);
    const GridSpec s = oracle::cube_spec(n);
    const GridIndex goal{n / 2, 1 + static_cast<int>(seed % (n - 2)), n / 2};
    const Problem p = make(oracle::random_grid(s, 0.2, 40 + seed), goal);
    for (Preconditioner pc : {Preconditioner::Jacobi, Preconditioner::None}) {
      SolveConfig cfg;
      cfg.preconditioner = pc;
      const FieldGrid f = solve(p.sys, cfg);
      CHECK(f.converged);
      CHECK(max_rel_err(f.phi, oracle::dense_field(p.sigma, goal)) <= 1e-6);
    }
  }
}

TEST_CASE("field bounds, sentinels and pockets") {
  const GridSpec s = oracle::cube_spec(9);
  OccupancyGrid occ = oracle::random_grid(s, 0.2, 77);
  // A sealed pocket around (6,6,6).
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) occ.set(GridIndex{6 + di, 6 + dj, 6 + dk}, true);
  occ.set(GridIndex{6, 6, 6}, false);
  const Problem p = make(occ, {3, 3, 3});
  const FieldGrid f = solve(p.sys, {});
  CHECK(f.at({3, 3, 3}) == 1.0);
  CHECK(f.at({6, 6, 6}) == 0.0);
  CHECK_FALSE(p.sys.is_unknown(s.flat({6, 6, 6})));
  for (std::size_t v = 0; v < s.voxel_count(); ++v) {
    const GridIndex g = s.unflat(v);
    if (p.occ.occupied(v)) CHECK(f.phi[v] == 0.0);
    if (s.on_shell(g)) CHECK(f.phi[v] == 0.0);
    CHECK(f.phi[v] >= -1e-12);
    CHECK(f.phi[v] <= 1.0 + 1e-12);
  }
}

TEST_CASE("mirror symmetry") {
  const GridSpec s = oracle::cube_spec(13);
  OccupancyGrid occ(s);
  // Obstacles mirrored across the i = 6 plane.
  for (int j = 2; j < 9; ++j)
    for (int k = 3; k < 7; ++k) occ.set(GridIndex{3, j, k}, true), occ.set(GridIndex{9, j, k}, true);
  occ.set(GridIndex{5, 9, 9}, true);
  occ.set(GridIndex{7, 9, 9}, true);
  const Problem p = make(occ, {6, 5, 5});
  const FieldGrid f = solve(p.sys, {});
  for (std::size_t v = 0; v < s.voxel_count(); ++v) {
    const GridIndex g = s.unflat(v);
    CHECK(std::abs(f.phi[v] - f.at({12 - g.i, g.j, g.k})) <= 1e-10);
  }
}

TEST_CASE("uniform problem is invariant under the 48 cube symmetries") {
  const int n = 9;
  const Problem p = make(OccupancyGrid(oracle::cube_spec(n)), {4, 4, 4});
  const FieldGrid f = solve(p.sys, {});
  std::array<int, 3> perm{0, 1, 2};
  int count = 0;
  do {
    for (int flips = 0; flips < 8; ++flips) {
      ++count;
      double worst = 0;
      for (std::size_t v = 0; v < f.phi.size(); ++v) {
        const GridIndex g = p.sys.spec.unflat(v);
        GridIndex t;
        for (int a = 0; a < 3; ++a) {
          const int c = g[perm[a]];
          t[a] = (flips >> a) & 1 ? n - 1 - c : c;
        }
        worst = std::max(worst, std::abs(f.phi[v] - f.at(t)));
      }
      CHECK(worst <= 1e-10);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(count == 48);
}

TEST_CASE("maximum principle check") {
  const GridSpec s = oracle::cube_spec(15);
  const Problem p = make(oracle::random_grid(s, 0.15, 31), {7, 7, 7});
  FieldGrid f = solve(p.sys, {});
  REQUIRE(f.converged);
  SUBCASE("a converged solve has no violations and the goal is never reported") {
    CHECK(verify_max_principle(f, p.occ, p.goal).empty());
  }
  SUBCASE("a planted bump is reported") {
    GridIndex bump{-1, -1, -1};
    for (std::size_t v = 0; v < f.phi.size() && bump.i < 0; ++v)
      if (p.sys.is_unknown(v) && f.phi[v] > 0.01) bump = s.unflat(v);
    REQUIRE(bump.i >= 0);
    f.phi[s.flat(bump)] += 0.5;
    const auto bad = verify_max_principle(f, p.occ, p.goal);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == bump);
  }
  SUBCASE("each unknown is a convex combination of its neighbors") {
    for (std::size_t v = 0; v < f.phi.size(); ++v) {
      if (!p.sys.is_unknown(v)) continue;
      const GridIndex g = s.unflat(v);
      double num = 0, den = 0;
      for (int a = 0; a < 3; ++a) {
        const std::size_t st = s.stride(a);
        num += p.sys.face[a][v] * f.phi[v + st];
        den += p.sys.face[a][v];
        if (g[a] > 0) num += p.sys.face[a][v - st] * f.phi[v - st], den += p.sys.face[a][v - st];
      }
      CHECK(std::abs(f.phi[v] - num / den) <= 1e-6);
    }
  }
}

TEST_CASE("flux conservation through boxes away from the goal") {
  const GridSpec s = oracle::cube_spec(17);
  const Problem p = make(oracle::random_grid(s, 0.1, 12), {8, 8, 8});
  SolveConfig cfg;
  cfg.rel_tolerance = 1e-12;
  const FieldGrid f = solve(p.sys, cfg);
  const double total = goal_outflux(p.sys, f);
  CHECK(total > 0.0);
  CHECK(std::abs(box_outflux(p.sys, f, {2, 2, 2}, {6, 7, 5})) <= 1e-6 * total);
  CHECK(std::abs(box_outflux(p.sys, f, {10, 1, 1}, {15, 15, 15})) <= 1e-6 * total);
  // A box around the goal carries the goal's flux.
  CHECK(box_outflux(p.sys, f, {6, 6, 6}, {10, 10, 10}) == doctest::Approx(total).epsilon(1e-6));
}

TEST_CASE("iteration budget, checkpoints and restarts") {
  const GridSpec s = oracle::cube_spec(21);
  const Problem p = make(oracle::random_grid(s, 0.1, 3), {10, 10, 10});
  CHECK(default_max_iterations(1000) == std::min(100000, static_cast<int>(20 * std::cbrt(1000.0) * 3)));
  CHECK(default_max_iterations(1000000000000ULL) == 100000);

  SolveConfig starved;
  starved.max_iterations = 3;
  const FieldGrid partial = solve(p.sys, starved);
  CHECK_FALSE(partial.converged);
  try {
    require_converged(partial);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }

  // Warm restarts never increase the residual.
  SolveConfig slice;
  slice.max_iterations = 10;
  slice.checkpoint_interval = 5;
  FieldGrid cur = solve(p.sys, slice);
  double prev = cur.residual;
  for (int r = 0; r < 8; ++r) {
    cur = solve(p.sys, slice, &cur);
    CHECK(cur.residual <= prev);
    prev = cur.residual;
  }

  const FieldGrid full = solve(p.sys, {});
  CHECK(full.converged);
  CHECK(full.residual_history.front().iteration == 0);
  CHECK(full.residual_history.back().relative_residual <= 1e-8);
  // Warm-starting from a converged field converges immediately.
  const FieldGrid again = solve(p.sys, {}, &full);
  CHECK(again.converged);
  CHECK(again.iterations <= 1);
}

TEST_CASE("solves are deterministic") {
  const GridSpec s = oracle::cube_spec(13);
  const Problem p = make(oracle::random_grid(s, 0.2, 8), {6, 6, 6});
  const FieldGrid a = solve(p.sys, {});
  const FieldGrid b = solve(p.sys, {});
  CHECK(a.phi == b.phi);
  CHECK(a.iterations == b.iterations);
}
