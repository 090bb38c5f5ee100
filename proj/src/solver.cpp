#include "fieldnav/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fieldnav/error.hpp"

namespace fieldnav {

namespace {

double dot_product(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double face_conductance(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

void StencilSystem::apply(std::span<const double> x, std::span<double> y) const {
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const std::size_t sx = spec.stride(0), sy = spec.stride(1);
  std::fill(y.begin(), y.end(), 0.0);
  const double* cx = coupling[0].data();
  const double* cy = coupling[1].data();
  const double* cz = coupling[2].data();
  const double* d = diagonal.data();
  // Unknowns never sit on the shell, so interior loops need no bounds checks.
  for (int i = 1; i < nx - 1; ++i) {
    for (int j = 1; j < ny - 1; ++j) {
      std::size_t v = (static_cast<std::size_t>(i) * ny + j) * nz + 1;
      for (int k = 1; k < nz - 1; ++k, ++v) {
        if (d[v] == 0.0) continue;
        y[v] = d[v] * x[v] - cx[v] * x[v + sx] - cx[v - sx] * x[v - sx] - cy[v] * x[v + sy] -
               cy[v - sy] * x[v - sy] - cz[v] * x[v + 1] - cz[v - 1] * x[v - 1];
      }
    }
  }
}

StencilSystem assemble(const ConductivityGrid& sigma, const GoalSpec& goal) {
  const GridSpec& spec = sigma.spec;
  spec.validate();
  if (sigma.sigma.size() != spec.voxel_count()) {
    throw Error(ErrorCode::DimMismatch, "conductivity storage does not match dims");
  }
  if (!spec.contains(goal.goal_index)) throw Error(ErrorCode::OutOfBounds, "goal outside grid");
  if (spec.on_shell(goal.goal_index)) {
    throw Error(ErrorCode::InvalidArgument, "goal voxel lies on the grounded outer shell");
  }
  const std::size_t gflat = spec.flat(goal.goal_index);
  if (sigma.sigma[gflat] <= 0.0) throw Error(ErrorCode::GoalOccupied, "goal voxel has zero conductivity");

  const std::size_t n = spec.voxel_count();
  StencilSystem sys;
  sys.spec = spec;
  sys.goal = goal.goal_index;
  for (int a = 0; a < 3; ++a) {
    sys.face[a].assign(n, 0.0);
    sys.coupling[a].assign(n, 0.0);
  }
  sys.dirichlet.assign(n, 0);
  sys.dirichlet_value.assign(n, 0.0);
  sys.unknown_index.assign(n, -1);
  sys.diagonal.assign(n, 0.0);
  sys.rhs.assign(n, 0.0);

  const auto& s = sigma.sigma;
  for (std::size_t v = 0; v < n; ++v) {
    if (s[v] <= 0.0) continue;
    const GridIndex g = spec.unflat(v);
    for (int a = 0; a < 3; ++a) {
      if (g[a] + 1 < spec.dims[a]) sys.face[a][v] = face_conductance(s[v], s[v + spec.stride(a)]);
    }
    if (spec.on_shell(g)) sys.dirichlet[v] = 1;
  }
  sys.dirichlet[gflat] = 1;
  sys.dirichlet_value[gflat] = 1.0;

  // Keep only free voxels reachable from a Dirichlet cell; isolated pockets
  // would make the operator singular.
  std::vector<std::uint8_t> reached(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t v = 0; v < n; ++v) {
    if (sys.dirichlet[v]) {
      reached[v] = 1;
      stack.push_back(v);
    }
  }
  auto visit_faces = [&](std::size_t v, auto&& fn) {
    const GridIndex g = spec.unflat(v);
    for (int a = 0; a < 3; ++a) {
      const std::size_t st = spec.stride(a);
      if (g[a] + 1 < spec.dims[a] && sys.face[a][v] > 0.0) fn(v + st, sys.face[a][v]);
      if (g[a] > 0 && sys.face[a][v - st] > 0.0) fn(v - st, sys.face[a][v - st]);
    }
  };
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    visit_faces(v, [&](std::size_t w, double) {
      if (!reached[w]) {
        reached[w] = 1;
        stack.push_back(w);
      }
    });
  }

  std::int32_t next = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (reached[v] && !sys.dirichlet[v]) sys.unknown_index[v] = next++;
  }
  sys.unknown_count = static_cast<std::size_t>(next);

  for (std::size_t v = 0; v < n; ++v) {
    if (!sys.is_unknown(v)) continue;
    double diag = 0.0;
    double b = 0.0;
    visit_faces(v, [&](std::size_t w, double c) {
      diag += c;
      if (sys.dirichlet[w]) b += c * sys.dirichlet_value[w];
    });
    sys.diagonal[v] = diag;
    sys.rhs[v] = b;
    for (int a = 0; a < 3; ++a) {
      const std::size_t w = v + spec.stride(a);
      if (sys.face[a][v] > 0.0 && sys.is_unknown(w)) sys.coupling[a][v] = sys.face[a][v];
    }
  }
  return sys;
}

int default_max_iterations(std::size_t unknowns) {
  const double cube_root = std::cbrt(static_cast<double>(std::max<std::size_t>(unknowns, 1)));
  return static_cast<int>(std::min(100000.0, std::ceil(20.0 * cube_root * 3.0)));
}

FieldGrid solve(const StencilSystem& sys, const SolveConfig& cfg, const FieldGrid* initial_guess) {
  if (!(cfg.rel_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "rel_tolerance must be > 0");
  const std::size_t n = sys.spec.voxel_count();
  const int max_it = cfg.max_iterations > 0 ? cfg.max_iterations : default_max_iterations(sys.unknown_count);
  const int checkpoint = std::max(1, cfg.checkpoint_interval);

  FieldGrid out;
  out.spec = sys.spec;
  out.goal = sys.goal;
  out.phi.assign(n, 0.0);

  std::vector<double> x(n, 0.0);
  if (initial_guess != nullptr) {
    if (initial_guess->spec != sys.spec) throw Error(ErrorCode::DimMismatch, "initial guess grid differs");
    for (std::size_t v = 0; v < n; ++v) {
      if (sys.is_unknown(v)) x[v] = initial_guess->phi[v];
    }
  }

  std::vector<double> inv_diag(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (sys.diagonal[v] > 0.0) {
      inv_diag[v] = cfg.preconditioner == Preconditioner::Jacobi ? 1.0 / sys.diagonal[v] : 1.0;
    }
  }

  const double bnorm = std::sqrt(dot_product(sys.rhs, sys.rhs));
  std::vector<double> r(n), z(n), p(n), ap(n);
  sys.apply(x, ap);
  for (std::size_t v = 0; v < n; ++v) r[v] = sys.rhs[v] - ap[v];

  auto finish = [&](const std::vector<double>& sol) {
    for (std::size_t v = 0; v < n; ++v) {
      out.phi[v] = sys.is_unknown(v) ? sol[v] : (sys.dirichlet[v] ? sys.dirichlet_value[v] : 0.0);
    }
    sys.apply(sol, ap);
    double rr = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double d = sys.rhs[v] - ap[v];
      rr += d * d;
    }
    out.residual = bnorm > 0.0 ? std::sqrt(rr) / bnorm : std::sqrt(rr);
  };

  if (sys.unknown_count == 0 || bnorm == 0.0) {
    // Either nothing to solve or no unknown touches the goal: phi = 0 is exact.
    if (bnorm == 0.0) std::fill(x.begin(), x.end(), 0.0);
    finish(x);
    out.converged = true;
    return out;
  }

  for (std::size_t v = 0; v < n; ++v) z[v] = inv_diag[v] * r[v];
  p = z;
  double rz = dot_product(r, z);
  double rel = std::sqrt(dot_product(r, r)) / bnorm;
  std::vector<double> best = x;
  double best_rel = rel;
  out.residual_history.push_back({0, rel});

  int it = 0;
  bool converged = rel <= cfg.rel_tolerance;
  while (!converged && it < max_it) {
    ++it;
    sys.apply(p, ap);
    const double pap = dot_product(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t v = 0; v < n; ++v) {
      x[v] += alpha * p[v];
      r[v] -= alpha * ap[v];
    }
    rel = std::sqrt(dot_product(r, r)) / bnorm;
    converged = rel <= cfg.rel_tolerance;
    if (converged || it % checkpoint == 0) {
      out.residual_history.push_back({it, rel});
      if (rel < best_rel) {
        best_rel = rel;
        best = x;
      }
    }
    if (converged) break;
    for (std::size_t v = 0; v < n; ++v) z[v] = inv_diag[v] * r[v];
    const double rz_new = dot_product(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t v = 0; v < n; ++v) p[v] = z[v] + beta * p[v];
  }

  out.iterations = it;
  out.converged = converged;
  finish(converged ? x : best);
  return out;
}

void require_converged(const FieldGrid& field) {
  if (!field.converged) {
    throw Error(ErrorCode::NoConvergence, "conjugate gradients stopped after " +
                                              std::to_string(field.iterations) +
                                              " iterations at relative residual " +
                                              std::to_string(field.residual));
  }
}

std::vector<GridIndex> verify_max_principle(const FieldGrid& field, const OccupancyGrid& occ,
                                            const GoalSpec& goal, double rel_tolerance) {
  const GridSpec& spec = field.spec;
  if (spec != occ.spec()) throw Error(ErrorCode::DimMismatch, "field and occupancy grids differ");
  const double slack = 10.0 * rel_tolerance;
  std::vector<GridIndex> violations;
  for (int i = 1; i < spec.dims[0] - 1; ++i) {
    for (int j = 1; j < spec.dims[1] - 1; ++j) {
      for (int k = 1; k < spec.dims[2] - 1; ++k) {
        const GridIndex g{i, j, k};
        if (g == goal.goal_index || occ.occupied(g)) continue;
        bool any = false;
        double nmax = -1e300;
        for_each_neighbor6(spec, g, [&](const GridIndex& nb) {
          if (occ.occupied(nb)) return;
          any = true;
          nmax = std::max(nmax, field.at(nb));
        });
        if (any && field.at(g) > nmax + slack) violations.push_back(g);
      }
    }
  }
  return violations;
}

double box_outflux(const StencilSystem& sys, const FieldGrid& field, const GridIndex& lo,
                   const GridIndex& hi) {
  const GridSpec& spec = sys.spec;
  double flux = 0.0;
  for (int i = lo.i; i <= hi.i; ++i) {
    for (int j = lo.j; j <= hi.j; ++j) {
      for (int k = lo.k; k <= hi.k; ++k) {
        const GridIndex g{i, j, k};
        const std::size_t v = spec.flat(g);
        for (int a = 0; a < 3; ++a) {
          const std::size_t st = spec.stride(a);
          if (g[a] == hi[a] && g[a] + 1 < spec.dims[a]) {
            flux += sys.face[a][v] * (field.phi[v] - field.phi[v + st]);
          }
          if (g[a] == lo[a] && g[a] > 0) {
            flux += sys.face[a][v - st] * (field.phi[v] - field.phi[v - st]);
          }
        }
      }
    }
  }
  return flux;
}

double goal_outflux(const StencilSystem& sys, const FieldGrid& field) {
  return box_outflux(sys, field, sys.goal, sys.goal);
}

}  // namespace fieldnav
