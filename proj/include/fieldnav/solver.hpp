#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fieldnav/conductivity.hpp"
#include "fieldnav/grid.hpp"

namespace fieldnav {

/// Finite-volume discretization of div(sigma grad phi) = 0 on the voxel lattice.
///
/// Unknowns are the free voxels that connect (through non-zero faces) to a
/// Dirichlet cell but are not Dirichlet themselves. All per-voxel arrays use
/// the full-grid flat layout; entries for non-unknowns are zero so the reduced
/// operator can be applied to full-grid vectors without gathers.
struct StencilSystem {
  GridSpec spec;
  GridIndex goal;
  /// face[a][v]: conductance between v and v + e_a (zero past the last layer).
  std::array<std::vector<double>, 3> face;
  /// coupling[a][v]: face[a][v] when both endpoints are unknowns, else zero.
  std::array<std::vector<double>, 3> coupling;
  std::vector<std::uint8_t> dirichlet;
  std::vector<double> dirichlet_value;
  /// Reduced-system index of each voxel; -1 for Dirichlet, obstacle and cut-off voxels.
  std::vector<std::int32_t> unknown_index;
  std::size_t unknown_count = 0;
  std::vector<double> diagonal;
  std::vector<double> rhs;

  bool is_unknown(std::size_t v) const { return unknown_index[v] >= 0; }
  /// y = A x over full-grid vectors (non-unknown entries of y are zero).
  void apply(std::span<const double> x, std::span<double> y) const;
};

/// Harmonic mean 2ab/(a+b); zero when either side is zero.
double face_conductance(double a, double b);

/// Dirichlet phi = 1 at the goal and phi = 0 on the outer voxel shell; faces
/// touching an obstacle carry no flux.
StencilSystem assemble(const ConductivityGrid& sigma, const GoalSpec& goal);

enum class Preconditioner { None, Jacobi };

struct SolveConfig {
  double rel_tolerance = 1e-8;
  /// 0 selects the automatic budget min(100000, 20 * n^(1/3) * 3).
  int max_iterations = 0;
  Preconditioner preconditioner = Preconditioner::Jacobi;
  int checkpoint_interval = 50;
};

struct ResidualCheckpoint {
  int iteration = 0;
  double relative_residual = 0.0;
};

struct FieldGrid {
  GridSpec spec;
  GridIndex goal;
  std::vector<double> phi;
  double residual = 0.0;  ///< final relative residual ||b - Ax|| / ||b||
  int iterations = 0;
  bool converged = false;
  std::vector<ResidualCheckpoint> residual_history;

  double at(const GridIndex& g) const { return phi[spec.flat(g)]; }
};

int default_max_iterations(std::size_t unknowns);

/// Preconditioned conjugate gradients on the reduced SPD system. When the
/// iteration budget runs out the best checkpointed iterate is returned with
/// converged = false; use require_converged() to turn that into NoConvergence.
FieldGrid solve(const StencilSystem& system, const SolveConfig& cfg,
                const FieldGrid* initial_guess = nullptr);

void require_converged(const FieldGrid& field);

/// Free non-goal interior voxels whose phi exceeds every free 6-neighbor by
/// more than 10 * rel_tolerance.
std::vector<GridIndex> verify_max_principle(const FieldGrid& field, const OccupancyGrid& occ,
                                            const GoalSpec& goal, double rel_tolerance = 1e-8);

/// Net discrete flux leaving the closed voxel box [lo, hi].
double box_outflux(const StencilSystem& system, const FieldGrid& field, const GridIndex& lo,
                   const GridIndex& hi);

/// Total flux leaving the goal voxel.
double goal_outflux(const StencilSystem& system, const FieldGrid& field);

}  // namespace fieldnav
