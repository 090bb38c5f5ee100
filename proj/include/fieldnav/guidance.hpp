#pragma once

#include <cstdint>
#include <vector>

#include "fieldnav/grid.hpp"
#include "fieldnav/solver.hpp"

namespace fieldnav {

struct GradientField {
  GridSpec spec;
  std::vector<Vec3> g;               ///< voxel-unit derivatives
  std::vector<std::uint8_t> free;    ///< support mask; obstacle voxels hold zero vectors
  bool smoothed = false;
  double smoothing_sigma = 0.0;

  const Vec3& at(const GridIndex& idx) const { return g[spec.flat(idx)]; }
};

struct GuidanceConfig {
  double smoothing_sigma = 5.0;    ///< voxels
  double kernel_truncation = 3.0;  ///< kernel radius = ceil(truncation * sigma)
  bool log_transform = false;
};

/// Central differences where both axis neighbors are free, one-sided next to
/// obstacles and the grid boundary, zero inside obstacles. With log_transform
/// the result is the chain-rule derivative grad(phi) / (phi + 1e-12).
GradientField compute_gradient(const FieldGrid& field, const OccupancyGrid& occ, bool log_transform = false);

/// Unit-sum 1-D Gaussian taps for offsets -R..R, R = ceil(truncation * sigma).
std::vector<double> gaussian_kernel(double sigma, double truncation);

/// Normalized convolution of each component with a separable 3-D Gaussian.
/// Obstacle and out-of-bounds voxels contribute nothing and the weights are
/// renormalized over the free in-bounds support.
GradientField gaussian_smooth(const GradientField& grad, const GuidanceConfig& cfg);

/// Trilinear interpolation at a continuous grid position in [0, dims-1]^3.
Vec3 sample(const GradientField& grad, const Vec3& p);

}  // namespace fieldnav
