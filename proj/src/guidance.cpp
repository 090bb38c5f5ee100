#include "fieldnav/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "fieldnav/error.hpp"

namespace fieldnav {

GradientField compute_gradient(const FieldGrid& field, const OccupancyGrid& occ, bool log_transform) {
  const GridSpec& spec = field.spec;
  if (spec != occ.spec()) throw Error(ErrorCode::DimMismatch, "field and occupancy grids differ");
  const std::size_t n = spec.voxel_count();
  GradientField out;
  out.spec = spec;
  out.g.assign(n, Vec3{});
  out.free.assign(n, 0);
  const auto& phi = field.phi;
  for (std::size_t v = 0; v < n; ++v) {
    if (occ.occupied(v)) continue;
    out.free[v] = 1;
    const GridIndex g = spec.unflat(v);
    Vec3 d;
    for (int a = 0; a < 3; ++a) {
      const std::size_t st = spec.stride(a);
      const bool plus = g[a] + 1 < spec.dims[a] && !occ.occupied(v + st);
      const bool minus = g[a] > 0 && !occ.occupied(v - st);
      if (plus && minus) {
        d[a] = 0.5 * (phi[v + st] - phi[v - st]);
      } else if (plus) {
        d[a] = phi[v + st] - phi[v];
      } else if (minus) {
        d[a] = phi[v] - phi[v - st];
      }
    }
    if (log_transform) d *= 1.0 / (std::max(phi[v], 0.0) + 1e-12);
    out.g[v] = d;
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, double truncation) {
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "smoothing sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(truncation * sigma));
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    w[t + radius] = std::exp(-0.5 * (t * t) / (sigma * sigma));
    sum += w[t + radius];
  }
  for (auto& x : w) x /= sum;
  return w;
}

namespace {

// Zero-padded 1-D convolution of `data` along `axis`.
void convolve_axis(std::vector<double>& data, const GridSpec& spec, int axis, const std::vector<double>& w) {
  const int n = spec.dims[axis];
  const int radius = static_cast<int>(w.size() / 2);
  const std::size_t stride = spec.stride(axis);
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  std::vector<double> line(n), result(n);
  for (int u = 0; u < spec.dims[a1]; ++u) {
    for (int s = 0; s < spec.dims[a2]; ++s) {
      GridIndex base{};
      base[a1] = u;
      base[a2] = s;
      const std::size_t start = spec.flat(base);
      bool any = false;
      for (int t = 0; t < n; ++t) {
        line[t] = data[start + t * stride];
        any = any || line[t] != 0.0;
      }
      if (!any) continue;
      for (int t = 0; t < n; ++t) {
        const int lo = std::max(0, t - radius);
        const int hi = std::min(n - 1, t + radius);
        double acc = 0.0;
        for (int q = lo; q <= hi; ++q) acc += w[q - t + radius] * line[q];
        result[t] = acc;
      }
      for (int t = 0; t < n; ++t) data[start + t * stride] = result[t];
    }
  }
}

}  // namespace

GradientField gaussian_smooth(const GradientField& grad, const GuidanceConfig& cfg) {
  if (cfg.smoothing_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "smoothing sigma must be >= 0");
  GradientField out = grad;
  out.smoothed = true;
  out.smoothing_sigma = cfg.smoothing_sigma;
  if (cfg.smoothing_sigma == 0.0) return out;

  const GridSpec& spec = grad.spec;
  const std::size_t n = spec.voxel_count();
  const auto w = gaussian_kernel(cfg.smoothing_sigma, cfg.kernel_truncation);

  std::vector<double> weight(n);
  for (std::size_t v = 0; v < n; ++v) weight[v] = grad.free[v] ? 1.0 : 0.0;
  for (int a = 0; a < 3; ++a) convolve_axis(weight, spec, a, w);

  std::vector<double> comp(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t v = 0; v < n; ++v) comp[v] = grad.free[v] ? grad.g[v][c] : 0.0;
    for (int a = 0; a < 3; ++a) convolve_axis(comp, spec, a, w);
    for (std::size_t v = 0; v < n; ++v) {
      out.g[v][c] = grad.free[v] && weight[v] > 0.0 ? comp[v] / weight[v] : 0.0;
    }
  }
  return out;
}

Vec3 sample(const GradientField& grad, const Vec3& p) {
  const GridSpec& spec = grad.spec;
  int base[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = spec.dims[a] - 1;
    if (!(p[a] >= 0.0 && p[a] <= hi)) throw Error(ErrorCode::OutOfBounds, "sample position outside grid");
    base[a] = std::min(static_cast<int>(std::floor(p[a])), spec.dims[a] - 2);
    t[a] = p[a] - base[a];
  }
  Vec3 acc;
  for (int c = 0; c < 8; ++c) {
    const int di = (c >> 2) & 1, dj = (c >> 1) & 1, dk = c & 1;
    const double wgt = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
    if (wgt == 0.0) continue;
    acc += grad.at(GridIndex{base[0] + di, base[1] + dj, base[2] + dk}) * wgt;
  }
  return acc;
}

}  // namespace fieldnav
