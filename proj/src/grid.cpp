#include "fieldnav/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <queue>
#include <string>

#include "fieldnav/error.hpp"

namespace fieldnav {

GridSpec GridSpec::centered(const Vec3& center, std::array<int, 3> dims, double resolution) {
  GridSpec spec;
  spec.dims = dims;
  spec.resolution = resolution;
  for (int a = 0; a < 3; ++a) {
    spec.origin[a] = center[a] - resolution * static_cast<double>(dims[a] - 1) / 2.0;
  }
  spec.validate();
  return spec;
}

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 3) {
      throw Error(ErrorCode::InvalidArgument,
                  "grid dims must be >= 3 on every axis, got " + std::to_string(dims[a]));
    }
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
}

Vec3 GridSpec::center() const {
  Vec3 c;
  for (int a = 0; a < 3; ++a) c[a] = origin[a] + resolution * static_cast<double>(dims[a] - 1) / 2.0;
  return c;
}

GridIndex nearest_voxel(const Vec3& c) {
  return {static_cast<int>(std::floor(c.x + 0.5)), static_cast<int>(std::floor(c.y + 0.5)),
          static_cast<int>(std::floor(c.z + 0.5))};
}

GridIndex world_to_grid(const WorldPoint& p, const GridSpec& spec) {
  const GridIndex g = nearest_voxel(spec.to_continuous(p));
  if (!spec.contains(g)) {
    throw Error(ErrorCode::OutOfBounds, "world point (" + std::to_string(p.x) + ", " +
                                            std::to_string(p.y) + ", " + std::to_string(p.z) +
                                            ") lies outside the grid");
  }
  return g;
}

WorldPoint grid_to_world(const GridIndex& g, const GridSpec& spec) {
  return spec.from_continuous(to_vec(g));
}

OccupancyGrid::OccupancyGrid(const GridSpec& spec) : spec_(spec), cells_(spec.voxel_count(), 0) {
  spec_.validate();
}

OccupancyGrid::OccupancyGrid(const GridSpec& spec, std::vector<std::uint8_t> cells)
    : spec_(spec), cells_(std::move(cells)) {
  spec_.validate();
  if (cells_.size() != spec_.voxel_count()) {
    throw Error(ErrorCode::DimMismatch, "occupancy storage length does not match dims");
  }
  for (auto& c : cells_) c = c ? 1 : 0;
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto c : cells_) n += c;
  return n;
}

OccupancyGrid voxelize(std::span<const WorldPoint> points, const GridSpec& spec) {
  OccupancyGrid grid(spec);
  for (const auto& p : points) {
    const GridIndex g = nearest_voxel(spec.to_continuous(p));
    if (spec.contains(g)) grid.set(g, true);
  }
  return grid;
}

OccupancyGrid dilate(const OccupancyGrid& grid, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
  if (radius == 0) return grid;
  const GridSpec& spec = grid.spec();
  std::vector<std::uint8_t> cur(grid.cells().begin(), grid.cells().end());
  std::vector<std::uint8_t> next(cur.size());
  std::vector<int> prefix;

  // A cube is the product of three intervals, so three 1-D max filters suffice.
  for (int axis = 0; axis < 3; ++axis) {
    const int n = spec.dims[axis];
    const std::size_t stride = spec.stride(axis);
    prefix.assign(n + 1, 0);
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    for (int u = 0; u < spec.dims[a1]; ++u) {
      for (int w = 0; w < spec.dims[a2]; ++w) {
        GridIndex base{};
        base[a1] = u;
        base[a2] = w;
        const std::size_t start = spec.flat(base);
        for (int t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + cur[start + t * stride];
        for (int t = 0; t < n; ++t) {
          const int lo = std::max(0, t - radius);
          const int hi = std::min(n - 1, t + radius);
          next[start + t * stride] = (prefix[hi + 1] - prefix[lo]) > 0 ? 1 : 0;
        }
      }
    }
    cur.swap(next);
  }
  return OccupancyGrid(spec, std::move(cur));
}

void mark_floor(OccupancyGrid& grid, double ground_height) {
  const GridSpec& spec = grid.spec();
  for (int k = 0; k < spec.dims[2]; ++k) {
    const double z = spec.origin.z + spec.resolution * k;
    if (z >= ground_height) break;
    for (int i = 0; i < spec.dims[0]; ++i) {
      for (int j = 0; j < spec.dims[1]; ++j) grid.set(GridIndex{i, j, k}, true);
    }
  }
}

ComponentMask free_component(const OccupancyGrid& grid, const GridIndex& seed) {
  const GridSpec& spec = grid.spec();
  if (!spec.contains(seed)) throw Error(ErrorCode::OutOfBounds, "flood-fill seed outside grid");
  if (grid.occupied(seed)) throw Error(ErrorCode::SeedOccupied, "flood-fill seed is occupied");

  ComponentMask mask{spec, std::vector<std::uint8_t>(spec.voxel_count(), 0), 0};
  std::vector<std::size_t> stack;
  const std::size_t s = spec.flat(seed);
  mask.member[s] = 1;
  stack.push_back(s);
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    ++mask.size;
    for_each_neighbor6(spec, spec.unflat(cur), [&](const GridIndex& n) {
      const std::size_t f = spec.flat(n);
      if (!mask.member[f] && !grid.occupied(f)) {
        mask.member[f] = 1;
        stack.push_back(f);
      }
    });
  }
  return mask;
}

bool free_connected(const OccupancyGrid& grid, const GridIndex& a, const GridIndex& b) {
  const GridSpec& spec = grid.spec();
  if (!spec.contains(a) || !spec.contains(b)) throw Error(ErrorCode::OutOfBounds, "connectivity query outside grid");
  if (grid.occupied(a) || grid.occupied(b)) return false;
  if (a == b) return true;

  auto l1 = [&](const GridIndex& g) { return std::abs(g.i - b.i) + std::abs(g.j - b.j) + std::abs(g.k - b.k); };
  using Item = std::pair<int, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::vector<std::uint8_t> seen(spec.voxel_count(), 0);
  const std::size_t target = spec.flat(b);
  seen[spec.flat(a)] = 1;
  open.push({l1(a), spec.flat(a)});
  while (!open.empty()) {
    const std::size_t cur = open.top().second;
    open.pop();
    bool found = false;
    for_each_neighbor6(spec, spec.unflat(cur), [&](const GridIndex& n) {
      const std::size_t f = spec.flat(n);
      if (seen[f] || grid.occupied(f)) return;
      seen[f] = 1;
      found = found || f == target;
      open.push({l1(n), f});
    });
    if (found) return true;
  }
  return false;
}

}  // namespace fieldnav
