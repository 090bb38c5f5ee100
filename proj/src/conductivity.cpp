#include "fieldnav/conductivity.hpp"

#include <algorithm>
#include <cmath>

#include "fieldnav/error.hpp"

namespace fieldnav {

void GoalSpec::validate() const {
  if (!(sigma_g > sigma_i && sigma_i > sigma_o && sigma_o >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "conductivities must satisfy sigma_g > sigma_i > sigma_o >= 0");
  }
}

ConductivityGrid build_conductivity(const OccupancyGrid& occ, const GoalSpec& goal) {
  goal.validate();
  const GridSpec& spec = occ.spec();
  if (!spec.contains(goal.goal_index)) throw Error(ErrorCode::OutOfBounds, "goal outside grid");
  if (occ.occupied(goal.goal_index)) throw Error(ErrorCode::GoalOccupied, "goal voxel is occupied");

  ConductivityGrid out{spec, std::vector<double>(spec.voxel_count())};
  const GridIndex g0 = goal.goal_index;
  std::size_t idx = 0;
  for (int i = 0; i < spec.dims[0]; ++i) {
    const double dx = i - g0.i;
    for (int j = 0; j < spec.dims[1]; ++j) {
      const double dy = j - g0.j;
      for (int k = 0; k < spec.dims[2]; ++k, ++idx) {
        if (occ.occupied(idx)) {
          out.sigma[idx] = goal.sigma_o;
          continue;
        }
        const double dz = k - g0.k;
        const double d2 = dx * dx + dy * dy + dz * dz;
        out.sigma[idx] = d2 == 0.0 ? goal.sigma_g
                                   : std::min(goal.sigma_g, goal.sigma_i + goal.sigma_g / std::sqrt(d2));
      }
    }
  }
  return out;
}

}  // namespace fieldnav
