#pragma once

#include <string>

#include <json.hpp>

#include "fieldnav/closedloop.hpp"
#include "fieldnav/pipeline.hpp"

namespace fieldnav {

/// Every tunable default in one place; `--config` files patch this tree.
struct Config {
  GridConfig grid;
  FieldPlanConfig field;
  RrtStarConfig rrt;
  LidarSpec lidar;
  int max_planning_iterations = 100;
  double advance_distance = 10.0;
  EndpointSampling offline_endpoints = EndpointSampling::offline();
  EndpointSampling closedloop_endpoints = EndpointSampling::closed_loop();
  /// Patch applied on top of the preset's WorldGenParams.
  nlohmann::json world = nlohmann::json::object();

  TrialConfig trial_config(PlannerKind planner, std::uint64_t seed) const;
  WorldGenParams world_params(const std::string& preset, std::uint64_t seed) const;
};

nlohmann::json to_json(const Config& cfg);
/// Applies a JSON merge patch to the defaults. Keys that do not exist in the
/// default tree are rejected with InvalidArgument.
Config config_from_patch(const nlohmann::json& patch);
Config load_config(const std::string& path);

void to_json(nlohmann::json& j, const WorldGenParams& p);
void from_json(const nlohmann::json& j, WorldGenParams& p);

}  // namespace fieldnav
