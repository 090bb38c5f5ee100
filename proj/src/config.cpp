#include "fieldnav/config.hpp"

#include <fstream>

#include "fieldnav/error.hpp"

namespace fieldnav {

using nlohmann::json;

TrialConfig Config::trial_config(PlannerKind planner, std::uint64_t seed) const {
  TrialConfig t;
  t.max_planning_iterations = max_planning_iterations;
  t.advance_distance = advance_distance;
  t.endpoints = closedloop_endpoints;
  t.planner = planner;
  t.seed = seed;
  t.grid = grid;
  t.lidar = lidar;
  t.field = field;
  return t;
}

WorldGenParams Config::world_params(const std::string& preset, std::uint64_t seed) const {
  WorldGenParams p = WorldGenParams::from_preset(preset, seed);
  if (!world.empty()) {
    json j = p;
    for (const auto& [key, value] : world.items()) {
      if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown world parameter '" + key + "'");
    }
    j.merge_patch(world);
    p = j.get<WorldGenParams>();
    p.seed = seed;
  }
  return p;
}

void to_json(json& j, const WorldGenParams& p) {
  j = json{{"preset", p.preset},
           {"min_buildings", p.min_buildings},
           {"max_buildings", p.max_buildings},
           {"footprint_min", p.footprint_min},
           {"footprint_max", p.footprint_max},
           {"height_min", p.height_min},
           {"height_max", p.height_max},
           {"street_width", p.street_width},
           {"half_extent", p.half_extent},
           {"ground_height", p.ground_height},
           {"seed", p.seed}};
}

void from_json(const json& j, WorldGenParams& p) {
  j.at("preset").get_to(p.preset);
  j.at("min_buildings").get_to(p.min_buildings);
  j.at("max_buildings").get_to(p.max_buildings);
  j.at("footprint_min").get_to(p.footprint_min);
  j.at("footprint_max").get_to(p.footprint_max);
  j.at("height_min").get_to(p.height_min);
  j.at("height_max").get_to(p.height_max);
  j.at("street_width").get_to(p.street_width);
  j.at("half_extent").get_to(p.half_extent);
  j.at("ground_height").get_to(p.ground_height);
  j.at("seed").get_to(p.seed);
}

namespace {

json endpoints_json(const EndpointSampling& e) {
  return {{"separation_min", e.separation_min}, {"separation_max", e.separation_max},
          {"altitude_min", e.altitude_min},     {"altitude_max", e.altitude_max},
          {"clearance", e.clearance},           {"edge_margin", e.edge_margin},
          {"max_rejections", e.max_rejections}};
}

EndpointSampling endpoints_from(const json& j) {
  EndpointSampling e;
  j.at("separation_min").get_to(e.separation_min);
  j.at("separation_max").get_to(e.separation_max);
  j.at("altitude_min").get_to(e.altitude_min);
  j.at("altitude_max").get_to(e.altitude_max);
  j.at("clearance").get_to(e.clearance);
  j.at("edge_margin").get_to(e.edge_margin);
  j.at("max_rejections").get_to(e.max_rejections);
  return e;
}

void reject_unknown_keys(const json& patch, const json& defaults, const std::string& prefix) {
  if (!patch.is_object()) return;
  for (const auto& [key, value] : patch.items()) {
    if (!defaults.contains(key)) {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + prefix + key + "'");
    }
    if (key == "world") continue;
    if (value.is_object() && defaults.at(key).is_object()) reject_unknown_keys(value, defaults.at(key), prefix + key + ".");
  }
}

}  // namespace

json to_json(const Config& c) {
  const auto& f = c.field;
  return {
      {"grid", {{"dims", c.grid.dims}, {"resolution", c.grid.resolution}, {"dilation", c.grid.dilation}}},
      {"conductivity",
       {{"sigma_g", f.conductivity.sigma_g}, {"sigma_i", f.conductivity.sigma_i}, {"sigma_o", f.conductivity.sigma_o}}},
      {"solver",
       {{"rel_tolerance", f.solve.rel_tolerance},
        {"max_iterations", f.solve.max_iterations},
        {"preconditioner", f.solve.preconditioner == Preconditioner::Jacobi ? "jacobi" : "none"},
        {"checkpoint_interval", f.solve.checkpoint_interval}}},
      {"guidance",
       {{"smoothing_sigma", f.guidance.smoothing_sigma},
        {"kernel_truncation", f.guidance.kernel_truncation},
        {"log_transform", f.guidance.log_transform}}},
      {"ascent",
       {{"beta1", f.ascent.beta1},
        {"learning_rate", f.ascent.learning_rate},
        {"mode", f.ascent.mode == AscentMode::Momentum ? "momentum" : "adam"},
        {"adam_beta2", f.ascent.adam_beta2},
        {"adam_epsilon", f.ascent.adam_epsilon},
        {"max_steps", f.ascent.max_steps},
        {"goal_tolerance", f.ascent.goal_tolerance},
        {"stall_window", f.ascent.stall_window},
        {"stall_displacement", f.ascent.stall_displacement},
        {"stall_fallback", f.ascent.stall_fallback},
        {"capture_radius", f.ascent.capture_radius}}},
      {"rrt",
       {{"samples", c.rrt.samples},
        {"steer_step", c.rrt.steer_step},
        {"goal_bias", c.rrt.goal_bias},
        {"goal_region", c.rrt.goal_region},
        {"rewiring_gamma", c.rrt.rewiring_gamma}}},
      {"lidar",
       {{"azimuth_steps", c.lidar.azimuth_steps},
        {"elevation_steps", c.lidar.elevation_steps},
        {"min_elevation_deg", c.lidar.min_elevation_deg},
        {"max_elevation_deg", c.lidar.max_elevation_deg},
        {"max_range", c.lidar.max_range},
        {"range_noise_sigma", c.lidar.range_noise_sigma}}},
      {"trial",
       {{"max_planning_iterations", c.max_planning_iterations},
        {"advance_distance", c.advance_distance},
        {"offline_endpoints", endpoints_json(c.offline_endpoints)},
        {"closedloop_endpoints", endpoints_json(c.closedloop_endpoints)}}},
      {"world", c.world},
  };
}

Config config_from_patch(const json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  Config c;
  json j = to_json(c);
  reject_unknown_keys(patch, j, "");
  j.merge_patch(patch);
  try {
    const auto& g = j.at("grid");
    g.at("dims").get_to(c.grid.dims);
    g.at("resolution").get_to(c.grid.resolution);
    g.at("dilation").get_to(c.grid.dilation);
    auto& f = c.field;
    const auto& s = j.at("conductivity");
    s.at("sigma_g").get_to(f.conductivity.sigma_g);
    s.at("sigma_i").get_to(f.conductivity.sigma_i);
    s.at("sigma_o").get_to(f.conductivity.sigma_o);
    const auto& so = j.at("solver");
    so.at("rel_tolerance").get_to(f.solve.rel_tolerance);
    so.at("max_iterations").get_to(f.solve.max_iterations);
    const auto pc = so.at("preconditioner").get<std::string>();
    if (pc != "jacobi" && pc != "none") throw Error(ErrorCode::InvalidArgument, "preconditioner must be jacobi|none");
    f.solve.preconditioner = pc == "jacobi" ? Preconditioner::Jacobi : Preconditioner::None;
    so.at("checkpoint_interval").get_to(f.solve.checkpoint_interval);
    const auto& gu = j.at("guidance");
    gu.at("smoothing_sigma").get_to(f.guidance.smoothing_sigma);
    gu.at("kernel_truncation").get_to(f.guidance.kernel_truncation);
    gu.at("log_transform").get_to(f.guidance.log_transform);
    const auto& a = j.at("ascent");
    a.at("beta1").get_to(f.ascent.beta1);
    a.at("learning_rate").get_to(f.ascent.learning_rate);
    const auto mode = a.at("mode").get<std::string>();
    if (mode != "momentum" && mode != "adam") throw Error(ErrorCode::InvalidArgument, "ascent mode must be momentum|adam");
    f.ascent.mode = mode == "momentum" ? AscentMode::Momentum : AscentMode::Adam;
    a.at("adam_beta2").get_to(f.ascent.adam_beta2);
    a.at("adam_epsilon").get_to(f.ascent.adam_epsilon);
    a.at("max_steps").get_to(f.ascent.max_steps);
    a.at("goal_tolerance").get_to(f.ascent.goal_tolerance);
    a.at("stall_window").get_to(f.ascent.stall_window);
    a.at("stall_displacement").get_to(f.ascent.stall_displacement);
    a.at("stall_fallback").get_to(f.ascent.stall_fallback);
    a.at("capture_radius").get_to(f.ascent.capture_radius);
    const auto& r = j.at("rrt");
    r.at("samples").get_to(c.rrt.samples);
    r.at("steer_step").get_to(c.rrt.steer_step);
    r.at("goal_bias").get_to(c.rrt.goal_bias);
    r.at("goal_region").get_to(c.rrt.goal_region);
    r.at("rewiring_gamma").get_to(c.rrt.rewiring_gamma);
    const auto& l = j.at("lidar");
    l.at("azimuth_steps").get_to(c.lidar.azimuth_steps);
    l.at("elevation_steps").get_to(c.lidar.elevation_steps);
    l.at("min_elevation_deg").get_to(c.lidar.min_elevation_deg);
    l.at("max_elevation_deg").get_to(c.lidar.max_elevation_deg);
    l.at("max_range").get_to(c.lidar.max_range);
    l.at("range_noise_sigma").get_to(c.lidar.range_noise_sigma);
    const auto& t = j.at("trial");
    t.at("max_planning_iterations").get_to(c.max_planning_iterations);
    t.at("advance_distance").get_to(c.advance_distance);
    c.offline_endpoints = endpoints_from(t.at("offline_endpoints"));
    c.closedloop_endpoints = endpoints_from(t.at("closedloop_endpoints"));
    c.world = j.at("world");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad config value: ") + e.what());
  }
  c.field.ascent.validate();
  c.field.conductivity.validate();
  c.rrt.validate();
  c.lidar.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  json patch;
  try {
    in >> patch;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config file is not valid JSON: " + std::string(e.what()));
  }
  return config_from_patch(patch);
}

}  // namespace fieldnav
