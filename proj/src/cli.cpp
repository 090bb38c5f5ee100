#include "fieldnav/cli.hpp"

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fieldnav/bench.hpp"
#include "fieldnav/config.hpp"
#include "fieldnav/error.hpp"
#include "fieldnav/io.hpp"
#include "fieldnav/rng.hpp"

namespace fieldnav {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Options {
  std::uint64_t seed = 0;
  std::string preset = "dense";
  std::string config;
  std::string csv;
  bool no_timing = false;
  int jobs = 1;

  // Problem selection shared by gen-world, scan, solve, plan, trial and verify.
  int trial = 0;
  std::string world_file;
  std::string scene_file;
  std::vector<double> start;
  std::vector<double> goal;

  std::string out;
  std::string occupancy_out;
  std::string conductivity_out;
  std::string gradient_out;
  bool normalized = false;
  std::vector<double> sensor;
  std::string method = "field";
  std::string field_file;
  std::string planner = "field";
  int trials = 50;
  std::vector<std::string> methods{"astar", "rrtstar", "field"};
  std::vector<std::string> presets{"dense", "sparse"};
  std::string surrogate_dir;
  std::string export_inputs;
  int count = 749;
  std::vector<std::string> positional;
  std::string occupancy_file;
};

/// Errors caused by the invocation rather than by planning.
bool is_usage_error(ErrorCode c) {
  return c == ErrorCode::InvalidArgument || c == ErrorCode::FormatError || c == ErrorCode::IoError ||
         c == ErrorCode::DimMismatch || c == ErrorCode::OutOfBounds || c == ErrorCode::ParamsInfeasible ||
         c == ErrorCode::ZeroTruthNorm;
}

WorldPoint point_of(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

WorldPoint point_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json point_json(const WorldPoint& p) { return json::array({p.x, p.y, p.z}); }

std::uint64_t world_seed_of(const Options& o) { return trial_world_seed(o.seed, o.preset, o.trial); }

World load_or_generate_world(const Options& o, const Config& cfg) {
  if (!o.world_file.empty()) {
    const auto bytes = read_bytes(o.world_file);
    json j;
    try {
      j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, o.world_file + ": " + e.what());
    }
    return world_from_json(j);
  }
  return generate_world(cfg.world_params(o.preset, world_seed_of(o)));
}

OfflineInstance resolve_instance(const Options& o, const Config& cfg) {
  OfflineInstance inst;
  if (!o.scene_file.empty()) {
    const auto bytes = read_bytes(o.scene_file);
    json meta;
    try {
      meta = json::parse(bytes.begin(), bytes.end());
      inst.preset = meta.at("preset").get<std::string>();
      inst.world_seed = meta.at("world_seed").get<std::uint64_t>();
      inst.trial = meta.at("id").get<int>();
      inst.start = point_of(meta.at("start"));
      inst.goal = point_of(meta.at("goal"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, o.scene_file + ": " + e.what());
    }
    inst.world = generate_world(cfg.world_params(inst.preset, inst.world_seed));
  } else if (o.world_file.empty() && o.start.empty() && o.goal.empty()) {
    return make_offline_instance(cfg, o.preset, o.trial, o.seed);
  } else {
    inst.preset = o.preset;
    inst.trial = o.trial;
    inst.world = load_or_generate_world(o, cfg);
    inst.world_seed = inst.world.seed;
    if (o.start.empty() != o.goal.empty())
      throw Error(ErrorCode::InvalidArgument, "--start and --goal must be given together");
    if (o.start.empty()) {
      std::tie(inst.start, inst.goal) = sample_endpoints(inst.world, cfg.offline_endpoints, inst.world.seed);
    } else {
      inst.start = point_of(o.start);
      inst.goal = point_of(o.goal);
    }
  }
  const GridSpec spec = planning_spec(inst.world, inst.start, inst.goal, cfg.grid);
  inst.occ = planning_grid(rasterize_world(inst.world, spec), cfg.grid.dilation, inst.world.ground_height);
  const GridIndex s = world_to_grid(inst.start, spec);
  const GridIndex g = world_to_grid(inst.goal, spec);
  inst.connected = free_connected(inst.occ, s, g);
  return inst;
}

json instance_json(const OfflineInstance& inst) {
  return {{"preset", inst.preset},
          {"world_seed", inst.world_seed},
          {"start", point_json(inst.start)},
          {"goal", point_json(inst.goal)},
          {"connected", inst.connected}};
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

void write_csv(const Options& o, const std::string& text) { write_text_atomic(o.csv, text); }

int cmd_gen_world(const Options& o, const Config& cfg, std::ostream& out) {
  const World world = load_or_generate_world(o, cfg);
  const json j = world_to_json(world);
  if (!o.csv.empty()) {
    std::ostringstream os;
    os << "cx,cy,cz,sx,sy,sz\n";
    for (const auto& b : world.boxes)
      os << b.center.x << ',' << b.center.y << ',' << b.center.z << ',' << b.size.x << ',' << b.size.y << ','
         << b.size.z << '\n';
    write_csv(o, os.str());
  }
  if (!o.out.empty()) {
    write_text_atomic(o.out, j.dump(2) + "\n");
    if (o.csv.empty()) emit(out, {{"file", o.out}, {"seed", world.seed}, {"boxes", world.boxes.size()}});
  } else if (o.csv.empty()) {
    emit(out, j);
  }
  return 0;
}

int cmd_scan(const Options& o, const Config& cfg, std::ostream& out) {
  const World world = load_or_generate_world(o, cfg);
  WorldPoint sensor;
  if (!o.sensor.empty()) sensor = point_of(o.sensor);
  else sensor = sample_endpoints(world, cfg.closedloop_endpoints, world.seed).first;
  const std::vector<WorldPoint> pts = scan(world, sensor, cfg.lidar);
  const auto bytes = encode_points(pts);
  if (!o.out.empty()) write_bytes_atomic(o.out, bytes);
  if (!o.csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "x_m,y_m,z_m\n";
    for (const auto& p : pts) os << p.x << ',' << p.y << ',' << p.z << '\n';
    write_csv(o, os.str());
    return 0;
  }
  emit(out, {{"sensor", point_json(sensor)},
             {"rays", cfg.lidar.ray_count()},
             {"returns", pts.size()},
             {"fnv1a", fnv1a(bytes)}});
  return 0;
}

int cmd_solve(const Options& o, const Config& cfg, std::ostream& out) {
  const OfflineInstance inst = resolve_instance(o, cfg);
  GoalSpec gs = cfg.field.conductivity;
  gs.goal_index = world_to_grid(inst.goal, inst.occ.spec());
  const auto t0 = Clock::now();
  const ConductivityGrid sigma = build_conductivity(inst.occ, gs);
  const StencilSystem sys = assemble(sigma, gs);
  const FieldGrid field = solve(sys, cfg.field.solve);
  const double solve_s = std::chrono::duration<double>(Clock::now() - t0).count();

  if (!o.out.empty()) write_mxf1(o.out, to_file(field));
  if (!o.occupancy_out.empty()) write_mxf1(o.occupancy_out, to_file(inst.occ));
  if (!o.conductivity_out.empty())
    write_mxf1(o.conductivity_out, to_file(o.normalized ? normalize_conductivity(sigma, gs.sigma_g) : sigma));
  if (!o.gradient_out.empty()) {
    const GradientField grad =
        gaussian_smooth(compute_gradient(field, inst.occ, cfg.field.guidance.log_transform), cfg.field.guidance);
    write_mxf1(o.gradient_out, to_file(grad));
  }
  const auto violations = verify_max_principle(field, inst.occ, gs);
  json j = instance_json(inst);
  j["goal_index"] = {gs.goal_index.i, gs.goal_index.j, gs.goal_index.k};
  j["unknowns"] = sys.unknown_count;
  j["converged"] = field.converged;
  j["iterations"] = field.iterations;
  j["residual"] = field.residual;
  j["max_principle_violations"] = violations.size();
  if (!o.no_timing) j["solve_s"] = solve_s;
  if (!o.csv.empty()) {
    std::ostringstream os;
    os << "converged,iterations,residual,violations\n"
       << int(field.converged) << ',' << field.iterations << ',' << field.residual << ',' << violations.size() << '\n';
    write_csv(o, os.str());
  } else {
    emit(out, j);
  }
  return field.converged ? 0 : 1;
}

int cmd_plan(const Options& o, const Config& cfg, std::ostream& out) {
  const OfflineInstance inst = resolve_instance(o, cfg);
  json j = instance_json(inst);
  j["method"] = o.method;

  const GridSpec& spec = inst.occ.spec();
  Path path;
  const auto t0 = Clock::now();
  std::optional<FieldPlanResult> field_res;
  try {
    if (o.method == "astar") {
      path = astar(inst.occ, world_to_grid(inst.start, spec), world_to_grid(inst.goal, spec));
      path.waypoints.front() = inst.start;
      if (path.waypoints.size() == 1) path.waypoints.push_back(inst.goal);
      else path.waypoints.back() = inst.goal;
      path = Path::from_waypoints(std::move(path.waypoints), path.resolution);
    } else if (o.method == "rrtstar") {
      RrtStarConfig rc = cfg.rrt;
      rc.rng_seed = derive_seed(inst.world_seed, fnv1a(std::string("rrtstar")), 0);
      path = rrt_star(inst.occ, inst.start, inst.goal, rc);
    } else if (o.method == "field") {
      field_res = plan_field(inst.occ, inst.start, inst.goal, cfg.field);
    } else if (o.method == "field-surrogate") {
      if (o.field_file.empty()) throw Error(ErrorCode::InvalidArgument, "field-surrogate requires --field");
      FieldGrid field = field_from(read_mxf1(o.field_file));
      if (!(field.spec == spec)) throw Error(ErrorCode::DimMismatch, "predicted field grid does not match the problem grid");
      field.goal = world_to_grid(inst.goal, spec);
      field_res = plan_on_field(field, inst.occ, inst.start, inst.goal, cfg.field);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown method '" + o.method + "'");
    }
  } catch (const Error& e) {
    if (is_usage_error(e.code())) throw;
    j["success"] = false;
    j["error"] = std::string(to_string(e.code()));
    j["detail"] = e.what();
    emit(out, j);
    return 1;
  }
  const double runtime_s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (field_res) path = field_res->path;

  j["success"] = true;
  j["length_m"] = path.length_meters;
  j["length_voxels"] = path.length_voxels;
  if (!o.no_timing) {
    j["runtime_s"] = runtime_s;
    if (field_res) {
      j["solve_s"] = field_res->solve_s;
      j["guide_s"] = field_res->guide_s;
      j["follow_s"] = field_res->follow_s;
    }
  }
  if (field_res) {
    j["ascent_steps"] = field_res->ascent.steps;
    j["truncations"] = field_res->ascent.truncations;
    j["fallback_step"] = field_res->ascent.fallback_step;
    j["climbed"] = field_res->ascent.climbed;
  }
  j["path"] = path_to_json(path);
  if (!o.out.empty()) write_text_atomic(o.out, path_to_csv(path, false));
  if (!o.csv.empty()) write_csv(o, path_to_csv(path));
  else emit(out, j);
  return 0;
}

int cmd_trial(const Options& o, const Config& cfg, std::ostream& out) {
  const World world = load_or_generate_world(o, cfg);
  const PlannerKind kind = planner_from_string(o.planner);
  const TrialConfig tc = cfg.trial_config(kind, world.seed);
  TrialReport report;
  if (o.start.empty() != o.goal.empty())
    throw Error(ErrorCode::InvalidArgument, "--start and --goal must be given together");
  if (o.start.empty()) report = run_trial(world, tc);
  else report = run_trial(world, tc, point_of(o.start), point_of(o.goal));
  if (!o.csv.empty()) write_csv(o, path_to_csv(report.flown_path));
  else emit(out, trial_to_json(report, !o.no_timing));
  return report.success ? 0 : 1;
}

int cmd_bench_offline(const Options& o, const Config& cfg, std::ostream& out) {
  OfflineBenchConfig bc;
  bc.presets = o.presets;
  bc.trials_per_preset = o.trials;
  bc.methods = o.methods;
  bc.seed = o.seed;
  bc.config = cfg;
  bc.surrogate_dir = o.surrogate_dir;
  bc.export_inputs = o.export_inputs;
  bc.jobs = o.jobs;
  const BenchReport report = run_offline_bench(bc);
  if (!o.csv.empty()) write_csv(o, report.to_csv(!o.no_timing));
  else emit(out, report.to_json(!o.no_timing));
  return 0;
}

int cmd_bench_closedloop(const Options& o, const Config& cfg, std::ostream& out) {
  ClosedLoopBenchConfig bc;
  bc.presets = o.presets;
  bc.trials_per_preset = o.trials;
  bc.planner = planner_from_string(o.planner);
  bc.seed = o.seed;
  bc.config = cfg;
  bc.jobs = o.jobs;
  const auto runs = run_closedloop_bench(bc);
  if (!o.csv.empty()) write_csv(o, closedloop_to_csv(runs));
  else emit(out, closedloop_to_json(runs, !o.no_timing));
  return 0;
}

int cmd_export_scenes(const Options& o, const Config& cfg, std::ostream& out) {
  if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "export-scenes requires --out <dir>");
  ExportConfig ec;
  ec.count = o.count;
  ec.presets = o.presets;
  ec.seed = o.seed;
  ec.out_dir = o.out;
  ec.config = cfg;
  ec.jobs = o.jobs;
  const json manifest = export_scenes(ec);
  emit(out, {{"manifest", (fs::path(o.out) / "manifest.json").string()},
             {"scenes", manifest.at("scenes").size()},
             {"skipped", manifest.at("skipped").size()}});
  return 0;
}

int cmd_eval_field(const Options& o, std::ostream& out) {
  if (o.positional.size() != 2) throw Error(ErrorCode::InvalidArgument, "eval-field expects <pred> <truth>");
  const FieldGrid pred = field_from(read_mxf1(o.positional[0]));
  const FieldGrid truth = field_from(read_mxf1(o.positional[1]));
  std::optional<OccupancyGrid> occ;
  if (!o.occupancy_file.empty()) occ = occupancy_from(read_mxf1(o.occupancy_file));
  const double l2 = relative_l2(pred, truth, occ ? &*occ : nullptr);
  if (!o.csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "pred,truth,relative_l2\n" << o.positional[0] << ',' << o.positional[1] << ',' << l2 << '\n';
    write_csv(o, os.str());
  } else {
    emit(out, {{"pred", o.positional[0]}, {"truth", o.positional[1]}, {"masked", occ.has_value()},
               {"relative_l2", l2}});
  }
  return 0;
}

int cmd_verify(const Options& o, const Config& cfg, std::ostream& out) {
  FieldGrid field;
  OccupancyGrid occ;
  json j;
  if (!o.positional.empty()) {
    if (o.positional.size() != 2) throw Error(ErrorCode::InvalidArgument, "verify expects <field> <occupancy>");
    field = field_from(read_mxf1(o.positional[0]));
    occ = occupancy_from(read_mxf1(o.positional[1]));
    if (!(field.spec == occ.spec())) throw Error(ErrorCode::DimMismatch, "field and occupancy grids differ");
    j["field"] = o.positional[0];
    field.converged = true;
  } else {
    const OfflineInstance inst = resolve_instance(o, cfg);
    occ = inst.occ;
    GoalSpec gs = cfg.field.conductivity;
    gs.goal_index = world_to_grid(inst.goal, occ.spec());
    field = solve(assemble(build_conductivity(occ, gs), gs), cfg.field.solve);
    j = instance_json(inst);
    j["iterations"] = field.iterations;
    j["residual"] = field.residual;
  }
  GoalSpec gs = cfg.field.conductivity;
  gs.goal_index = field.goal;
  const auto violations = verify_max_principle(field, occ, gs);
  j["converged"] = field.converged;
  j["violations"] = violations.size();
  json list = json::array();
  for (std::size_t i = 0; i < violations.size() && i < 20; ++i)
    list.push_back({violations[i].i, violations[i].j, violations[i].k});
  j["first_violations"] = list;
  if (!o.csv.empty()) {
    std::ostringstream os;
    os << "converged,violations\n" << int(field.converged) << ',' << violations.size() << '\n';
    write_csv(o, os.str());
  } else {
    emit(out, j);
  }
  return violations.empty() && field.converged ? 0 : 1;
}

void add_problem_options(CLI::App* sub, Options& o, bool endpoints) {
  sub->add_option("--trial", o.trial, "Trial index mixed into the world seed");
  sub->add_option("--world", o.world_file, "World JSON written by gen-world");
  if (!endpoints) return;
  sub->add_option("--scene", o.scene_file, "Scene metadata written by export-scenes");
  sub->add_option("--start", o.start, "Start point x,y,z in meters")->delimiter(',')->expected(3);
  sub->add_option("--goal", o.goal, "Goal point x,y,z in meters")->delimiter(',')->expected(3);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Conductivity-field path planning toolkit", "fieldnav"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--preset", o.preset, "World preset")->check(CLI::IsMember({"dense", "sparse"}))->capture_default_str();
  app.add_option("--config", o.config, "JSON file patching the default configuration");
  app.add_option("--csv", o.csv, "Write the report as CSV to this path instead of JSON on stdout");
  app.add_flag("--no-timing", o.no_timing, "Omit wall-clock fields from JSON reports");
  app.add_option("--jobs", o.jobs, "Worker threads for batch commands")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic city world");
  add_problem_options(gen, o, false);
  gen->add_option("--out", o.out, "Write the world JSON here");

  auto* scn = app.add_subcommand("scan", "Cast one LiDAR scan");
  add_problem_options(scn, o, false);
  scn->add_option("--sensor", o.sensor, "Sensor position x,y,z")->delimiter(',')->expected(3);
  scn->add_option("--out", o.out, "Write returns as a binary point file");

  auto* sol = app.add_subcommand("solve", "Solve the conduction field on the full-knowledge grid");
  add_problem_options(sol, o, true);
  sol->add_option("--out", o.out, "Field MXF1 output");
  sol->add_option("--occupancy-out", o.occupancy_out, "Occupancy MXF1 output");
  sol->add_option("--conductivity-out", o.conductivity_out, "Conductivity MXF1 output");
  sol->add_flag("--normalized", o.normalized, "Write log-normalized conductivity");
  sol->add_option("--gradient-out", o.gradient_out, "Smoothed gradient MXF1 output");

  auto* pln = app.add_subcommand("plan", "Plan one path with full knowledge of the world");
  add_problem_options(pln, o, true);
  pln->add_option("--method", o.method, "Planner")
      ->check(CLI::IsMember({"astar", "rrtstar", "field", "field-surrogate"}))
      ->capture_default_str();
  pln->add_option("--field", o.field_file, "Predicted field MXF1 for field-surrogate");
  pln->add_option("--out", o.out, "Write the full waypoint trace as CSV");

  auto* tri = app.add_subcommand("trial", "Run one closed-loop trial");
  add_problem_options(tri, o, true);
  tri->add_option("--planner", o.planner, "Planner")->check(CLI::IsMember({"field", "astar"}))->capture_default_str();

  auto* bof = app.add_subcommand("bench-offline", "Single-shot path quality benchmark");
  bof->add_option("--trials", o.trials, "Trials per preset")->check(CLI::NonNegativeNumber)->capture_default_str();
  bof->add_option("--methods", o.methods, "Methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"astar", "rrtstar", "field", "field-surrogate"}));
  bof->add_option("--presets", o.presets, "Presets")->delimiter(',')->check(CLI::IsMember({"dense", "sparse"}));
  bof->add_option("--surrogate-dir", o.surrogate_dir, "Directory of <preset>_<trial>_pred.mxf predictions");
  bof->add_option("--export-inputs", o.export_inputs, "Write each trial's normalized conductivity here");

  auto* bcl = app.add_subcommand("bench-closedloop", "Closed-loop success benchmark");
  bcl->add_option("--trials", o.trials, "Trials per preset")->check(CLI::NonNegativeNumber)->capture_default_str();
  bcl->add_option("--planner", o.planner, "Planner")->check(CLI::IsMember({"field", "astar"}))->capture_default_str();
  bcl->add_option("--presets", o.presets, "Presets")->delimiter(',')->check(CLI::IsMember({"dense", "sparse"}));

  auto* exs = app.add_subcommand("export-scenes", "Write conductivity/field training pairs");
  exs->add_option("--count", o.count, "Number of scenes")->check(CLI::NonNegativeNumber)->capture_default_str();
  exs->add_option("--presets", o.presets, "Presets")->delimiter(',')->check(CLI::IsMember({"dense", "sparse"}));
  exs->add_option("--out", o.out, "Output directory")->required();

  auto* evf = app.add_subcommand("eval-field", "Relative L2 error of a predicted field");
  evf->add_option("files", o.positional, "<pred.mxf> <truth.mxf>")->expected(2)->required();
  evf->add_option("--occupancy", o.occupancy_file, "Restrict to free voxels of this occupancy MXF1");

  auto* ver = app.add_subcommand("verify", "Check a field for interior local maxima");
  add_problem_options(ver, o, true);
  ver->add_option("files", o.positional, "<field.mxf> <occupancy.mxf>")->expected(0, 2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const Config cfg = o.config.empty() ? Config{} : load_config(o.config);
    if (*gen) return cmd_gen_world(o, cfg, out);
    if (*scn) return cmd_scan(o, cfg, out);
    if (*sol) return cmd_solve(o, cfg, out);
    if (*pln) return cmd_plan(o, cfg, out);
    if (*tri) return cmd_trial(o, cfg, out);
    if (*bof) return cmd_bench_offline(o, cfg, out);
    if (*bcl) return cmd_bench_closedloop(o, cfg, out);
    if (*exs) return cmd_export_scenes(o, cfg, out);
    if (*evf) return cmd_eval_field(o, out);
    if (*ver) return cmd_verify(o, cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace fieldnav
