#include "fieldnav/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "fieldnav/error.hpp"
#include "fieldnav/io.hpp"
#include "fieldnav/rng.hpp"

namespace fieldnav {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using nlohmann::json;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void set_endpoints(Path& path, const WorldPoint& start, const WorldPoint& goal) {
  path.waypoints.front() = start;
  if (path.waypoints.size() == 1) path.waypoints.push_back(goal);
  else path.waypoints.back() = goal;
  path = Path::from_waypoints(std::move(path.waypoints), path.resolution);
}

}  // namespace

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  jobs = std::clamp(jobs, 1, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double relative_l2(const FieldGrid& pred, const FieldGrid& truth, const OccupancyGrid* occ) {
  if (!(pred.spec.dims == truth.spec.dims) || pred.phi.size() != truth.phi.size())
    throw Error(ErrorCode::DimMismatch, "prediction and truth grids differ in shape");
  if (occ && !(occ->spec().dims == truth.spec.dims))
    throw Error(ErrorCode::DimMismatch, "occupancy mask differs in shape");
  double num = 0.0, den = 0.0;
  for (std::size_t v = 0; v < truth.phi.size(); ++v) {
    if (occ && occ->occupied(v)) continue;
    const double d = pred.phi[v] - truth.phi[v];
    num += d * d;
    den += truth.phi[v] * truth.phi[v];
  }
  if (den == 0.0) throw Error(ErrorCode::ZeroTruthNorm, "truth field has zero norm over the mask");
  return std::sqrt(num / den);
}

ConductivityGrid normalize_conductivity(const ConductivityGrid& sigma, double sigma_g) {
  if (!(sigma_g > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_g must be positive");
  ConductivityGrid out = sigma;
  const double scale = std::log10(sigma_g + 1.0);
  for (double& s : out.sigma) s = std::log10(s + 1.0) / scale;
  return out;
}

std::uint64_t trial_world_seed(std::uint64_t seed, const std::string& preset, int trial) {
  return derive_seed(seed, fnv1a(preset), static_cast<std::uint64_t>(trial));
}

OfflineInstance make_offline_instance(const Config& cfg, const std::string& preset, int trial, std::uint64_t seed) {
  OfflineInstance inst;
  inst.preset = preset;
  inst.trial = trial;
  inst.world_seed = trial_world_seed(seed, preset, trial);
  inst.world = generate_world(cfg.world_params(preset, inst.world_seed));
  std::tie(inst.start, inst.goal) = sample_endpoints(inst.world, cfg.offline_endpoints, inst.world_seed);
  const GridSpec spec = planning_spec(inst.world, inst.start, inst.goal, cfg.grid);
  inst.occ = planning_grid(rasterize_world(inst.world, spec), cfg.grid.dilation, inst.world.ground_height);
  const GridIndex s = world_to_grid(inst.start, spec);
  const GridIndex g = world_to_grid(inst.goal, spec);
  inst.connected = free_connected(inst.occ, s, g);
  return inst;
}

std::string offline_trial_stem(const std::string& preset, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04d", trial);
  return preset + buf;
}

std::vector<BenchAggregate> BenchReport::aggregates() const {
  std::vector<BenchAggregate> out;
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) {
    std::pair<std::string, std::string> k{r.preset, r.method};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& [preset, method] : keys) {
    BenchAggregate a;
    a.preset = preset;
    a.method = method;
    std::vector<double> len, rt, fo;
    for (const auto& r : rows) {
      if (r.preset != preset || r.method != method) continue;
      ++a.trials;
      if (!r.success) continue;
      ++a.successes;
      len.push_back(r.length_m);
      rt.push_back(r.runtime_s);
      fo.push_back(r.follow_s);
    }
    double sd_rt = 0.0;
    mean_std(len, a.mean_length_m, a.std_length_m);
    mean_std(rt, a.mean_runtime_s, sd_rt);
    a.median_runtime_s = median(rt);
    a.median_follow_s = median(fo);
    out.push_back(a);
  }
  return out;
}

json BenchReport::to_json(bool include_timing) const {
  json jr = json::array();
  for (const auto& r : rows) {
    json j = {{"preset", r.preset},     {"trial", r.trial},         {"world_seed", r.world_seed},
              {"method", r.method},     {"connected", r.connected}, {"success", r.success},
              {"failure", r.failure},   {"length_m", r.length_m},   {"length_voxels", r.length_voxels}};
    if (include_timing) {
      j["runtime_s"] = r.runtime_s;
      j["follow_s"] = r.follow_s;
    }
    jr.push_back(std::move(j));
  }
  json ja = json::array();
  for (const auto& a : aggregates()) {
    json j = {{"preset", a.preset},
              {"method", a.method},
              {"trials", a.trials},
              {"successes", a.successes},
              {"mean_length_m", a.mean_length_m},
              {"std_length_m", a.std_length_m}};
    if (include_timing) {
      j["mean_runtime_s"] = a.mean_runtime_s;
      j["median_runtime_s"] = a.median_runtime_s;
      j["median_follow_s"] = a.median_follow_s;
    }
    ja.push_back(std::move(j));
  }
  return {{"rows", jr}, {"aggregates", ja}};
}

std::string BenchReport::to_csv(bool include_timing) const {
  std::ostringstream os;
  os << "preset,trial,world_seed,method,connected,success,failure,length_m,length_voxels";
  if (include_timing) os << ",runtime_s,follow_s";
  os << '\n';
  for (const auto& r : rows) {
    os << r.preset << ',' << r.trial << ',' << r.world_seed << ',' << r.method << ',' << int(r.connected) << ','
       << int(r.success) << ',' << r.failure << ',' << fmt(r.length_m) << ',' << fmt(r.length_voxels);
    if (include_timing) os << ',' << fmt(r.runtime_s) << ',' << fmt(r.follow_s);
    os << '\n';
  }
  return os.str();
}

namespace {

BenchRow run_method(const OfflineInstance& inst, const std::string& method, const OfflineBenchConfig& cfg) {
  BenchRow row;
  row.preset = inst.preset;
  row.trial = inst.trial;
  row.world_seed = inst.world_seed;
  row.method = method;
  row.connected = inst.connected;
  const GridSpec& spec = inst.occ.spec();
  Path path;
  const auto t0 = Clock::now();
  try {
    if (method == "astar") {
      path = astar(inst.occ, world_to_grid(inst.start, spec), world_to_grid(inst.goal, spec));
      set_endpoints(path, inst.start, inst.goal);
      row.runtime_s = seconds_since(t0);
    } else if (method == "rrtstar") {
      RrtStarConfig rc = cfg.config.rrt;
      rc.rng_seed = derive_seed(inst.world_seed, fnv1a(std::string("rrtstar")), 0);
      path = rrt_star(inst.occ, inst.start, inst.goal, rc);
      row.runtime_s = seconds_since(t0);
    } else if (method == "field") {
      FieldPlanResult res = plan_field(inst.occ, inst.start, inst.goal, cfg.config.field);
      row.runtime_s = seconds_since(t0);
      row.follow_s = res.follow_s;
      path = std::move(res.path);
    } else if (method == "field-surrogate") {
      const fs::path file = cfg.surrogate_dir / (offline_trial_stem(inst.preset, inst.trial) + "_pred.mxf");
      if (cfg.surrogate_dir.empty() || !fs::exists(file))
        throw Error(ErrorCode::IoError, "missing surrogate prediction " + file.string());
      FieldGrid field = field_from(read_mxf1(file));
      if (!(field.spec == spec)) throw Error(ErrorCode::DimMismatch, "prediction grid does not match trial grid");
      field.goal = world_to_grid(inst.goal, spec);
      FieldPlanResult res = plan_on_field(field, inst.occ, inst.start, inst.goal, cfg.config.field);
      row.runtime_s = seconds_since(t0);
      row.follow_s = res.follow_s;
      path = std::move(res.path);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown method " + method);
    }
  } catch (const Error& e) {
    row.runtime_s = seconds_since(t0);
    row.failure = std::string(to_string(e.code()));
    return row;
  }
  row.success = true;
  const PathLength len = path_length(path);
  row.length_m = len.meters;
  row.length_voxels = len.voxels;
  return row;
}

}  // namespace

BenchReport run_offline_bench(const OfflineBenchConfig& cfg) {
  for (const auto& m : cfg.methods) {
    if (m != "astar" && m != "rrtstar" && m != "field" && m != "field-surrogate")
      throw Error(ErrorCode::InvalidArgument, "unknown method " + m);
  }
  if (cfg.trials_per_preset < 0) throw Error(ErrorCode::InvalidArgument, "trials must be non-negative");
  if (!cfg.export_inputs.empty()) fs::create_directories(cfg.export_inputs);

  const int per = cfg.trials_per_preset;
  const int total = per * static_cast<int>(cfg.presets.size());
  std::vector<std::vector<BenchRow>> slots(static_cast<std::size_t>(total));
  parallel_for(total, cfg.jobs, [&](int idx) {
    const std::string& preset = cfg.presets[static_cast<std::size_t>(idx / per)];
    const int trial = idx % per;
    auto& out = slots[static_cast<std::size_t>(idx)];
    OfflineInstance inst;
    try {
      inst = make_offline_instance(cfg.config, preset, trial, cfg.seed);
    } catch (const Error& e) {
      for (const auto& m : cfg.methods) {
        BenchRow row;
        row.preset = preset;
        row.trial = trial;
        row.world_seed = trial_world_seed(cfg.seed, preset, trial);
        row.method = m;
        row.failure = std::string(to_string(e.code()));
        out.push_back(row);
      }
      return;
    }
    if (!cfg.export_inputs.empty()) {
      GoalSpec gs = cfg.config.field.conductivity;
      gs.goal_index = world_to_grid(inst.goal, inst.occ.spec());
      const ConductivityGrid sigma = build_conductivity(inst.occ, gs);
      const std::string stem = offline_trial_stem(preset, trial);
      write_mxf1(cfg.export_inputs / (stem + "_input.mxf"), to_file(normalize_conductivity(sigma, gs.sigma_g)));
      write_mxf1(cfg.export_inputs / (stem + "_occupancy.mxf"), to_file(inst.occ));
    }
    for (const auto& m : cfg.methods) out.push_back(run_method(inst, m, cfg));
  });

  BenchReport report;
  for (auto& s : slots)
    for (auto& r : s) report.rows.push_back(std::move(r));
  return report;
}

std::vector<ClosedLoopRun> run_closedloop_bench(const ClosedLoopBenchConfig& cfg) {
  if (cfg.trials_per_preset < 0) throw Error(ErrorCode::InvalidArgument, "trials must be non-negative");
  const int per = cfg.trials_per_preset;
  const int total = per * static_cast<int>(cfg.presets.size());
  std::vector<ClosedLoopRun> runs(static_cast<std::size_t>(total));
  parallel_for(total, cfg.jobs, [&](int idx) {
    ClosedLoopRun& run = runs[static_cast<std::size_t>(idx)];
    run.preset = cfg.presets[static_cast<std::size_t>(idx / per)];
    run.trial = idx % per;
    const std::uint64_t seed = trial_world_seed(cfg.seed, run.preset, run.trial);
    try {
      const World world = generate_world(cfg.config.world_params(run.preset, seed));
      run.report = run_trial(world, cfg.config.trial_config(cfg.planner, seed));
    } catch (const Error& e) {
      run.report = TrialReport{};
      run.report.planner = to_string(cfg.planner);
      run.report.seed = seed;
      run.report.failure = "planner_error";
      run.report.detail = e.what();
    }
  });
  return runs;
}

json closedloop_to_json(const std::vector<ClosedLoopRun>& runs, bool include_timing) {
  json rows = json::array();
  std::vector<std::string> presets;
  for (const auto& r : runs) {
    json j = trial_to_json(r.report, include_timing);
    j["preset"] = r.preset;
    j["trial"] = r.trial;
    rows.push_back(std::move(j));
    if (std::find(presets.begin(), presets.end(), r.preset) == presets.end()) presets.push_back(r.preset);
  }
  json agg = json::array();
  for (const auto& p : presets) {
    int n = 0, ok = 0;
    std::vector<double> flown, iters;
    for (const auto& r : runs) {
      if (r.preset != p) continue;
      ++n;
      if (!r.report.success) continue;
      ++ok;
      flown.push_back(r.report.flown_path.length_meters);
      iters.push_back(r.report.planning_iterations);
    }
    double mf, sf, mi, si;
    mean_std(flown, mf, sf);
    mean_std(iters, mi, si);
    agg.push_back({{"preset", p},
                   {"trials", n},
                   {"successes", ok},
                   {"success_rate", n ? double(ok) / n : 0.0},
                   {"mean_flown_m", mf},
                   {"std_flown_m", sf},
                   {"mean_iterations", mi},
                   {"std_iterations", si}});
  }
  return {{"rows", rows}, {"aggregates", agg}};
}

std::string closedloop_to_csv(const std::vector<ClosedLoopRun>& runs) {
  std::ostringstream os;
  os << "preset,trial,seed,planner,success,flown_m,iterations,mean_plan_s\n";
  for (const auto& r : runs) {
    os << r.preset << ',' << r.trial << ',' << r.report.seed << ',' << r.report.planner << ','
       << int(r.report.success) << ',' << fmt(r.report.flown_path.length_meters) << ','
       << r.report.planning_iterations << ',' << fmt(r.report.mean_plan_s()) << '\n';
  }
  return os.str();
}

namespace {

std::string scene_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05d", id);
  return buf;
}

json export_one(const ExportConfig& cfg, int id) {
  const std::string stem = scene_stem(id);
  const fs::path meta_path = cfg.out_dir / (stem + ".json");
  const fs::path in_path = cfg.out_dir / (stem + "_input.mxf");
  const fs::path tgt_path = cfg.out_dir / (stem + "_target.mxf");
  const fs::path occ_path = cfg.out_dir / (stem + "_occupancy.mxf");
  if (fs::exists(meta_path) && fs::exists(in_path) && fs::exists(tgt_path) && fs::exists(occ_path)) {
    try {
      const auto bytes = read_bytes(meta_path);
      return json::parse(bytes.begin(), bytes.end());
    } catch (const std::exception&) {
      // fall through and regenerate
    }
  }

  const std::string& preset = cfg.presets[static_cast<std::size_t>(id) % cfg.presets.size()];
  const std::uint64_t seed = trial_world_seed(cfg.seed, "scene", id);
  json meta = {{"id", id}, {"preset", preset}, {"world_seed", seed}};
  try {
    const World world = generate_world(cfg.config.world_params(preset, seed));
    const auto [start, goal] = sample_endpoints(world, cfg.config.offline_endpoints, seed);
    const GridSpec spec = planning_spec(world, start, goal, cfg.config.grid);
    const OccupancyGrid occ = planning_grid(rasterize_world(world, spec), cfg.config.grid.dilation, world.ground_height);
    GoalSpec gs = cfg.config.field.conductivity;
    gs.goal_index = world_to_grid(goal, spec);
    const ConductivityGrid sigma = build_conductivity(occ, gs);
    FieldGrid field = solve(assemble(sigma, gs), cfg.config.field.solve);
    require_converged(field);
    write_mxf1(in_path, to_file(normalize_conductivity(sigma, gs.sigma_g)));
    write_mxf1(tgt_path, to_file(field));
    write_mxf1(occ_path, to_file(occ));
    const GridIndex gi = gs.goal_index;
    meta["start"] = {start.x, start.y, start.z};
    meta["goal"] = {goal.x, goal.y, goal.z};
    meta["goal_index"] = {gi.i, gi.j, gi.k};
    meta["input"] = in_path.filename().string();
    meta["target"] = tgt_path.filename().string();
    meta["occupancy"] = occ_path.filename().string();
    meta["solver_iterations"] = field.iterations;
    meta["residual"] = field.residual;
  } catch (const Error& e) {
    meta["error"] = std::string(to_string(e.code()));
    meta["detail"] = e.what();
    return meta;
  }
  write_text_atomic(meta_path, meta.dump(2) + "\n");
  return meta;
}

}  // namespace

json export_scenes(const ExportConfig& cfg) {
  if (cfg.count < 0) throw Error(ErrorCode::InvalidArgument, "count must be non-negative");
  if (cfg.presets.empty()) throw Error(ErrorCode::InvalidArgument, "at least one preset is required");
  if (cfg.out_dir.empty()) throw Error(ErrorCode::InvalidArgument, "output directory is required");
  fs::create_directories(cfg.out_dir);

  std::vector<json> metas(static_cast<std::size_t>(cfg.count));
  parallel_for(cfg.count, cfg.jobs, [&](int id) { metas[static_cast<std::size_t>(id)] = export_one(cfg, id); });

  json scenes = json::array(), skipped = json::array();
  for (auto& m : metas) (m.contains("error") ? skipped : scenes).push_back(std::move(m));
  const GoalSpec& gs = cfg.config.field.conductivity;
  json manifest = {
      {"format", "fieldnav-scenes"},
      {"version", 1},
      {"seed", cfg.seed},
      {"presets", cfg.presets},
      {"grid", {{"dims", cfg.config.grid.dims}, {"resolution", cfg.config.grid.resolution},
                {"dilation", cfg.config.grid.dilation}}},
      {"input_normalization", {{"formula", "log10(sigma + 1) / log10(sigma_g + 1)"}, {"sigma_g", gs.sigma_g},
                               {"sigma_i", gs.sigma_i}, {"sigma_o", gs.sigma_o}}},
      {"layout", "x slowest, z fastest"},
      {"scenes", scenes},
      {"skipped", skipped},
  };
  write_text_atomic(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace fieldnav
