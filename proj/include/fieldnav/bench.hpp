#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldnav/closedloop.hpp"
#include "fieldnav/config.hpp"
#include "fieldnav/guidance.hpp"
#include "fieldnav/solver.hpp"

namespace fieldnav {

/// ||pred - truth|| / ||truth|| over the free voxels of `occ` (all voxels if null).
double relative_l2(const FieldGrid& pred, const FieldGrid& truth, const OccupancyGrid* occ = nullptr);

/// log10(sigma + 1) / log10(sigma_g + 1), the surrogate's input scaling.
ConductivityGrid normalize_conductivity(const ConductivityGrid& sigma, double sigma_g);

/// One offline problem: a world, an endpoint pair and the full-knowledge
/// planning grid shared by every method.
struct OfflineInstance {
  std::string preset;
  int trial = 0;
  std::uint64_t world_seed = 0;
  World world;
  WorldPoint start;
  WorldPoint goal;
  OccupancyGrid occ;
  bool connected = false;
};

std::uint64_t trial_world_seed(std::uint64_t seed, const std::string& preset, int trial);
OfflineInstance make_offline_instance(const Config& cfg, const std::string& preset, int trial, std::uint64_t seed);

struct BenchRow {
  std::string preset;
  int trial = 0;
  std::uint64_t world_seed = 0;
  std::string method;
  bool connected = false;
  bool success = false;
  std::string failure;
  double length_m = 0.0;
  double length_voxels = 0.0;
  double runtime_s = 0.0;  ///< whole planning call
  double follow_s = 0.0;   ///< field methods: ascent only, given the field
};

struct BenchAggregate {
  std::string preset;
  std::string method;
  int trials = 0;
  int successes = 0;
  double mean_length_m = 0.0;
  double std_length_m = 0.0;
  double mean_runtime_s = 0.0;
  double median_runtime_s = 0.0;
  double median_follow_s = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  /// Mean and sample standard deviation over successful rows, per (preset, method).
  std::vector<BenchAggregate> aggregates() const;
  nlohmann::json to_json(bool include_timing = true) const;
  std::string to_csv(bool include_timing = true) const;
};

struct OfflineBenchConfig {
  std::vector<std::string> presets{"dense", "sparse"};
  int trials_per_preset = 50;
  std::vector<std::string> methods{"astar", "rrtstar", "field"};
  std::uint64_t seed = 0;
  Config config;
  std::filesystem::path surrogate_dir;  ///< predicted fields for field-surrogate
  std::filesystem::path export_inputs;  ///< when set, write each trial's normalized conductivity
  int jobs = 1;
};

/// File name used for a trial's surrogate input and prediction.
std::string offline_trial_stem(const std::string& preset, int trial);

BenchReport run_offline_bench(const OfflineBenchConfig& cfg);

struct ClosedLoopBenchConfig {
  std::vector<std::string> presets{"dense", "sparse"};
  int trials_per_preset = 50;
  PlannerKind planner = PlannerKind::Field;
  std::uint64_t seed = 0;
  Config config;
  int jobs = 1;
};

struct ClosedLoopRun {
  std::string preset;
  int trial = 0;
  TrialReport report;
};

std::vector<ClosedLoopRun> run_closedloop_bench(const ClosedLoopBenchConfig& cfg);
nlohmann::json closedloop_to_json(const std::vector<ClosedLoopRun>& runs, bool include_timing = true);
/// Columns: preset,trial,seed,planner,success,flown_m,iterations,mean_plan_s.
std::string closedloop_to_csv(const std::vector<ClosedLoopRun>& runs);

struct ExportConfig {
  int count = 749;
  std::vector<std::string> presets{"dense", "sparse"};
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  Config config;
  int jobs = 1;
};

/// Writes scene_NNNNN_{input,target,occupancy}.mxf plus per-scene metadata and
/// manifest.json. Scenes whose files already exist are reused.
nlohmann::json export_scenes(const ExportConfig& cfg);

/// Runs fn(i) for i in [0, n) on `jobs` threads; results must be stored by index.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace fieldnav
