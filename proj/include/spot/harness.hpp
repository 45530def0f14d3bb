#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spot/metrics.hpp"
#include "spot/sim.hpp"

namespace spot {

constexpr int kFormatVersion = 1;

// Serialization. Doubles print with round-trip precision, so parsing what
// was written gives back the same bits.

std::string trial_log_to_json(const TrialLog& log);
TrialLog trial_log_from_json(const std::string& text);
std::string metrics_to_json(const MetricsRecord& m);

/// Executed states: step, t, x, y, vx, vy, yaw, min_clearance, detections.
std::string trajectory_csv(const TrialLog& log);
/// Camera yaw per step with the detected obstacle indices.
std::string yaw_csv(const TrialLog& log);
/// Control points of every recorded plan: step, index, x, y, z.
std::string plans_csv(const TrialLog& log);
/// One row per cell: ix, iy, x, y, value.
std::string raster_csv(const BeliefGrid& grid);

struct TrajectoryRow {
  int step = 0;
  double t = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double min_clearance = 0.0;
};
std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text);

struct PlanRows {
  int step = 0;
  std::vector<Eigen::Vector3d> points;
};
std::vector<PlanRows> parse_plans_csv(const std::string& text);

struct RunConfig {
  std::string scenario_path;
  Variant variant = Variant::Spot;
  int trials = 10;
  std::uint64_t seed = 0;  // trial k runs with seed + k
  double d_f = 5.0;
  std::string out_dir = "out";
  int jobs = 1;
  /// Write the urgency raster every this many steps (0: never).
  int snapshot_stride = 0;
  void validate() const;
};

/// Runs the trials of one config in parallel, ordered by seed.
std::vector<TrialLog> run_trials(const ScenarioSpec& spec, const RunConfig& cfg);

/// Exit codes: 0 done (failed trials are counted, not fatal), 2 bad scenario
/// or arguments.
int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct GradcheckOptions {
  int instances = 100;
  std::uint64_t seed = 1;
  bool zero_weights = false;
};

struct GradcheckTerm {
  std::string name;
  double max_error = 0.0;  // over instances, relative to the FD gradient scale
  double tolerance = 0.0;
  bool pass() const { return max_error <= tolerance; }
};

struct GradcheckReport {
  std::vector<GradcheckTerm> terms;  // j_v, j_c, j_s, j_d
  int instances = 0;
  bool pass() const;
};

/// Finite-difference check of all four cost gradients on random instances.
GradcheckReport gradcheck(const GradcheckOptions& opt);
int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out);

struct BenchStage {
  std::string name;
  int repetitions = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

struct BenchOptions {
  int repetitions = 50;
  int grid_cells = 200;  // square grid side for the urgency and gradient stages
  std::string scenario_path;  // replan stage; skipped when empty
};

std::vector<BenchStage> bench(const BenchOptions& opt);
int cmd_bench(const BenchOptions& opt, const std::string& out_path, std::ostream& out);

struct SnapshotConfig {
  std::string scenario_path;
  Variant variant = Variant::Spot;
  std::uint64_t seed = 0;
  double at = 0.0;
  std::string out_dir = "snapshot";
};

/// Runs one trial up to time `at` and writes m_p, m_r and u_p rasters with
/// a JSON summary of the state.
int cmd_snapshot(const SnapshotConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace spot
