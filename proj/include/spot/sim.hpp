#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spot/belief.hpp"
#include "spot/planner.hpp"
#include "spot/scenario.hpp"

namespace spot {

struct ObstacleState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double radius = 0.3;
  double speed = 0.0;   // after per-trial jitter
  double s = 0.0;       // arc length along the waypoint path
  int direction = 1;    // +1 toward the last waypoint, -1 back
  bool active = true;
  std::optional<Trigger> trigger;  // jittered threshold; cleared once fired
};

struct SimState {
  int step = 0;
  double t = 0.0;
  Eigen::Vector2d uav = Eigen::Vector2d::Zero();
  Eigen::Vector2d uav_velocity = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  std::vector<ObstacleState> obstacles;
};

/// Initial state for one trial; speed and trigger jitter come from `trial_seed`.
SimState init_sim(const ScenarioSpec& spec, std::uint64_t trial_seed);

/// Point and unit tangent at arc length s along a polyline.
Eigen::Vector2d path_point(const std::vector<Eigen::Vector2d>& path, double s, Eigen::Vector2d* tangent = nullptr);
double path_length(const std::vector<Eigen::Vector2d>& path);

/// One time step: fire triggers on the current UAV position, move active
/// obstacles, then move the UAV to the plan's sample at t + dt (it stays put
/// without a plan).
SimState advance(const SimState& sim, const ScenarioSpec& spec, const Trajectory* plan, double dt);

/// Obstacles whose centers are inside the sector and visible past the walls.
/// Noise is added only when spec.sensor.noise_sigma > 0 and `rng` is given.
std::vector<Detection> sense(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ, double yaw,
                             std::mt19937_64* rng = nullptr);

/// Sector cells whose centers are visible from the UAV, together with the
/// cells holding the detections.
ObservedRegion observed_region(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ, double yaw,
                               const std::vector<Detection>& detections);

/// Smallest clearance between the UAV disk and any obstacle or wall cell.
double min_clearance(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ);

enum class TrialStatus { ReachedGoal, Collision, Timeout, Failed };
const char* to_string(TrialStatus s);
std::optional<TrialStatus> parse_trial_status(const std::string& s);

struct ObstacleTruth {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  bool active = false;
};

struct CostSummary {
  double total = 0.0, j_v = 0.0, j_c = 0.0, j_s = 0.0, j_d = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::string status;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  Eigen::Vector2d uav = Eigen::Vector2d::Zero();
  Eigen::Vector2d uav_velocity = Eigen::Vector2d::Zero();
  double yaw = 0.0;  // camera yaw used for sensing at this step
  std::vector<ObstacleTruth> obstacles;
  std::vector<Detection> detections;
  double min_clearance = 0.0;
  CostSummary cost;
  std::vector<Eigen::Vector3d> plan;  // control points of the plan made at this step
};

struct TrialLog {
  int format_version = 1;
  std::string scenario;
  std::string variant;
  std::uint64_t seed = 0;
  double dt = 0.1;
  double plan_dt_knot = 0.1;
  TrialStatus status = TrialStatus::Timeout;
  std::string diagnostics;
  std::vector<StepRecord> steps;
};

/// Read-only view handed to the per-step observer after planning.
struct StepView {
  const SimState& state;
  const BeliefState& belief;
  const PlanResult* plan;  // null on the terminal step
};

struct TrialOptions {
  bool record_plans = true;
  /// Stop after the step whose time reaches this value (negative: run to the end).
  double stop_at = -1.0;
  std::function<void(const StepView&)> observer;
};

/// Closed loop at the belief step dt: sense and update the belief, plan,
/// advance. Ends on the goal (0.3 m), a collision, or the scenario duration.
TrialLog run_trial(const ScenarioSpec& spec, Variant variant, std::uint64_t seed, const TrialOptions& options = {});

}  // namespace spot
