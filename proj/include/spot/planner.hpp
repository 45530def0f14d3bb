#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "spot/belief.hpp"
#include "spot/grid.hpp"
#include "spot/lbfgs.hpp"
#include "spot/trajectory.hpp"
#include "spot/urgency.hpp"

namespace spot {

struct PlannerWeights {
  double lambda_v = 0.25;
  double lambda_c = 0.5;
  double lambda_s = 1.0;
  double lambda_d = 0.03;
  double v_max = 3.0;   // m/s
  double a_max = 6.0;   // m/s^2
  double j_max = 40.0;  // m/s^3
  double d_safe = 1.0;  // m, clearance below which the collision hinge acts
  double omega_v = 1.0;
  double omega_a = 1.0;
  double omega_j = 1.0;
  double uav_radius = 0.3;
  /// Time unit for the smoothness differences. 1 scores raw control-point
  /// differences; <= 0 divides by dt_knot powers (physical m/s^2, m/s^3).
  double smoothness_time_unit = 1.0;

  void validate() const;
};

/// Value and per-control-point xy gradient of one cost term.
struct CostTerm {
  double value = 0.0;
  std::vector<Eigen::Vector2d> gradient;
};

struct CostReport {
  double total = 0.0;
  double j_v = 0.0;
  double j_c = 0.0;
  double j_s = 0.0;
  double j_d = 0.0;
  std::vector<Eigen::Vector2d> gradient;
  int iterations = 0;
  int evaluations = 0;
  double wall_time_ms = 0.0;
  LbfgsStatus status = LbfgsStatus::Converged;
};

/// J_v = -sum_i of the disk integral of the interpolated u_p around each
/// control point. The gradient is the frozen-field boundary integral with
/// `samples` arcs, raised so that no arc is longer than half a cell.
CostTerm cost_observation(const Trajectory& traj, const UrgencyField& field, double sensing_range, int samples = 64);
CostTerm cost_observation(const Trajectory& traj, const BeliefState& belief, const UrgencyParams& urgency,
                          const BeliefParams& belief_params, double sensing_range, int samples = 64);

/// Cubic clearance hinge against constant-velocity predicted tracks and
/// static occupancy.
CostTerm cost_collision(const Trajectory& traj, const std::vector<ObstacleTrack>& tracks, const OccupancyGrid* occ,
                        const PlannerWeights& w);
CostTerm cost_smoothness(const Trajectory& traj, const PlannerWeights& w);
/// Per-axis cubic hinge on velocity, acceleration and jerk above the limits.
CostTerm cost_feasibility(const Trajectory& traj, const PlannerWeights& w);

struct OptimizeOptions {
  LbfgsOptions lbfgs;
  bool pin_last = true;
  /// Further trailing points held fixed ahead of the last one (with pin_last).
  std::size_t hold_tail = 0;
  int gradient_samples = 64;
  double sensing_range = 5.0;
  /// Rebuild the urgency field from the current iterate at every evaluation
  /// (default: build once from the initial guess and hold it fixed).
  bool refresh_field = false;
  /// Use the inverse smoothness Hessian as the L-BFGS initial matrix.
  bool precondition = true;
};

/// Everything the cost needs besides the trajectory.
struct PlanningScene {
  const BeliefState* belief = nullptr;
  const OccupancyGrid* occupancy = nullptr;
  UrgencyParams urgency;
  BeliefParams belief_params;
};

/// Weighted total of the four terms for a fixed urgency field.
CostReport evaluate_cost(const Trajectory& traj, const UrgencyField* field, const PlanningScene& scene,
                         const PlannerWeights& w, const OptimizeOptions& opt);

struct OptimizeResult {
  Trajectory trajectory;
  CostReport report;
  CostReport initial;
  std::vector<double> history;
};

/// L-BFGS over the free control points. The field for J_v is built from
/// traj0 unless one is supplied.
OptimizeResult optimize(const Trajectory& traj0, const PlanningScene& scene, const PlannerWeights& w,
                        const OptimizeOptions& opt, const UrgencyField* field = nullptr);

enum class Variant { Spot, SpotStar, Baseline };

const char* to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& s);

struct PlannerConfig {
  PlannerWeights weights;
  OptimizeOptions optimize;
  UrgencyParams urgency;
  BeliefParams belief;
  SensorSpec sensor;
  int n_points = 21;
  double dt_knot = 0.1;
  double cruise_speed = 1.5;  // m/s along the reference path
  int yaw_candidates = 72;
  double altitude = 1.0;
  double reference_inflation = 0.8;  // wall growth for the A* guide path (m)

  void validate() const;
  double horizon() const { return dt_knot * (n_points - 1); }
};

/// Polyline guide from start to goal with arc-length lookup.
class ReferencePath {
 public:
  ReferencePath() = default;
  explicit ReferencePath(std::vector<Eigen::Vector2d> points);

  const std::vector<Eigen::Vector2d>& points() const { return points_; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  Eigen::Vector2d at(double s) const;
  /// Arc length of the closest point to p with arc length >= s_min.
  double project(const Eigen::Vector2d& p, double s_min) const;

 private:
  std::vector<Eigen::Vector2d> points_;
  std::vector<double> cum_;
};

/// 8-connected A* on `occ` with obstacles grown by `inflation`, followed by
/// line-of-sight shortcutting. Returns an empty path when no route exists.
std::vector<Eigen::Vector2d> plan_reference(const OccupancyGrid& occ, const Eigen::Vector2d& start,
                                            const Eigen::Vector2d& goal, double inflation);

struct PlanContext {
  const BeliefState* belief = nullptr;
  const OccupancyGrid* occupancy = nullptr;
  const ReferencePath* reference = nullptr;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double t = 0.0;
  double yaw = 0.0;
  double progress = 0.0;  // arc length already covered on the reference
  const Trajectory* previous = nullptr;
};

struct PlanResult {
  Trajectory trajectory;
  double yaw = 0.0;
  double progress = 0.0;
  CostReport report;
  bool failed = false;
  std::string diagnostics;
  UrgencyField yaw_field;  // field on the optimized trajectory (empty for the baseline)
};

/// One receding-horizon cycle: initial guess, urgency field, optimization,
/// yaw selection. Variant picks the weights and the yaw policy.
PlanResult plan_step(const PlanContext& ctx, const PlannerConfig& cfg, Variant variant);

/// Initial guess: previous plan re-timed to ctx.t, or samples along the
/// reference; first point at ctx.position, last at the local goal.
/// When the goal is closer than cruise_speed * horizon the guess arrives at
/// cruise speed and hovers; `hold_out` receives the number of hover points
/// before the last.
Trajectory initial_guess(const PlanContext& ctx, const PlannerConfig& cfg, double* progress_out = nullptr,
                         std::size_t* hold_out = nullptr);

}  // namespace spot
