#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spot/sim.hpp"

namespace spot {

/// One stretch of consecutive steps with an obstacle within d_f of the UAV.
struct Encounter {
  int obstacle = 0;
  int enter_step = 0;
  double t_enter = 0.0;
  int steps_in_range = 0;
  int steps_seen = 0;
  /// First detection after the previous encounter of the same obstacle ended
  /// and no later than the entry step.
  std::optional<double> t_first_detection;
  /// t_enter - t_first_detection, or 0 when never detected before entry.
  double lead_time = 0.0;
  bool lead_flagged = false;  // never detected before entry
  double coverage = 0.0;      // percent of in-range steps with a detection
};

struct TrialMetrics {
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::Timeout;
  bool collision_free = true;
  std::vector<Encounter> encounters;
  std::optional<double> coverage;  // mean over encounters
  /// Obstacles that never came within d_f (excluded from lead and coverage).
  int excluded_obstacles = 0;
};

struct MetricsRecord {
  int format_version = 1;
  std::string scenario;
  std::string variant;
  double d_f = 5.0;
  int trials = 0;
  /// Percent of trials that ended without a collision and without a planner failure.
  double success_ratio = 0.0;
  double collision_ratio = 0.0;
  double failed_ratio = 0.0;
  int reached_goal = 0;
  int collisions = 0;
  int timeouts = 0;
  int failed = 0;
  /// Mean over all encounters; nullopt when there were none.
  std::optional<double> observation_lead_time;
  /// Encounter mean per trial, then mean over trials with encounters.
  std::optional<double> time_coverage_ratio;
  int encounters = 0;
  int encounters_never_detected = 0;
  int excluded_obstacles = 0;
  std::vector<TrialMetrics> per_trial;
};

/// Encounters of obstacle `index` in one log.
std::vector<Encounter> find_encounters(const TrialLog& log, int index, double d_f);

TrialMetrics trial_metrics(const TrialLog& log, double d_f);

/// Throws ContractError on an empty list or d_f <= 0. Logs are aggregated in
/// the order given.
MetricsRecord compute_metrics(const std::vector<TrialLog>& logs, double d_f);

/// Time of the first step that detected obstacle `index`.
std::optional<double> first_detection_time(const TrialLog& log, int index);

}  // namespace spot
