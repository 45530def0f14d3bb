#pragma once

#include <Eigen/Core>

#include <map>
#include <vector>

#include "spot/belief.hpp"
#include "spot/grid.hpp"
#include "spot/trajectory.hpp"

namespace spot {

enum class WeightShape { Constant, Exponential };

struct UrgencyParams {
  double horizon = 2.0;  // T (s)
  double t_min = 0.1;    // lower integration cutoff (s)
  double step = 0.1;     // midpoint-rule step (s)
  double lambda_p = 1.0;
  double lambda_r = 6.0;
  WeightShape weight_shape = WeightShape::Constant;
  double decay_time = 1.0;  // T_h for the exponential shape (s)
  /// Sub-intervals for the leading steps of the time integral, where the
  /// required-velocity Jacobian grows like 1/t^3. Later steps use one sample.
  std::vector<int> grading = {8, 4, 2};

  void validate() const;
  /// Time weighting factor (without lambda) at look-ahead t.
  double weight(double t) const;
  struct Node {
    double t;
    double width;
  };
  /// Composite midpoint nodes over [lo, horizon]: steps of `step` starting at
  /// lo (the last one clipped), the first few split per `grading`.
  std::vector<Node> nodes(double lo) const;
};

struct UrgencyField {
  BeliefGrid u_p;
  std::map<int, double> u_r;  // by track id
  double t0 = 0.0;
};

struct SensorSpec {
  double half_angle = 0.759;  // rad
  double range = 5.0;         // m
};

/// Potential-obstacle urgency at point p for density m_p_value.
double urgency_potential(const Eigen::Vector2d& p, const Trajectory& traj, double m_p_value,
                         const UrgencyParams& params, const BeliefParams& belief);

/// Recognized-obstacle urgency of one track.
double urgency_recognized(const ObstacleTrack& track, const Trajectory& traj, const UrgencyParams& params,
                          const BeliefParams& belief);

UrgencyField build_urgency_field(const BeliefState& state, const Trajectory& traj, const UrgencyParams& params,
                                 const BeliefParams& belief);

/// Cell-sum integral of u_p over the region plus u_r of tracks inside it.
double region_urgency(const UrgencyField& field, const SectorRegion& region, const std::vector<ObstacleTrack>& tracks);
double region_urgency(const UrgencyField& field, const DiskRegion& region, const std::vector<ObstacleTrack>& tracks);

/// Candidate yaw k of n: wrap_angle(2 pi k / n).
double candidate_yaw(int k, int n);

/// region_urgency of the sector at every candidate yaw, bitwise equal to
/// calling region_urgency per candidate.
std::vector<double> sector_urgencies(const UrgencyField& field, const Eigen::Vector2d& pose, const SensorSpec& sensor,
                                     const std::vector<ObstacleTrack>& tracks, int n_candidates);

/// Argmax yaw over the candidates. Ties go to the smallest angular distance
/// from previous_yaw, then the smallest yaw; an all-zero field keeps
/// previous_yaw.
double select_yaw(const UrgencyField& field, const Eigen::Vector2d& pose, const SensorSpec& sensor,
                  const std::vector<ObstacleTrack>& tracks, int n_candidates, double previous_yaw);

}  // namespace spot
