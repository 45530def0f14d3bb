#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "spot/grid.hpp"

namespace spot {

/// How uncertainty grows with elapsed time. `Literal`: Sigma_vel * t for the
/// velocity prior and 1/2 Sigma_acc * t^2 for the acceleration prior.
/// `Kinematic`: exact propagation, Sigma_vel * t^2 and 1/4 Sigma_acc * t^4.
enum class VarianceLaw { Literal, Kinematic };

struct BeliefParams {
  double p_prior = 0.2;    // per-cell potential density at t = 0
  double sigma_vel = 2.0;  // m/s
  double sigma_acc = 10.0; // m/s^2
  double dt = 0.1;         // s
  VarianceLaw variance_law = VarianceLaw::Literal;
  /// Per-axis standard deviation floor for recognized-obstacle densities (m).
  double sigma_floor = 0.1;

  void validate() const;

  /// Isotropic variance of the potential-obstacle diffusion kernel for one step.
  double diffusion_variance() const;
  /// Isotropic positional variance of a track `elapsed` seconds after its
  /// last observation, floored at sigma_floor^2.
  double track_variance(double elapsed) const;
};

struct ObstacleTrack {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double t_o = 0.0;  // time since last observation (s)
  double radius = 0.3;
};

struct Detection {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double radius = 0.3;
  /// Ground-truth obstacle index; only used for evaluation, never by the belief.
  int source = -1;
};

struct BeliefState {
  BeliefGrid m_p;
  std::vector<ObstacleTrack> tracks;
  double t = 0.0;
  int next_track_id = 0;
};

/// A set of observed cells plus the point-membership rule that goes with it.
/// Built either from a bare sector or from an explicit (e.g. occlusion-aware)
/// cell list.
class ObservedRegion {
 public:
  static ObservedRegion from_sector(const GridShape& shape, const SectorRegion& sector);
  static ObservedRegion from_cells(const GridShape& shape, std::vector<std::size_t> cells);
  static ObservedRegion empty(const GridShape& shape) { return from_cells(shape, {}); }

  const std::vector<std::size_t>& cells() const { return cells_; }
  bool contains(const Eigen::Vector2d& p) const;

 private:
  GridShape shape_;
  std::vector<std::size_t> cells_;  // sorted, unique
  std::optional<SectorRegion> sector_;
};

BeliefState init_belief(const BeliefParams& params, const GridShape& shape);

/// Diffuses m_p for one step (constant exterior p_prior) and propagates the
/// tracks at constant velocity. When `static_occupancy` is given, occupied
/// cells hold no potential obstacles.
BeliefState predict(const BeliefState& state, const BeliefParams& params,
                    const OccupancyGrid* static_occupancy = nullptr);

/// Clears m_p inside the observed region and replaces every track inside it
/// with the detections. Throws ContractError for detections outside the region.
BeliefState observe(const BeliefState& state, const ObservedRegion& region, const std::vector<Detection>& detections,
                    const BeliefParams& params);
BeliefState observe(const BeliefState& state, const SectorRegion& fov, const std::vector<Detection>& detections,
                    const BeliefParams& params);

/// Recognized-obstacle map: one Gaussian per track, sampled at cell centers
/// times the cell area.
BeliefGrid render_m_r(const BeliefState& state, const BeliefParams& params);

/// One recursive update: predict, then observe.
BeliefState step(const BeliefState& state, const ObservedRegion& region, const std::vector<Detection>& detections,
                 const BeliefParams& params, const OccupancyGrid* static_occupancy = nullptr);
BeliefState step(const BeliefState& state, const SectorRegion& fov, const std::vector<Detection>& detections,
                 const BeliefParams& params, const OccupancyGrid* static_occupancy = nullptr);

}  // namespace spot
