#pragma once

#include <Eigen/Core>

#include <vector>

namespace spot {

/// Control points at a fixed time step. Motion between points is linear;
/// after the last point the trajectory holds still.
struct Trajectory {
  std::vector<Eigen::Vector3d> points;
  double dt_knot = 0.1;
  double t0 = 0.0;

  /// Throws ParameterError unless there are at least `min_points` finite
  /// points and dt_knot > 0.
  void validate(std::size_t min_points = 4) const;

  std::size_t size() const { return points.size(); }
  double duration() const { return points.empty() ? 0.0 : dt_knot * static_cast<double>(points.size() - 1); }
  double end_time() const { return t0 + duration(); }
  double knot_time(std::size_t i) const { return t0 + dt_knot * static_cast<double>(i); }
  Eigen::Vector2d xy(std::size_t i) const { return points[i].head<2>(); }

  /// Position at absolute time t, clamped to the first/last point outside
  /// the covered interval.
  Eigen::Vector3d position(double t) const;
  /// Velocity of the segment containing t (right-continuous at knots);
  /// zero outside the covered interval.
  Eigen::Vector3d velocity(double t) const;

  static Trajectory straight_line(const Eigen::Vector3d& from, const Eigen::Vector3d& to, std::size_t n, double dt,
                                  double t0);
};

}  // namespace spot
