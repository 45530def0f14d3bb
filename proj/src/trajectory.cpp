#include "spot/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "spot/grid.hpp"

namespace spot {

void Trajectory::validate(std::size_t min_points) const {
  if (!(dt_knot > 0.0) || !std::isfinite(dt_knot)) throw ParameterError("trajectory dt_knot must be > 0");
  if (points.size() < min_points) throw ParameterError("trajectory has too few control points");
  for (const auto& p : points)
    if (!p.allFinite()) throw ParameterError("trajectory control point is not finite");
}

namespace {

// Segment index and fraction for absolute time t; seg == -1 before the start,
// seg == n-1 past the end.
std::pair<long, double> locate(const Trajectory& tr, double t) {
  const long n = static_cast<long>(tr.points.size());
  const double u = (t - tr.t0) / tr.dt_knot;
  if (u < 0.0) return {-1, 0.0};
  if (u >= static_cast<double>(n - 1)) return {n - 1, 0.0};
  long k = static_cast<long>(std::floor(u));
  k = std::clamp<long>(k, 0, n - 2);
  return {k, u - static_cast<double>(k)};
}

}  // namespace

Eigen::Vector3d Trajectory::position(double t) const {
  const auto [k, f] = locate(*this, t);
  if (k < 0) return points.front();
  if (k >= static_cast<long>(points.size()) - 1) return points.back();
  return points[k] + f * (points[k + 1] - points[k]);
}

Eigen::Vector3d Trajectory::velocity(double t) const {
  const auto [k, f] = locate(*this, t);
  (void)f;
  if (k < 0 || k >= static_cast<long>(points.size()) - 1) return Eigen::Vector3d::Zero();
  return (points[k + 1] - points[k]) / dt_knot;
}

Trajectory Trajectory::straight_line(const Eigen::Vector3d& from, const Eigen::Vector3d& to, std::size_t n, double dt,
                                     double t0) {
  Trajectory tr;
  tr.dt_knot = dt;
  tr.t0 = t0;
  tr.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    tr.points[i] = from + a * (to - from);
  }
  return tr;
}

}  // namespace spot
