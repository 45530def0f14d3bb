#pragma once

// Brute-force reference implementations used only by tests. None of these
// call into the code path they check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "spot/grid.hpp"

namespace oracle {

inline double wrap(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline bool in_sector(const Eigen::Vector2d& apex, double yaw, double half, double range, const Eigen::Vector2d& p) {
  const double dx = p.x() - apex.x();
  const double dy = p.y() - apex.y();
  if (dx * dx + dy * dy > range * range) return false;
  if (dx == 0.0 && dy == 0.0) return true;
  if (half >= std::numbers::pi) return true;
  return std::abs(wrap(std::atan2(dy, dx) - yaw)) <= half + 1e-12;
}

/// Dense 2D convolution with a product of truncated sampled Gaussians.
inline std::vector<double> dense_blur(const std::vector<double>& v, int w, int h, double sx, double sy,
                                      double exterior) {
  const int rx = sx >= 0.5 ? static_cast<int>(std::ceil(3.0 * sx)) : 0;
  const int ry = sy >= 0.5 ? static_cast<int>(std::ceil(3.0 * sy)) : 0;
  std::vector<double> k((2 * rx + 1) * (2 * ry + 1));
  double total = 0.0;
  for (int dy = -ry; dy <= ry; ++dy)
    for (int dx = -rx; dx <= rx; ++dx) {
      double e = 0.0;
      if (rx > 0) e += dx * dx / (2.0 * sx * sx);
      if (ry > 0) e += dy * dy / (2.0 * sy * sy);
      const double val = std::exp(-e);
      k[(dy + ry) * (2 * rx + 1) + dx + rx] = val;
      total += val;
    }
  for (double& x : k) x /= total;
  std::vector<double> out(v.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -ry; dy <= ry; ++dy)
        for (int dx = -rx; dx <= rx; ++dx) {
          const int jx = x - dx, jy = y - dy;
          const double s = (jx >= 0 && jy >= 0 && jx < w && jy < h) ? v[jy * w + jx] : exterior;
          acc += k[(dy + ry) * (2 * rx + 1) + dx + rx] * s;
        }
      out[y * w + x] = acc;
    }
  return out;
}

/// Occlusion by sampling the segment every `step` meters.
inline bool sampled_line_of_sight(const spot::OccupancyGrid& occ, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                  double step) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / n);
    if (occ.occupied_at(p)) return false;
  }
  return true;
}

/// Composite midpoint rule of f over [a, b] with n intervals.
inline double midpoint(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(a + (i + 0.5) * h);
  return acc * h;
}

/// Central finite difference of `f` along one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace oracle
