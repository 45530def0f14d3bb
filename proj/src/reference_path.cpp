#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "spot/planner.hpp"

namespace spot {

ReferencePath::ReferencePath(std::vector<Eigen::Vector2d> points) : points_(std::move(points)) {
  cum_.assign(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) cum_[i] = cum_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

Eigen::Vector2d ReferencePath::at(double s) const {
  if (points_.empty()) return Eigen::Vector2d::Zero();
  if (s <= 0.0) return points_.front();
  if (s >= length()) return points_.back();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - cum_.begin()) - 1;
  const double seg = cum_[k + 1] - cum_[k];
  const double f = seg > 0.0 ? (s - cum_[k]) / seg : 0.0;
  return points_[k] + f * (points_[k + 1] - points_[k]);
}

double ReferencePath::project(const Eigen::Vector2d& p, double s_min) const {
  if (points_.size() < 2) return 0.0;
  s_min = std::clamp(s_min, 0.0, length());
  // Only look a short way ahead so a folded path cannot make progress jump.
  const double s_max = std::min(length(), s_min + 5.0);
  double best_s = s_min;
  double best_d = (at(s_min) - p).squaredNorm();
  for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
    const double a = cum_[k], b = cum_[k + 1];
    if (b < s_min || a > s_max || b <= a) continue;
    const Eigen::Vector2d d = points_[k + 1] - points_[k];
    double f = (p - points_[k]).dot(d) / d.squaredNorm();
    double s = std::clamp(a + f * (b - a), std::max(a, s_min), std::min(b, s_max));
    const double dist = (at(s) - p).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best_s = s;
    }
  }
  return best_s;
}

std::vector<Eigen::Vector2d> plan_reference(const OccupancyGrid& occ, const Eigen::Vector2d& start,
                                            const Eigen::Vector2d& goal, double inflation) {
  const GridShape& s = occ.shape();
  const int w = s.width, h = s.height;
  // Grow obstacles by the inflation radius.
  OccupancyGrid grown(s);
  const int r = static_cast<int>(std::ceil(inflation / s.resolution));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if ((dx * dx + dy * dy) * s.resolution * s.resolution <= inflation * inflation) offsets.emplace_back(dx, dy);
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix) {
      if (!occ.occupied(ix, iy)) continue;
      for (const auto& [dx, dy] : offsets)
        if (s.in_bounds(ix + dx, iy + dy)) grown.set(ix + dx, iy + dy, true);
    }

  const CellIndex a = s.nearest_cell(start), b = s.nearest_cell(goal);
  if (!s.in_bounds(a.ix, a.iy) || !s.in_bounds(b.ix, b.iy)) return {};
  const std::size_t src = s.index(a.ix, a.iy), dst = s.index(b.ix, b.iy);
  auto blocked = [&](int ix, int iy) {
    const std::size_t i = s.index(ix, iy);
    return grown.occupied(i) && i != src && i != dst;
  };

  std::vector<double> g(s.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(s.size(), s.size());
  std::vector<char> closed(s.size(), 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  auto heur = [&](std::size_t i) {
    const CellIndex c = s.cell(i);
    return std::hypot(c.ix - b.ix, c.iy - b.iy);
  };
  g[src] = 0.0;
  open.emplace(heur(src), src);
  while (!open.empty()) {
    const std::size_t cur = open.top().second;
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == dst) break;
    const CellIndex c = s.cell(cur);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const int nx = c.ix + dx, ny = c.iy + dy;
        if (!s.in_bounds(nx, ny) || blocked(nx, ny)) continue;
        // No corner cutting between two blocked cells.
        if (dx && dy && (blocked(c.ix + dx, c.iy) || blocked(c.ix, c.iy + dy))) continue;
        const std::size_t ni = s.index(nx, ny);
        const double ng = g[cur] + ((dx && dy) ? std::sqrt(2.0) : 1.0);
        if (ng < g[ni]) {
          g[ni] = ng;
          parent[ni] = cur;
          open.emplace(ng + heur(ni), ni);
        }
      }
  }
  if (!closed[dst]) return {};

  std::vector<Eigen::Vector2d> cells;
  for (std::size_t i = dst; i != s.size(); i = parent[i]) cells.push_back(s.cell_center(i));
  std::reverse(cells.begin(), cells.end());
  cells.front() = start;
  cells.back() = goal;

  // Greedy shortcutting on the grown map.
  std::vector<Eigen::Vector2d> out{cells.front()};
  std::size_t i = 0;
  while (i + 1 < cells.size()) {
    std::size_t j = cells.size() - 1;
    while (j > i + 1 && !line_of_sight(grown, cells[i], cells[j])) --j;
    out.push_back(cells[j]);
    i = j;
  }
  return out;
}

}  // namespace spot
