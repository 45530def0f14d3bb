#include "spot/grid.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace spot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleEps = 1e-12;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

struct CellRange {
  int lo = 0;
  int hi = -1;
};

CellRange axis_range(double center, double radius, double origin, double res, int n) {
  CellRange r;
  r.lo = std::max(0, static_cast<int>(std::floor((center - radius - origin) / res)));
  r.hi = std::min(n - 1, static_cast<int>(std::ceil((center + radius - origin) / res)));
  return r;
}

}  // namespace

void GridShape::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw ParameterError("grid resolution must be > 0");
  if (width < 1 || height < 1) throw ParameterError("grid width and height must be >= 1");
  if (!origin.allFinite()) throw ParameterError("grid origin must be finite");
}

CellIndex GridShape::nearest_cell(const Eigen::Vector2d& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / resolution + 0.5)),
          static_cast<int>(std::floor((p.y() - origin.y()) / resolution + 0.5))};
}

std::optional<CellIndex> GridShape::cell_of(const Eigen::Vector2d& p) const {
  const CellIndex c = nearest_cell(p);
  if (!in_bounds(c.ix, c.iy)) return std::nullopt;
  return c;
}

BeliefGrid::BeliefGrid(const GridShape& shape, double fill) : shape_(shape) {
  shape_.validate();
  values_.assign(shape_.size(), fill);
}

double BeliefGrid::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double BeliefGrid::max() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, v);
  return m;
}

void BeliefGrid::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

OccupancyGrid::OccupancyGrid(const GridShape& shape) : shape_(shape) {
  shape_.validate();
  cells_.assign(shape_.size(), 0);
}

bool OccupancyGrid::occupied_at(const Eigen::Vector2d& p) const {
  const auto c = shape_.cell_of(p);
  return c && occupied(c->ix, c->iy);
}

void OccupancyGrid::set(int ix, int iy, bool value) {
  if (!shape_.in_bounds(ix, iy)) throw ContractError("occupancy cell out of bounds");
  cells_[shape_.index(ix, iy)] = value ? 1 : 0;
}

void OccupancyGrid::fill_box(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
  const double res = shape_.resolution;
  const int x0 = std::max(0, static_cast<int>(std::ceil((lo.x() - shape_.origin.x()) / res - 1e-9)));
  const int x1 = std::min(shape_.width - 1, static_cast<int>(std::floor((hi.x() - shape_.origin.x()) / res + 1e-9)));
  const int y0 = std::max(0, static_cast<int>(std::ceil((lo.y() - shape_.origin.y()) / res - 1e-9)));
  const int y1 = std::min(shape_.height - 1, static_cast<int>(std::floor((hi.y() - shape_.origin.y()) / res + 1e-9)));
  for (int iy = y0; iy <= y1; ++iy)
    for (int ix = x0; ix <= x1; ++ix) cells_[shape_.index(ix, iy)] = 1;
}

std::size_t OccupancyGrid::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::optional<double> OccupancyGrid::distance_to_occupied(const Eigen::Vector2d& p, double max_search,
                                                          Eigen::Vector2d* closest) const {
  const double res = shape_.resolution;
  const double half = 0.5 * res;
  const CellRange xr = axis_range(p.x(), max_search + res, shape_.origin.x(), res, shape_.width);
  const CellRange yr = axis_range(p.y(), max_search + res, shape_.origin.y(), res, shape_.height);
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_q = p;
  for (int iy = yr.lo; iy <= yr.hi; ++iy) {
    for (int ix = xr.lo; ix <= xr.hi; ++ix) {
      if (!cells_[shape_.index(ix, iy)]) continue;
      const Eigen::Vector2d c = shape_.cell_center(ix, iy);
      const Eigen::Vector2d q(std::clamp(p.x(), c.x() - half, c.x() + half),
                              std::clamp(p.y(), c.y() - half, c.y() + half));
      const double d = (p - q).norm();
      if (d < best) {
        best = d;
        best_q = q;
      }
    }
  }
  if (!(best <= max_search)) return std::nullopt;
  if (closest) *closest = best_q;
  return best;
}

double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

void SectorRegion::validate() const {
  if (!(half_angle > 0.0) || half_angle > std::numbers::pi)
    throw ParameterError("sector half_angle must be in (0, pi]");
  if (!(range > 0.0) || !std::isfinite(range)) throw ParameterError("sector range must be > 0");
  if (!apex.allFinite() || !std::isfinite(yaw)) throw ParameterError("sector apex and yaw must be finite");
}

bool SectorRegion::contains(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d d = p - apex;
  const double d2 = d.squaredNorm();
  if (d2 > range * range) return false;
  if (d2 == 0.0 || half_angle >= std::numbers::pi) return true;
  const double diff = wrap_angle(std::atan2(d.y(), d.x()) - yaw);
  return std::abs(diff) <= half_angle + kAngleEps;
}

void DiskRegion::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("disk radius must be > 0");
  if (!center.allFinite()) throw ParameterError("disk center must be finite");
}

// ---------------------------------------------------------------- blur

std::vector<double> gaussian_kernel_1d(double sigma_cells) {
  if (!(sigma_cells >= 0.5)) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_cells));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma_cells * sigma_cells));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

namespace {

BeliefGrid blur_axis(const BeliefGrid& in, const std::vector<double>& kernel, bool along_x, double exterior) {
  if (kernel.size() == 1) return in;
  const int radius = static_cast<int>(kernel.size() / 2);
  BeliefGrid out(in.shape());
  const int w = in.width();
  const int h = in.height();
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int jx = along_x ? ix + k : ix;
        const int jy = along_x ? iy : iy + k;
        const bool inside = along_x ? (jx >= 0 && jx < w) : (jy >= 0 && jy < h);
        acc += kernel[static_cast<std::size_t>(k + radius)] * (inside ? in.at(jx, jy) : exterior);
      }
      out.at(ix, iy) = acc;
    }
  }
  return out;
}

BeliefGrid blur_dense(const BeliefGrid& in, const Eigen::Matrix2d& cov_cells, double exterior) {
  const double sx = std::sqrt(cov_cells(0, 0));
  const double sy = std::sqrt(cov_cells(1, 1));
  const int rx = sx >= 0.5 ? static_cast<int>(std::ceil(3.0 * sx)) : 0;
  const int ry = sy >= 0.5 ? static_cast<int>(std::ceil(3.0 * sy)) : 0;
  const Eigen::Matrix2d inv = cov_cells.inverse();
  const int kw = 2 * rx + 1;
  std::vector<double> k(static_cast<std::size_t>(kw * (2 * ry + 1)));
  double total = 0.0;
  for (int dy = -ry; dy <= ry; ++dy) {
    for (int dx = -rx; dx <= rx; ++dx) {
      const Eigen::Vector2d d(dx, dy);
      const double w = std::exp(-0.5 * d.dot(inv * d));
      k[static_cast<std::size_t>((dy + ry) * kw + dx + rx)] = w;
      total += w;
    }
  }
  for (double& w : k) w /= total;

  BeliefGrid out(in.shape());
  for (int iy = 0; iy < in.height(); ++iy) {
    for (int ix = 0; ix < in.width(); ++ix) {
      double acc = 0.0;
      for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
          const int jx = ix - dx;
          const int jy = iy - dy;
          const double v = in.shape().in_bounds(jx, jy) ? in.at(jx, jy) : exterior;
          acc += k[static_cast<std::size_t>((dy + ry) * kw + dx + rx)] * v;
        }
      }
      out.at(ix, iy) = acc;
    }
  }
  return out;
}

}  // namespace

BeliefGrid gaussian_blur(const BeliefGrid& grid, const Eigen::Matrix2d& covariance, double exterior) {
  if (!covariance.allFinite()) throw ParameterError("blur covariance must be finite");
  const double scale = std::max(std::abs(covariance(0, 0)), std::abs(covariance(1, 1)));
  if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12 * std::max(scale, 1.0))
    throw ParameterError("blur covariance must be symmetric");
  if (!(covariance(0, 0) > 0.0) || !(covariance.determinant() > 0.0))
    throw ParameterError("blur covariance must be positive definite");

  const double res2 = grid.resolution() * grid.resolution();
  const Eigen::Matrix2d cov_cells = covariance / res2;
  if (covariance(0, 1) == 0.0) {
    const auto kx = gaussian_kernel_1d(std::sqrt(cov_cells(0, 0)));
    const auto ky = gaussian_kernel_1d(std::sqrt(cov_cells(1, 1)));
    return blur_axis(blur_axis(grid, kx, true, exterior), ky, false, exterior);
  }
  if (std::sqrt(cov_cells(0, 0)) < 0.5 && std::sqrt(cov_cells(1, 1)) < 0.5) return grid;
  return blur_dense(grid, cov_cells, exterior);
}

// ---------------------------------------------------------------- regions

std::vector<std::size_t> rasterize_sector(const GridShape& shape, const SectorRegion& region) {
  region.validate();
  std::vector<std::size_t> cells;
  const CellRange xr = axis_range(region.apex.x(), region.range, shape.origin.x(), shape.resolution, shape.width);
  const CellRange yr = axis_range(region.apex.y(), region.range, shape.origin.y(), shape.resolution, shape.height);
  for (int iy = yr.lo; iy <= yr.hi; ++iy)
    for (int ix = xr.lo; ix <= xr.hi; ++ix)
      if (region.contains(shape.cell_center(ix, iy))) cells.push_back(shape.index(ix, iy));
  return cells;
}

std::vector<std::size_t> rasterize_disk(const GridShape& shape, const DiskRegion& region) {
  region.validate();
  std::vector<std::size_t> cells;
  const CellRange xr = axis_range(region.center.x(), region.radius, shape.origin.x(), shape.resolution, shape.width);
  const CellRange yr = axis_range(region.center.y(), region.radius, shape.origin.y(), shape.resolution, shape.height);
  for (int iy = yr.lo; iy <= yr.hi; ++iy)
    for (int ix = xr.lo; ix <= xr.hi; ++ix)
      if (region.contains(shape.cell_center(ix, iy))) cells.push_back(shape.index(ix, iy));
  return cells;
}

double integrate_cells(const BeliefGrid& grid, std::span<const std::size_t> cells) {
  double acc = 0.0;
  for (std::size_t c : cells) acc += grid[c];
  return acc * grid.resolution() * grid.resolution();
}

double integrate_disk(const BeliefGrid& grid, const DiskRegion& region) {
  region.validate();
  const GridShape& s = grid.shape();
  const CellRange xr = axis_range(region.center.x(), region.radius, s.origin.x(), s.resolution, s.width);
  const CellRange yr = axis_range(region.center.y(), region.radius, s.origin.y(), s.resolution, s.height);
  double acc = 0.0;
  for (int iy = yr.lo; iy <= yr.hi; ++iy)
    for (int ix = xr.lo; ix <= xr.hi; ++ix)
      if (region.contains(s.cell_center(ix, iy))) acc += grid.at(ix, iy);
  return acc * s.resolution * s.resolution;
}

double integrate_sector(const BeliefGrid& grid, const SectorRegion& region) {
  const auto cells = rasterize_sector(grid.shape(), region);
  return integrate_cells(grid, cells);
}

double sample_bilinear(const BeliefGrid& grid, const Eigen::Vector2d& p) {
  const GridShape& s = grid.shape();
  const double u = (p.x() - s.origin.x()) / s.resolution;
  const double v = (p.y() - s.origin.y()) / s.resolution;
  const double fu0 = std::floor(u);
  const double fv0 = std::floor(v);
  if (fu0 < -1.0 || fv0 < -1.0 || fu0 > s.width || fv0 > s.height) return 0.0;
  const int i0 = static_cast<int>(fu0);
  const int j0 = static_cast<int>(fv0);
  const double fu = u - fu0;
  const double fv = v - fv0;
  auto val = [&](int i, int j) { return s.in_bounds(i, j) ? grid.at(i, j) : 0.0; };
  return (1.0 - fv) * ((1.0 - fu) * val(i0, j0) + fu * val(i0 + 1, j0)) +
         fv * ((1.0 - fu) * val(i0, j0 + 1) + fu * val(i0 + 1, j0 + 1));
}

namespace {

// Exact integral over u in [ua, ub] of the piecewise-linear interpolant of
// row j (index units, zero outside the map).
double row_linear_integral(const BeliefGrid& grid, int j, double ua, double ub) {
  const GridShape& s = grid.shape();
  if (j < 0 || j >= s.height) return 0.0;
  ua = std::max(ua, -1.0);
  ub = std::min(ub, static_cast<double>(s.width));
  if (!(ub > ua)) return 0.0;
  auto val = [&](int i) { return (i >= 0 && i < s.width) ? grid.at(i, j) : 0.0; };
  double acc = 0.0;
  const int i_lo = static_cast<int>(std::floor(ua));
  const int i_hi = std::min(static_cast<int>(std::floor(ub)), s.width - 1);
  for (int i = i_lo; i <= i_hi; ++i) {
    const double lo = std::max(ua, static_cast<double>(i));
    const double hi = std::min(ub, static_cast<double>(i + 1));
    if (!(hi > lo)) continue;
    const double a = val(i);
    const double b = val(i + 1);
    const double s0 = lo - i;
    const double s1 = hi - i;
    acc += a * (s1 - s0) + 0.5 * (b - a) * (s1 * s1 - s0 * s0);
  }
  return acc;
}

// Gauss-Legendre over the disk's polar angle, in panels split where the row
// pair of the interpolant changes. `row_integral(j, ua, ub)` integrates row j exactly.
template <typename RowIntegral>
double integrate_interpolated(const GridShape& s, const DiskRegion& region, RowIntegral&& row_integral) {
  region.validate();
  const double res = s.resolution;
  const double r = region.radius;
  const double cx = region.center.x();
  const double cy = region.center.y();

  std::vector<double> breaks{-std::numbers::pi / 2, std::numbers::pi / 2};
  const int j_lo = static_cast<int>(std::ceil((cy - r - s.origin.y()) / res));
  const int j_hi = static_cast<int>(std::floor((cy + r - s.origin.y()) / res));
  for (int j = std::max(j_lo, -1); j <= std::min(j_hi, s.height); ++j) {
    const double t = (s.origin.y() + j * res - cy) / r;
    if (t > -1.0 && t < 1.0) breaks.push_back(std::asin(t));
  }
  std::sort(breaks.begin(), breaks.end());

  constexpr double kMaxPanel = 0.05;
  double total = 0.0;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double pa = breaks[b];
    const double pb = breaks[b + 1];
    if (!(pb > pa)) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((pb - pa) / kMaxPanel)));
    const double width = (pb - pa) / pieces;
    for (int k = 0; k < pieces; ++k) {
      const double mid = pa + (k + 0.5) * width;
      const double half = 0.5 * width;
      for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
        const double phi = mid + half * kGlNodes[q];
        const double c = std::cos(phi);
        const double y = cy + r * std::sin(phi);
        const double w = r * c;
        const double v = (y - s.origin.y()) / res;
        const double fv0 = std::floor(v);
        if (fv0 < -1.0 || fv0 > s.height) continue;
        const int j0 = static_cast<int>(fv0);
        const double fv = v - fv0;
        const double ua = (cx - w - s.origin.x()) / res;
        const double ub = (cx + w - s.origin.x()) / res;
        const double row = (1.0 - fv) * row_integral(j0, ua, ub) + fv * row_integral(j0 + 1, ua, ub);
        total += kGlWeights[q] * half * row * res * r * c;
      }
    }
  }
  return total;
}

}  // namespace

double integrate_disk_interpolated(const BeliefGrid& grid, const DiskRegion& region) {
  return integrate_interpolated(grid.shape(), region,
                                [&](int j, double ua, double ub) { return row_linear_integral(grid, j, ua, ub); });
}

InterpolatedDiskIntegrator::InterpolatedDiskIntegrator(const BeliefGrid& grid) : grid_(&grid) {
  const int w = grid.width();
  const std::size_t stride = static_cast<std::size_t>(w) + 2;
  prefix_.assign(stride * static_cast<std::size_t>(grid.height()), 0.0);
  for (int iy = 0; iy < grid.height(); ++iy) {
    double* row = &prefix_[static_cast<std::size_t>(iy) * stride];
    // row[k] is the integral from u = -1 to u = k - 1.
    for (int i = -1; i < w; ++i) {
      const double a = i >= 0 ? grid.at(i, iy) : 0.0;
      const double b = i + 1 < w ? grid.at(i + 1, iy) : 0.0;
      row[i + 2] = row[i + 1] + 0.5 * (a + b);
    }
  }
}

double InterpolatedDiskIntegrator::integrate(const DiskRegion& region) const {
  const BeliefGrid& g = *grid_;
  const int w = g.width();
  const std::size_t stride = static_cast<std::size_t>(w) + 2;
  auto row_integral = [&](int j, double ua, double ub) {
    if (j < 0 || j >= g.height()) return 0.0;
    ua = std::max(ua, -1.0);
    ub = std::min(ub, static_cast<double>(w));
    if (!(ub > ua)) return 0.0;
    const double* row = &prefix_[static_cast<std::size_t>(j) * stride];
    auto cumulative = [&](double u) {
      const int i = std::min(static_cast<int>(std::floor(u)), w - 1);
      const double t = u - i;
      const double a = i >= 0 ? g.at(i, j) : 0.0;
      const double b = i + 1 < w ? g.at(i + 1, j) : 0.0;
      return row[i + 1] + a * t + 0.5 * (b - a) * t * t;
    };
    return cumulative(ub) - cumulative(ua);
  };
  return integrate_interpolated(g.shape(), region, row_integral);
}

std::vector<BoundarySample> boundary_samples(const DiskRegion& region, int n) {
  region.validate();
  if (n < 3) throw ParameterError("boundary_samples needs n >= 3");
  std::vector<BoundarySample> out(static_cast<std::size_t>(n));
  const double h = kTwoPi / n;
  const double r = region.radius;
  for (int k = 0; k < n; ++k) {
    const double a = k * h;
    const double m = (k + 0.5) * h;
    BoundarySample& s = out[static_cast<std::size_t>(k)];
    s.vertex = region.center + r * Eigen::Vector2d(std::cos(a), std::sin(a));
    s.midpoint = region.center + r * Eigen::Vector2d(std::cos(m), std::sin(m));
    s.dx = -r * h * std::sin(m);
    s.dy = r * h * std::cos(m);
  }
  return out;
}

Eigen::Vector2d disk_integral_gradient(const BeliefGrid& grid, const DiskRegion& region, int n) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const BoundarySample& s : boundary_samples(region, n)) {
    const double u = sample_bilinear(grid, s.midpoint);
    g.x() += u * s.dy;
    g.y() -= u * s.dx;
  }
  return g;
}

DiskIntegrator::DiskIntegrator(const BeliefGrid& grid) : grid_(&grid) {
  const int w = grid.width();
  prefix_.assign(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(grid.height()), 0.0);
  for (int iy = 0; iy < grid.height(); ++iy) {
    double* row = &prefix_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(w + 1)];
    for (int ix = 0; ix < w; ++ix) row[ix + 1] = row[ix] + grid.at(ix, iy);
  }
}

double DiskIntegrator::integrate(const DiskRegion& region) const {
  const GridShape& s = grid_->shape();
  const double res = s.resolution;
  const double r = region.radius;
  const CellRange yr = axis_range(region.center.y(), r, s.origin.y(), res, s.height);
  auto inside = [&](int ix, int iy) { return region.contains(s.cell_center(ix, iy)); };
  double acc = 0.0;
  for (int iy = yr.lo; iy <= yr.hi; ++iy) {
    const double dy = s.origin.y() + iy * res - region.center.y();
    const double rem = r * r - dy * dy;
    if (rem < -1e-9 * r * r) continue;
    const double half = std::sqrt(std::max(rem, 0.0));
    int lo = static_cast<int>(std::ceil((region.center.x() - half - s.origin.x()) / res));
    int hi = static_cast<int>(std::floor((region.center.x() + half - s.origin.x()) / res));
    // Agree exactly with the per-cell center test at the span ends.
    while (inside(lo - 1, iy)) --lo;
    while (lo <= hi && !inside(lo, iy)) ++lo;
    while (inside(hi + 1, iy)) ++hi;
    while (hi >= lo && !inside(hi, iy)) --hi;
    lo = std::max(lo, 0);
    hi = std::min(hi, s.width - 1);
    if (hi < lo) continue;
    const double* row = &prefix_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(s.width + 1)];
    acc += row[hi + 1] - row[lo];
  }
  return acc * res * res;
}

// ---------------------------------------------------------------- rays

namespace {

template <typename Visit>
void traverse_supercover(const GridShape& shape, Eigen::Vector2d a, Eigen::Vector2d b, Visit&& visit) {
  // Canonical endpoint order keeps the visited set independent of direction.
  if (b.x() < a.x() || (b.x() == a.x() && b.y() < a.y())) std::swap(a, b);
  const double res = shape.resolution;
  const double ua = (a.x() - shape.origin.x()) / res + 0.5;
  const double va = (a.y() - shape.origin.y()) / res + 0.5;
  const double ub = (b.x() - shape.origin.x()) / res + 0.5;
  const double vb = (b.y() - shape.origin.y()) / res + 0.5;
  int ix = static_cast<int>(std::floor(ua));
  int iy = static_cast<int>(std::floor(va));
  const int ex = static_cast<int>(std::floor(ub));
  const int ey = static_cast<int>(std::floor(vb));
  const double du = ub - ua;
  const double dv = vb - va;
  const int sx = du > 0 ? 1 : (du < 0 ? -1 : 0);
  const int sy = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double t_delta_x = sx != 0 ? 1.0 / std::abs(du) : inf;
  const double t_delta_y = sy != 0 ? 1.0 / std::abs(dv) : inf;
  double t_max_x = sx > 0 ? (ix + 1 - ua) / du : (sx < 0 ? (ua - ix) / -du : inf);
  double t_max_y = sy > 0 ? (iy + 1 - va) / dv : (sy < 0 ? (va - iy) / -dv : inf);

  if (!visit(ix, iy)) return;
  const int budget = std::abs(ex - ix) + std::abs(ey - iy) + 2;
  for (int step = 0; step < budget && (ix != ex || iy != ey); ++step) {
    const bool can_x = ix != ex;
    const bool can_y = iy != ey;
    if (can_x && can_y && std::abs(t_max_x - t_max_y) <= 1e-12) {
      // Passing exactly through a corner: include both side cells.
      if (!visit(ix + sx, iy)) return;
      if (!visit(ix, iy + sy)) return;
      ix += sx;
      iy += sy;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    } else if (can_x && (!can_y || t_max_x < t_max_y)) {
      ix += sx;
      t_max_x += t_delta_x;
    } else {
      iy += sy;
      t_max_y += t_delta_y;
    }
    if (!visit(ix, iy)) return;
  }
}

}  // namespace

bool line_of_sight(const OccupancyGrid& occ, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  bool clear = true;
  traverse_supercover(occ.shape(), a, b, [&](int ix, int iy) {
    if (occ.occupied(ix, iy)) {
      clear = false;
      return false;
    }
    return true;
  });
  return clear;
}

std::vector<CellIndex> supercover_cells(const GridShape& shape, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  std::vector<CellIndex> cells;
  traverse_supercover(shape, a, b, [&](int ix, int iy) {
    if (shape.in_bounds(ix, iy)) cells.push_back({ix, iy});
    return true;
  });
  return cells;
}

}  // namespace spot
