#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spot {

/// Raised when a numeric parameter violates its documented domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller breaks an operation's precondition on its data.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct CellIndex {
  int ix = 0;
  int iy = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Layout shared by every raster: `origin` is the world position of the
/// center of cell (0, 0); cells are square with side `resolution`.
struct GridShape {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double resolution = 0.1;
  int width = 1;
  int height = 1;

  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(ix);
  }
  CellIndex cell(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(width)),
            static_cast<int>(idx / static_cast<std::size_t>(width))};
  }
  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height; }
  Eigen::Vector2d cell_center(int ix, int iy) const {
    return origin + resolution * Eigen::Vector2d(ix, iy);
  }
  Eigen::Vector2d cell_center(std::size_t idx) const {
    const CellIndex c = cell(idx);
    return cell_center(c.ix, c.iy);
  }
  /// Cell whose square contains `p`; nullopt outside the map.
  std::optional<CellIndex> cell_of(const Eigen::Vector2d& p) const;
  /// Same as cell_of, without the bounds check.
  CellIndex nearest_cell(const Eigen::Vector2d& p) const;

  bool operator==(const GridShape& o) const {
    return origin == o.origin && resolution == o.resolution && width == o.width && height == o.height;
  }
};

/// Uniform 2D non-negative scalar field. Houses the potential-obstacle
/// map, the rendered recognized-obstacle map and urgency rasters.
class BeliefGrid {
 public:
  BeliefGrid() = default;
  explicit BeliefGrid(const GridShape& shape, double fill = 0.0);

  const GridShape& shape() const { return shape_; }
  int width() const { return shape_.width; }
  int height() const { return shape_.height; }
  double resolution() const { return shape_.resolution; }
  const Eigen::Vector2d& origin() const { return shape_.origin; }
  std::size_t size() const { return values_.size(); }

  double& at(int ix, int iy) { return values_[shape_.index(ix, iy)]; }
  double at(int ix, int iy) const { return values_[shape_.index(ix, iy)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double sum() const;
  double max() const;
  void fill(double v);

 private:
  GridShape shape_;
  std::vector<double> values_;
};

/// Binary static occupancy on the same layout as BeliefGrid.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridShape& shape);

  const GridShape& shape() const { return shape_; }
  bool occupied(int ix, int iy) const { return shape_.in_bounds(ix, iy) && cells_[shape_.index(ix, iy)] != 0; }
  bool occupied(std::size_t idx) const { return cells_[idx] != 0; }
  /// Points outside the map are free.
  bool occupied_at(const Eigen::Vector2d& p) const;
  void set(int ix, int iy, bool value);
  /// Marks every cell whose center lies in the closed box [lo, hi].
  void fill_box(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi);
  std::size_t count() const;

  /// Euclidean distance from `p` to the nearest occupied cell square, searching
  /// only cells within `max_search` of `p`. Returns nullopt when none is found.
  /// `closest` receives the nearest point on that square.
  std::optional<double> distance_to_occupied(const Eigen::Vector2d& p, double max_search,
                                             Eigen::Vector2d* closest = nullptr) const;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> cells_;
};

/// Fan-shaped field of view.
struct SectorRegion {
  Eigen::Vector2d apex = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double half_angle = 0.0;
  double range = 0.0;

  void validate() const;
  bool contains(const Eigen::Vector2d& p) const;
};

struct DiskRegion {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;

  void validate() const;
  bool contains(const Eigen::Vector2d& p) const { return (p - center).squaredNorm() <= radius * radius; }
};

/// Wraps an angle into [-pi, pi].
double wrap_angle(double a);

/// Convolves `grid` with the sampled bivariate Gaussian N(0, covariance),
/// truncated at 3 sigma per axis and renormalized. Cells outside the map read
/// as `exterior`. Axes with sigma below half a cell are left untouched.
BeliefGrid gaussian_blur(const BeliefGrid& grid, const Eigen::Matrix2d& covariance, double exterior = 0.0);

/// Normalized, truncated 1D sampled Gaussian with standard deviation
/// `sigma_cells`; a single unit tap when sigma is below half a cell.
std::vector<double> gaussian_kernel_1d(double sigma_cells);

/// Cells whose centers lie in the sector, ascending row-major.
std::vector<std::size_t> rasterize_sector(const GridShape& shape, const SectorRegion& region);
/// Cells whose centers lie in the disk, ascending row-major.
std::vector<std::size_t> rasterize_disk(const GridShape& shape, const DiskRegion& region);

/// Sum of value * resolution^2 over the cells with center inside the disk.
double integrate_disk(const BeliefGrid& grid, const DiskRegion& region);
double integrate_sector(const BeliefGrid& grid, const SectorRegion& region);
double integrate_cells(const BeliefGrid& grid, std::span<const std::size_t> cells);

/// Bilinear interpolation between cell centers; cells outside the map read as 0.
double sample_bilinear(const BeliefGrid& grid, const Eigen::Vector2d& p);

/// Area integral of the bilinearly interpolated field over the disk, computed
/// with exact integration along rows and Gauss-Legendre across them. Smooth
/// in the disk center, unlike the cell-center sum.
double integrate_disk_interpolated(const BeliefGrid& grid, const DiskRegion& region);

struct BoundarySample {
  Eigen::Vector2d vertex;    // point k at angle 2*pi*k/n
  Eigen::Vector2d midpoint;  // arc midpoint between vertex k and k+1
  double dx = 0.0;           // arc element increments at the midpoint
  double dy = 0.0;
};

/// Counter-clockwise discretization of the disk boundary into n arcs.
std::vector<BoundarySample> boundary_samples(const DiskRegion& region, int n);

/// Gradient of the disk integral of `grid` with respect to the disk center,
/// with the field held fixed: [∮ U dy, -∮ U dx] over the boundary.
Eigen::Vector2d disk_integral_gradient(const BeliefGrid& grid, const DiskRegion& region, int n);

/// Row prefix sums for repeated disk integrals of one raster.
class DiskIntegrator {
 public:
  explicit DiskIntegrator(const BeliefGrid& grid);
  /// Equals integrate_disk(grid, region) up to summation rounding.
  double integrate(const DiskRegion& region) const;

 private:
  const BeliefGrid* grid_;
  std::vector<double> prefix_;  // (width + 1) per row
};

/// Row prefix sums of the linear interpolant for repeated
/// integrate_disk_interpolated calls on one raster.
class InterpolatedDiskIntegrator {
 public:
  explicit InterpolatedDiskIntegrator(const BeliefGrid& grid);
  /// Equals integrate_disk_interpolated(grid, region) up to summation rounding.
  double integrate(const DiskRegion& region) const;

 private:
  const BeliefGrid* grid_;
  std::vector<double> prefix_;  // (width + 2) per row
};

/// True iff the supercover traversal of segment a-b meets no occupied cell.
/// Symmetric in (a, b).
bool line_of_sight(const OccupancyGrid& occ, const Eigen::Vector2d& a, const Eigen::Vector2d& b);

/// Cells visited by the supercover traversal of segment a-b (map cells only).
std::vector<CellIndex> supercover_cells(const GridShape& shape, const Eigen::Vector2d& a,
                                        const Eigen::Vector2d& b);

}  // namespace spot
