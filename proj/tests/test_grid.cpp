#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spot/grid.hpp"

using namespace spot;
using Eigen::Vector2d;

namespace {

GridShape make_shape(int w, int h, double res = 0.1, Vector2d origin = Vector2d::Zero()) {
  GridShape s;
  s.origin = origin;
  s.resolution = res;
  s.width = w;
  s.height = h;
  return s;
}

std::vector<double> to_vec(const BeliefGrid& g) { return {g.values().begin(), g.values().end()}; }

}  // namespace

TEST_CASE("blur leaves a constant field unchanged") {
  BeliefGrid g(make_shape(60, 60), 0.2);
  const auto out = gaussian_blur(g, Eigen::Matrix2d::Identity() * 0.04, 0.2);
  for (double v : out.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
  // Zero exterior only matters near the border.
  const auto inner = gaussian_blur(g, Eigen::Matrix2d::Identity() * 0.04, 0.0);
  CHECK(inner.at(30, 30) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("blur of a spike matches dense convolution") {
  GridShape s = make_shape(31, 27);
  BeliefGrid g(s, 0.0);
  g.at(15, 13) = 1.0;
  const double sigma_cells = 2.0;
  const double var = std::pow(sigma_cells * s.resolution, 2);
  const auto out = gaussian_blur(g, Eigen::Matrix2d::Identity() * var, 0.0);
  const auto ref = oracle::dense_blur(to_vec(g), s.width, s.height, sigma_cells, sigma_cells, 0.0);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-9);
}

TEST_CASE("blur with sub-cell sigma is the identity") {
  GridShape s = make_shape(12, 9);
  BeliefGrid g(s, 0.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : g.values()) v = u(rng);
  const double var = std::pow(0.4 * s.resolution, 2);
  const auto out = gaussian_blur(g, Eigen::Matrix2d::Identity() * var, 0.7);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(out[i] == g[i]);
}

TEST_CASE("blur rejects non-SPD covariance") {
  BeliefGrid g(make_shape(5, 5), 1.0);
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(gaussian_blur(g, bad), ParameterError);
  Eigen::Matrix2d asym;
  asym << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(gaussian_blur(g, asym), ParameterError);
  CHECK_THROWS_AS(gaussian_blur(g, Eigen::Matrix2d::Zero()), ParameterError);
}

TEST_CASE("blur with kernel larger than the grid applies the full kernel") {
  GridShape s = make_shape(5, 4);
  BeliefGrid g(s, 0.0);
  g.at(2, 2) = 1.0;
  const auto out = gaussian_blur(g, Eigen::Matrix2d::Identity() * 0.09, 0.5);
  const auto ref = oracle::dense_blur(to_vec(g), s.width, s.height, 3.0, 3.0, 0.5);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-12);
}

TEST_CASE("blur with correlated covariance is a normalized dense convolution") {
  GridShape s = make_shape(41, 41);
  BeliefGrid g(s, 0.0);
  g.at(20, 20) = 1.0;
  Eigen::Matrix2d cov;
  cov << 0.04, 0.02, 0.02, 0.03;
  const auto out = gaussian_blur(g, cov, 0.0);
  CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Mass spreads along the (1, 1) diagonal more than the (1, -1) one.
  CHECK(out.at(23, 23) > out.at(23, 17));
  CHECK(out.at(23, 23) == doctest::Approx(out.at(17, 17)).epsilon(1e-12));
}

TEST_CASE("blur conserves mass and positivity (property)") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    GridShape s = make_shape(50, 50);
    BeliefGrid g(s, 0.0);
    // Support kept 15 cells from the border; kernel radius <= 12 cells.
    for (int iy = 15; iy < 35; ++iy)
      for (int ix = 15; ix < 35; ++ix) g.at(ix, iy) = u(rng);
    const double sigma = 0.05 + 0.35 * u(rng);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    cov(0, 0) = sigma * sigma;
    cov(1, 1) = std::pow(0.05 + 0.35 * u(rng), 2);
    const auto out = gaussian_blur(g, cov, 0.0);
    CHECK(out.sum() == doctest::Approx(g.sum()).epsilon(1e-9));
    for (double v : out.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("sector rasterization edge cases") {
  GridShape s = make_shape(20, 20);
  SectorRegion full{Vector2d(0.95, 0.95), 0.3, std::numbers::pi, 10.0};
  CHECK(rasterize_sector(s, full).size() == s.size());

  SectorRegion tiny{s.cell_center(4, 7), 1.0, 0.3, 0.5 * s.resolution};
  const auto cells = rasterize_sector(s, tiny);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0] == s.index(4, 7));

  SectorRegion outside{Vector2d(-5.0, -5.0), 0.0, 0.3, 0.01};
  CHECK(rasterize_sector(s, outside).empty());
}

TEST_CASE("87 degree sector matches per-cell oracle") {
  GridShape s = make_shape(20, 20);
  const double half = 43.5 * std::numbers::pi / 180.0;
  for (const Vector2d apex : {Vector2d(0.52, 1.01), Vector2d(1.0, 1.0), Vector2d(0.0, 0.95)}) {
    SectorRegion r{apex, 0.0, half, 1.3};
    const auto cells = rasterize_sector(s, r);
    std::vector<std::size_t> ref;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (oracle::in_sector(apex, 0.0, half, 1.3, s.cell_center(i))) ref.push_back(i);
    CHECK(cells == ref);
  }
}

TEST_CASE("sector cell set grows with range and half angle (property)") {
  GridShape s = make_shape(40, 40);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    SectorRegion a{Vector2d(4.0 * u(rng), 4.0 * u(rng)), 2 * std::numbers::pi * u(rng) - std::numbers::pi,
                   0.05 + 3.0 * u(rng), 0.1 + 3.0 * u(rng)};
    SectorRegion b = a;
    b.range += u(rng);
    b.half_angle = std::min(std::numbers::pi, a.half_angle + 0.5 * u(rng));
    const auto ca = rasterize_sector(s, a);
    const auto cb = rasterize_sector(s, b);
    CHECK(std::includes(cb.begin(), cb.end(), ca.begin(), ca.end()));
  }
}

TEST_CASE("disk integral") {
  GridShape s = make_shape(100, 100);
  BeliefGrid zero(s, 0.0);
  CHECK(integrate_disk(zero, {Vector2d(5, 5), 2.0}) == 0.0);

  BeliefGrid uni(s, 0.7);
  const DiskRegion d{Vector2d(5.0, 5.0), 2.0};
  const auto n = rasterize_disk(s, d).size();
  CHECK(integrate_disk(uni, d) == doctest::Approx(0.7 * n * 0.01).epsilon(1e-12));
  CHECK(integrate_disk(uni, d) == doctest::Approx(0.7 * std::numbers::pi * 4.0).epsilon(0.01));

  // Finer resolution approaches the continuous area.
  GridShape fine = make_shape(400, 400, 0.025);
  BeliefGrid uni_fine(fine, 0.7);
  const double err_coarse = std::abs(integrate_disk(uni, d) - 0.7 * std::numbers::pi * 4.0);
  const double err_fine = std::abs(integrate_disk(uni_fine, d) - 0.7 * std::numbers::pi * 4.0);
  CHECK(err_fine < err_coarse);
}

TEST_CASE("disk integral equals exhaustive scan on a random grid") {
  GridShape s = make_shape(40, 30, 0.1, Vector2d(-1.0, 0.5));
  BeliefGrid g(s);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : g.values()) v = u(rng);
  for (int trial = 0; trial < 40; ++trial) {
    const DiskRegion d{Vector2d(-1.5 + 5.0 * u(rng), 0.0 + 4.0 * u(rng)), 1.0};
    double acc = 0.0;
    for (int iy = 0; iy < s.height; ++iy)
      for (int ix = 0; ix < s.width; ++ix) {
        const Vector2d c = s.origin + s.resolution * Vector2d(ix, iy);
        if ((c - d.center).squaredNorm() <= d.radius * d.radius) acc += g.at(ix, iy);
      }
    CHECK(integrate_disk(g, d) == acc * s.resolution * s.resolution);
    DiskIntegrator fast(g);
    CHECK(fast.integrate(d) == doctest::Approx(acc * 0.01).epsilon(1e-12));
  }
}

TEST_CASE("disk integral is linear and additive over cell partitions") {
  GridShape s = make_shape(50, 50);
  BeliefGrid a(s), b(s), sum(s);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
    sum[i] = a[i] + 0.5 * b[i];
  }
  const DiskRegion d{Vector2d(2.5, 2.4), 1.7};
  CHECK(integrate_disk(sum, d) == doctest::Approx(integrate_disk(a, d) + 0.5 * integrate_disk(b, d)).epsilon(1e-12));
  // Split the disk cells into even and odd rows.
  const auto cells = rasterize_disk(s, d);
  std::vector<std::size_t> even, odd;
  for (auto c : cells) (s.cell(c).iy % 2 == 0 ? even : odd).push_back(c);
  CHECK(integrate_cells(a, even) + integrate_cells(a, odd) == doctest::Approx(integrate_disk(a, d)).epsilon(1e-12));
}

TEST_CASE("boundary samples") {
  SUBCASE("four points at the quarter angles") {
    const auto b = boundary_samples({Vector2d(0, 0), 1.0}, 4);
    REQUIRE(b.size() == 4);
    CHECK(b[0].vertex.x() == doctest::Approx(1.0));
    CHECK(b[1].vertex.y() == doctest::Approx(1.0));
    CHECK(b[2].vertex.x() == doctest::Approx(-1.0));
    CHECK(b[3].vertex.y() == doctest::Approx(-1.0));
    double sx = 0, sy = 0;
    for (auto& p : b) {
      sx += p.dx;
      sy += p.dy;
    }
    CHECK(std::abs(sx) <= 1e-12);
    CHECK(std::abs(sy) <= 1e-12);
  }
  SUBCASE("closed curve identities") {
    for (int n : {8, 13, 64, 200}) {
      const DiskRegion d{Vector2d(3.0, -2.0), 2.5};
      const auto b = boundary_samples(d, n);
      double sdy = 0.0, area = 0.0, sdx = 0.0;
      for (auto& p : b) {
        sdy += p.dy;
        sdx += p.dx;
        area += p.midpoint.x() * p.dy;
      }
      CHECK(std::abs(sdy) <= 1e-12);
      CHECK(std::abs(sdx) <= 1e-12);
      if (n == 64) CHECK(area == doctest::Approx(std::numbers::pi * 2.5 * 2.5).epsilon(0.01));
    }
  }
}

TEST_CASE("interpolated disk integral") {
  GridShape s = make_shape(120, 120);
  BeliefGrid uni(s, 0.3);
  const DiskRegion d{Vector2d(6.03, 5.91), 2.2};
  CHECK(integrate_disk_interpolated(uni, d) == doctest::Approx(0.3 * std::numbers::pi * 2.2 * 2.2).epsilon(1e-9));

  // Smooth random field: compare to a fine Riemann sum of the bilinear field.
  BeliefGrid g(s);
  for (int iy = 0; iy < s.height; ++iy)
    for (int ix = 0; ix < s.width; ++ix) {
      const Vector2d c = s.cell_center(ix, iy);
      g.at(ix, iy) = 1.0 + std::sin(0.7 * c.x()) * std::cos(0.4 * c.y()) + 0.1 * c.x();
    }
  const double h = 0.005;
  double ref = 0.0;
  for (double y = d.center.y() - d.radius + h / 2; y < d.center.y() + d.radius; y += h)
    for (double x = d.center.x() - d.radius + h / 2; x < d.center.x() + d.radius; x += h)
      if ((Vector2d(x, y) - d.center).squaredNorm() <= d.radius * d.radius) ref += sample_bilinear(g, {x, y});
  ref *= h * h;
  CHECK(integrate_disk_interpolated(g, d) == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("boundary gradient of a linear ramp follows Green's theorem") {
  GridShape s = make_shape(200, 200);
  BeliefGrid ramp(s);
  const double alpha = 0.8;
  for (int iy = 0; iy < s.height; ++iy)
    for (int ix = 0; ix < s.width; ++ix) ramp.at(ix, iy) = alpha * s.cell_center(ix, iy).x();
  const DiskRegion d{Vector2d(10.02, 9.97), 5.0};
  const Vector2d g = disk_integral_gradient(ramp, d, 64);
  CHECK(g.x() == doctest::Approx(alpha * std::numbers::pi * 25.0).epsilon(0.01));
  CHECK(std::abs(g.y()) < 1e-6 * std::abs(g.x()));
  const double eps = 1e-5;
  const double fd = (integrate_disk_interpolated(ramp, {d.center + Vector2d(eps, 0), 5.0}) -
                     integrate_disk_interpolated(ramp, {d.center - Vector2d(eps, 0), 5.0})) /
                    (2 * eps);
  CHECK(g.x() == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("line of sight") {
  GridShape s = make_shape(30, 30);
  OccupancyGrid empty(s);
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.0, 2.95);
  for (int i = 0; i < 50; ++i) CHECK(line_of_sight(empty, {u(rng), u(rng)}, {u(rng), u(rng)}));

  OccupancyGrid one(s);
  one.set(10, 5, true);
  CHECK_FALSE(line_of_sight(one, s.cell_center(4, 5), s.cell_center(16, 5)));
  CHECK_FALSE(line_of_sight(one, s.cell_center(10, 1), s.cell_center(10, 9)));
  CHECK(line_of_sight(one, s.cell_center(4, 6), s.cell_center(16, 6)));
}

TEST_CASE("line of sight agrees with fine sampling on random walls") {
  GridShape s = make_shape(30, 30);
  OccupancyGrid occ(s);
  std::mt19937 rng(33);
  std::uniform_int_distribution<int> cell(0, 29);
  for (int k = 0; k < 6; ++k) {
    const int x = cell(rng), y = cell(rng);
    const bool horizontal = k % 2 == 0;
    for (int t = 0; t < 8; ++t) {
      const int ix = horizontal ? std::min(29, x + t) : x;
      const int iy = horizontal ? y : std::min(29, y + t);
      occ.set(ix, iy, true);
    }
  }
  std::uniform_real_distribution<double> u(0.0, 2.95);
  int agree = 0;
  int tested = 0;
  while (tested < 100) {
    const Vector2d a(u(rng), u(rng)), b(u(rng), u(rng));
    if (occ.occupied_at(a) || occ.occupied_at(b)) continue;
    ++tested;
    const bool fast = line_of_sight(occ, a, b);
    CHECK(fast == line_of_sight(occ, b, a));
    if (fast == oracle::sampled_line_of_sight(occ, a, b, s.resolution / 4)) ++agree;
    // Supercover is conservative: anything the samples hit, it hits.
    if (!oracle::sampled_line_of_sight(occ, a, b, s.resolution / 4)) CHECK_FALSE(fast);
  }
  CHECK(agree >= 99);
}
