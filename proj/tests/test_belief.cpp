#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "belief_properties.hpp"
#include "oracles.hpp"
#include "spot/belief.hpp"

using spot::BeliefParams;
using spot::BeliefState;
using spot::GridShape;

namespace {

GridShape square(int n, double res = 0.1) {
  GridShape s;
  s.width = n;
  s.height = n;
  s.resolution = res;
  return s;
}

}  // namespace

TEST_CASE("init_belief fills the prior") {
  BeliefParams bp;
  const auto st = spot::init_belief(bp, square(30));
  for (double v : st.m_p.values()) CHECK(v == 0.2);
  CHECK(st.tracks.empty());
  CHECK(st.t == 0.0);
  CHECK(st.m_p.sum() == doctest::Approx(0.2 * 900).epsilon(1e-12));

  bp.p_prior = 0.0;
  CHECK(spot::init_belief(bp, square(5)).m_p.max() == 0.0);

  bp.dt = 0.0;
  CHECK_THROWS_AS(spot::init_belief(bp, square(5)), spot::ParameterError);
}

TEST_CASE("variance laws") {
  BeliefParams bp;
  CHECK(bp.diffusion_variance() == doctest::Approx(0.4));
  CHECK(bp.track_variance(1.0) == doctest::Approx(50.0));
  CHECK(bp.track_variance(0.0) == doctest::Approx(0.01));
  bp.variance_law = spot::VarianceLaw::Kinematic;
  CHECK(bp.diffusion_variance() == doctest::Approx(0.04));
  CHECK(bp.track_variance(2.0) == doctest::Approx(25.0 * 16.0));
}

TEST_CASE("predict propagates tracks and time") {
  BeliefParams bp;
  auto st = spot::init_belief(bp, square(40));
  spot::ObstacleTrack tr;
  tr.position = {0.0, 0.0};
  tr.velocity = {1.0, 0.0};
  st.tracks.push_back(tr);
  const auto out = spot::predict(st, bp);
  REQUIRE(out.tracks.size() == 1);
  CHECK(out.tracks[0].position.x() == doctest::Approx(0.1));
  CHECK(out.tracks[0].position.y() == 0.0);
  CHECK(out.tracks[0].t_o == doctest::Approx(0.1));
  CHECK(out.t == doctest::Approx(0.1));
  // Uniform prior with prior-valued exterior is a fixed point everywhere.
  for (double v : out.m_p.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("predict spike matches dense convolution with 0.4 m^2") {
  BeliefParams bp;
  GridShape s = square(41);
  auto st = spot::init_belief(bp, s);
  st.m_p.fill(0.0);
  st.m_p.at(20, 20) = 0.2;
  bp.p_prior = 0.2;
  const auto out = spot::predict(st, bp);
  std::vector<double> in(st.m_p.values().begin(), st.m_p.values().end());
  const double sc = std::sqrt(0.4) / 0.1;
  const auto want = oracle::dense_blur(in, 41, 41, sc, sc, 0.2);
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(out.m_p[i] - want[i]));
  CHECK(worst <= 1e-9);
}

TEST_CASE("predict zeroes static occupancy") {
  BeliefParams bp;
  const GridShape s = square(20);
  spot::OccupancyGrid occ(s);
  occ.set(5, 5, true);
  const auto out = spot::predict(spot::init_belief(bp, s), bp, &occ);
  CHECK(out.m_p.at(5, 5) == 0.0);
  CHECK(out.m_p.at(6, 5) > 0.0);
}

TEST_CASE("observe full suppression and empty fov") {
  BeliefParams bp;
  const GridShape s = square(20);
  auto st = spot::init_belief(bp, s);
  spot::ObstacleTrack tr;
  tr.position = {1.0, 1.0};
  st.tracks.push_back(tr);
  st.next_track_id = 1;

  spot::SectorRegion all{{1.0, 1.0}, 0.0, std::numbers::pi, 10.0};
  const auto cleared = spot::observe(st, all, {}, bp);
  CHECK(cleared.m_p.max() == 0.0);
  CHECK(cleared.tracks.empty());

  spot::SectorRegion tiny{{-5.0, -5.0}, 0.0, 0.3, 1e-3};
  const auto same = spot::observe(st, tiny, {}, bp);
  CHECK(same.tracks.size() == 1);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(same.m_p[i] == st.m_p[i]);
}

TEST_CASE("observe replaces tracks in view") {
  BeliefParams bp;
  const GridShape s = square(30);
  auto st = spot::init_belief(bp, s);
  spot::ObstacleTrack inside, outside;
  inside.id = 0;
  inside.position = {1.5, 1.5};
  inside.t_o = 0.7;
  outside.id = 1;
  outside.position = {0.2, 2.8};
  st.tracks = {inside, outside};
  st.next_track_id = 2;

  const spot::SectorRegion fov{{0.5, 0.5}, std::numbers::pi / 4, 0.3, 2.5};
  REQUIRE(fov.contains(inside.position));
  REQUIRE(!fov.contains(outside.position));
  spot::Detection d;
  d.position = {1.7, 1.6};
  d.velocity = {0.5, -0.5};
  d.radius = 0.4;
  const auto out = spot::observe(st, fov, {d}, bp);
  REQUIRE(out.tracks.size() == 2);
  CHECK(out.tracks[0].id == 1);
  CHECK(out.tracks[1].id == 2);
  CHECK(out.tracks[1].t_o == 0.0);
  CHECK(out.tracks[1].position == d.position);
  CHECK(out.tracks[1].radius == 0.4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool in = oracle::in_sector(fov.apex, fov.yaw, fov.half_angle, fov.range, s.cell_center(i));
    CHECK(out.m_p[i] == (in ? 0.0 : st.m_p[i]));
  }

  spot::Detection far;
  far.position = {2.9, 0.1};
  CHECK_THROWS_AS(spot::observe(st, fov, {far}, bp), spot::ContractError);
}

TEST_CASE("observe with an explicit cell region") {
  BeliefParams bp;
  const GridShape s = square(10);
  const auto st = spot::init_belief(bp, s);
  const auto region = spot::ObservedRegion::from_cells(s, {s.index(2, 3), s.index(4, 4), s.index(2, 3)});
  CHECK(region.cells().size() == 2);
  CHECK(region.contains(s.cell_center(4, 4)));
  CHECK(!region.contains(s.cell_center(5, 4)));
  spot::Detection d;
  d.position = s.cell_center(2, 3) + Eigen::Vector2d(0.02, -0.03);
  const auto out = spot::observe(st, region, {d}, bp);
  CHECK(out.m_p.at(2, 3) == 0.0);
  CHECK(out.m_p.at(4, 4) == 0.0);
  CHECK(out.m_p.at(3, 3) == 0.2);
  CHECK(out.tracks.size() == 1);
}

TEST_CASE("render_m_r mass and superposition") {
  BeliefParams bp;
  const GridShape s = square(60);
  auto st = spot::init_belief(bp, s);
  CHECK(spot::render_m_r(st, bp).max() == 0.0);

  spot::ObstacleTrack tr;
  tr.position = {3.0, 3.0};
  st.tracks = {tr};
  const auto one = spot::render_m_r(st, bp);
  CHECK(one.sum() >= 0.95);
  CHECK(one.sum() <= 1.0 + 1e-6);  // lattice sum of a sampled Gaussian overshoots by ~1e-8
  double near = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((s.cell_center(i) - tr.position).norm() <= 0.3 + 1e-9) near += one[i];
  CHECK(near >= 0.95);

  st.tracks = {tr, tr};
  const auto two = spot::render_m_r(st, bp);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(two[i] == 2.0 * one[i]);

  // A larger spread still integrates to one when kept interior.
  tr.t_o = 0.1;
  st.tracks = {tr};
  CHECK(spot::render_m_r(st, bp).sum() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("step composes predict and observe") {
  BeliefParams bp;
  std::mt19937_64 rng(7);
  const GridShape s = square(25);
  const auto st = props::random_state(rng, bp, s, 3);
  const spot::SectorRegion fov{{1.2, 1.2}, 0.5, 0.7, 1.5};
  const auto dets = props::random_detections(rng, s, fov, 2);
  const auto a = spot::step(st, fov, dets, bp);
  const auto b = spot::observe(spot::predict(st, bp), fov, dets, bp);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(a.m_p[i] == b.m_p[i]);
  CHECK(a.tracks.size() == b.tracks.size());

  const auto empty = spot::step(st, spot::ObservedRegion::empty(s), {}, bp);
  const auto pure = spot::predict(st, bp);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(empty.m_p[i] == pure.m_p[i]);
}

TEST_CASE("stationary fov two-step hand simulation") {
  BeliefParams bp;
  const GridShape s = square(30);
  const spot::SectorRegion fov{{1.5, 1.5}, 0.0, 0.6, 1.0};
  auto st = spot::init_belief(bp, s);
  std::vector<double> ref(s.size(), 0.2);
  const double sc = std::sqrt(bp.diffusion_variance()) / s.resolution;
  for (int k = 0; k < 2; ++k) {
    st = spot::step(st, fov, {}, bp);
    ref = oracle::dense_blur(ref, 30, 30, sc, sc, 0.2);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (oracle::in_sector(fov.apex, fov.yaw, fov.half_angle, fov.range, s.cell_center(i))) ref[i] = 0.0;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(st.m_p[i] - ref[i]));
  CHECK(worst <= 1e-9);
  // Just outside the fov the field has dipped below the prior from the cleared region.
  CHECK(st.m_p.at(15 + 11, 15) < 0.2);
}

TEST_CASE("belief invariants on 1000 randomized cases") {
  for (const auto& r : props::belief_suite(1000, 20240601)) {
    INFO(r.name << " failures=" << r.failures << " worst=" << r.worst);
    CHECK(r.ok());
    CHECK(r.cases == 1000);
  }
}
