#pragma once

// Randomized invariant checks for the belief update, shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spot/belief.hpp"

namespace props {

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // largest observed error, when meaningful
  bool ok() const { return cases > 0 && failures == 0; }
};

inline spot::GridShape random_shape(std::mt19937_64& rng, int lo = 8, int hi = 24) {
  std::uniform_int_distribution<int> dim(lo, hi);
  std::uniform_real_distribution<double> off(-3.0, 3.0);
  std::uniform_real_distribution<double> res(0.1, 0.4);
  spot::GridShape s;
  s.width = dim(rng);
  s.height = dim(rng);
  s.resolution = res(rng);
  s.origin = {off(rng), off(rng)};
  return s;
}

inline spot::BeliefState random_state(std::mt19937_64& rng, const spot::BeliefParams& bp,
                                      const spot::GridShape& shape, int max_tracks) {
  spot::BeliefState st = spot::init_belief(bp, shape);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : st.m_p.values()) v = bp.p_prior * u(rng);
  std::uniform_int_distribution<int> nt(0, max_tracks);
  const int n = nt(rng);
  const Eigen::Vector2d lo = shape.origin;
  const Eigen::Vector2d span = shape.resolution * Eigen::Vector2d(shape.width - 1, shape.height - 1);
  for (int i = 0; i < n; ++i) {
    spot::ObstacleTrack tr;
    tr.id = st.next_track_id++;
    tr.position = lo + Eigen::Vector2d(u(rng) * span.x(), u(rng) * span.y());
    tr.velocity = {4.0 * u(rng) - 2.0, 4.0 * u(rng) - 2.0};
    tr.t_o = bp.dt * std::floor(20.0 * u(rng));
    st.tracks.push_back(tr);
  }
  return st;
}

inline spot::SectorRegion random_sector(std::mt19937_64& rng, const spot::GridShape& shape) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Vector2d span = shape.resolution * Eigen::Vector2d(shape.width, shape.height);
  spot::SectorRegion s;
  s.apex = shape.origin + Eigen::Vector2d(u(rng) * span.x(), u(rng) * span.y());
  s.yaw = (u(rng) * 2.0 - 1.0) * 4.0;
  s.half_angle = 0.05 + u(rng) * (std::numbers::pi - 0.05);
  s.range = 0.2 + u(rng) * span.norm();
  return s;
}

/// Detections placed at random cell centers inside the sector.
inline std::vector<spot::Detection> random_detections(std::mt19937_64& rng, const spot::GridShape& shape,
                                                      const spot::SectorRegion& fov, int max_n) {
  std::vector<spot::Detection> out;
  const auto cells = spot::rasterize_sector(shape, fov);
  if (cells.empty()) return out;
  std::uniform_int_distribution<int> nd(0, max_n);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> v(-2.0, 2.0);
  const int n = nd(rng);
  for (int i = 0; i < n; ++i) {
    spot::Detection d;
    d.position = shape.cell_center(cells[pick(rng)]);
    d.velocity = {v(rng), v(rng)};
    d.radius = 0.2 + 0.1 * i;
    out.push_back(d);
  }
  return out;
}

/// Cells inside the sector become exactly 0; all others are untouched.
inline PropertyResult fov_suppression(int cases, std::uint64_t seed) {
  PropertyResult r{"fov suppression exactness"};
  std::mt19937_64 rng(seed);
  const spot::BeliefParams bp;
  for (int c = 0; c < cases; ++c) {
    const spot::GridShape shape = random_shape(rng);
    const spot::BeliefState st = random_state(rng, bp, shape, 3);
    const spot::SectorRegion fov = random_sector(rng, shape);
    const spot::BeliefState out = spot::observe(st, fov, random_detections(rng, shape, fov, 2), bp);
    bool bad = false;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      const bool inside = oracle::in_sector(fov.apex, fov.yaw, fov.half_angle, fov.range, shape.cell_center(i));
      const double want = inside ? 0.0 : st.m_p[i];
      if (out.m_p[i] != want) bad = true;
    }
    ++r.cases;
    if (bad) ++r.failures;
  }
  return r;
}

/// Random step sequences from a uniform prior never exceed p_prior.
inline PropertyResult prior_bound(int cases, std::uint64_t seed) {
  PropertyResult r{"m_p <= p_prior bound"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    spot::BeliefParams bp;
    bp.p_prior = 0.05 + 0.9 * u(rng);
    bp.sigma_vel = 0.5 + 3.0 * u(rng);
    const spot::GridShape shape = random_shape(rng, 6, 16);
    spot::BeliefState st = spot::init_belief(bp, shape);
    for (int k = 0; k < 4; ++k) {
      const spot::SectorRegion fov = random_sector(rng, shape);
      st = spot::step(st, fov, {}, bp);
    }
    double worst = 0.0;
    for (double v : st.m_p.values()) worst = std::max(worst, v - bp.p_prior);
    r.worst = std::max(r.worst, worst);
    ++r.cases;
    if (worst > 0.0) ++r.failures;
  }
  return r;
}

/// predict's diffusion against a dense 2D convolution oracle.
inline PropertyResult blur_vs_dense(int cases, std::uint64_t seed) {
  PropertyResult r{"blur vs dense convolution <= 1e-9"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    spot::BeliefParams bp;
    bp.sigma_vel = 0.3 + 2.5 * u(rng);
    const spot::GridShape shape = random_shape(rng, 6, 18);
    const spot::BeliefState st = random_state(rng, bp, shape, 0);
    const spot::BeliefState out = spot::predict(st, bp);
    const double sc = std::sqrt(bp.diffusion_variance()) / shape.resolution;
    std::vector<double> in(st.m_p.values().begin(), st.m_p.values().end());
    const auto want = oracle::dense_blur(in, shape.width, shape.height, sc, sc, bp.p_prior);
    double worst = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(out.m_p[i] - want[i]));
    r.worst = std::max(r.worst, worst);
    ++r.cases;
    if (worst > 1e-9) ++r.failures;
  }
  return r;
}

/// Track count, id uniqueness, detection carry-over and exact t_o multiples.
inline PropertyResult track_bookkeeping(int cases, std::uint64_t seed) {
  PropertyResult r{"track bookkeeping exactness"};
  std::mt19937_64 rng(seed);
  const spot::BeliefParams bp;
  for (int c = 0; c < cases; ++c) {
    const spot::GridShape shape = random_shape(rng);
    spot::BeliefState st = random_state(rng, bp, shape, 5);
    for (auto& tr : st.tracks) tr.t_o = 0.0;
    std::vector<int> age(st.tracks.size(), 0);  // steps since reset
    std::vector<int> ids;
    for (const auto& tr : st.tracks) ids.push_back(tr.id);
    bool bad = false;
    for (int k = 0; k < 6 && !bad; ++k) {
      const spot::SectorRegion fov = random_sector(rng, shape);
      const auto dets = random_detections(rng, shape, fov, 2);
      const spot::BeliefState pred = spot::predict(st, bp);
      std::size_t outside = 0;
      std::vector<int> kept_age;
      for (std::size_t i = 0; i < pred.tracks.size(); ++i)
        if (!fov.contains(pred.tracks[i].position)) {
          ++outside;
          kept_age.push_back(age[i] + 1);
        }
      const spot::BeliefState out = spot::observe(pred, fov, dets, bp);
      if (out.tracks.size() != outside + dets.size()) bad = true;
      std::set<int> uniq;
      for (const auto& tr : out.tracks) uniq.insert(tr.id);
      if (uniq.size() != out.tracks.size()) bad = true;
      for (std::size_t i = 0; i < out.tracks.size() && !bad; ++i) {
        const auto& tr = out.tracks[i];
        if (i < outside) {
          if (tr.t_o != kept_age[i] * bp.dt && std::abs(tr.t_o - kept_age[i] * bp.dt) > 1e-12) bad = true;
          const double k = tr.t_o / bp.dt;
          if (std::abs(k - std::round(k)) > 1e-9) bad = true;
        } else {
          const auto& d = dets[i - outside];
          if (tr.t_o != 0.0 || tr.position != d.position || tr.velocity != d.velocity || tr.radius != d.radius)
            bad = true;
        }
      }
      kept_age.resize(out.tracks.size(), 0);
      age = kept_age;
      st = out;
    }
    ++r.cases;
    if (bad) ++r.failures;
  }
  return r;
}

inline std::vector<PropertyResult> belief_suite(int cases, std::uint64_t seed) {
  return {fov_suppression(cases, seed), prior_bound(cases, seed + 1), blur_vs_dense(cases, seed + 2),
          track_bookkeeping(cases, seed + 3)};
}

}  // namespace props
