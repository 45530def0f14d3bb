#include "spot/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spot {

void BeliefParams::validate() const {
  if (!(p_prior >= 0.0) || !std::isfinite(p_prior)) throw ParameterError("p_prior must be >= 0");
  if (!(sigma_vel > 0.0) || !(sigma_acc > 0.0)) throw ParameterError("sigma_vel and sigma_acc must be > 0");
  if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
  if (!(sigma_floor > 0.0)) throw ParameterError("sigma_floor must be > 0");
}

double BeliefParams::diffusion_variance() const {
  const double s2 = sigma_vel * sigma_vel;
  return variance_law == VarianceLaw::Literal ? s2 * dt : s2 * dt * dt;
}

double BeliefParams::track_variance(double elapsed) const {
  const double s2 = sigma_acc * sigma_acc;
  const double e2 = elapsed * elapsed;
  const double var = variance_law == VarianceLaw::Literal ? 0.5 * s2 * e2 : 0.25 * s2 * e2 * e2;
  return std::max(var, sigma_floor * sigma_floor);
}

ObservedRegion ObservedRegion::from_sector(const GridShape& shape, const SectorRegion& sector) {
  ObservedRegion r;
  r.shape_ = shape;
  r.cells_ = rasterize_sector(shape, sector);
  r.sector_ = sector;
  return r;
}

ObservedRegion ObservedRegion::from_cells(const GridShape& shape, std::vector<std::size_t> cells) {
  ObservedRegion r;
  r.shape_ = shape;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (!cells.empty() && cells.back() >= shape.size()) throw ContractError("observed cell index out of range");
  r.cells_ = std::move(cells);
  return r;
}

bool ObservedRegion::contains(const Eigen::Vector2d& p) const {
  if (sector_) return sector_->contains(p);
  const auto c = shape_.cell_of(p);
  if (!c) return false;
  return std::binary_search(cells_.begin(), cells_.end(), shape_.index(c->ix, c->iy));
}

BeliefState init_belief(const BeliefParams& params, const GridShape& shape) {
  params.validate();
  BeliefState s;
  s.m_p = BeliefGrid(shape, params.p_prior);
  s.t = 0.0;
  return s;
}

namespace {

// Elapsed times stay exact multiples of dt when they start as one.
double advance_time(double t, double dt) {
  const double k = std::round(t / dt);
  if (std::abs(t - k * dt) <= 1e-9 * dt) return (k + 1.0) * dt;
  return t + dt;
}

}  // namespace

BeliefState predict(const BeliefState& state, const BeliefParams& params, const OccupancyGrid* static_occupancy) {
  params.validate();
  BeliefState out;
  const double var = params.diffusion_variance();
  out.m_p = gaussian_blur(state.m_p, Eigen::Matrix2d::Identity() * var, params.p_prior);
  if (static_occupancy) {
    if (!(static_occupancy->shape() == state.m_p.shape())) throw ContractError("occupancy layout differs from belief");
    for (std::size_t i = 0; i < out.m_p.size(); ++i)
      if (static_occupancy->occupied(i)) out.m_p[i] = 0.0;
  }
  // Rounding in the kernel sum must not push the field above its bound.
  for (double& v : out.m_p.values()) v = std::min(v, params.p_prior);
  out.tracks = state.tracks;
  for (ObstacleTrack& tr : out.tracks) {
    tr.position += tr.velocity * params.dt;
    tr.t_o = advance_time(tr.t_o, params.dt);
  }
  out.t = advance_time(state.t, params.dt);
  out.next_track_id = state.next_track_id;
  return out;
}

BeliefState observe(const BeliefState& state, const ObservedRegion& region, const std::vector<Detection>& detections,
                    const BeliefParams& params) {
  params.validate();
  for (const Detection& d : detections) {
    if (!d.position.allFinite() || !d.velocity.allFinite() || !(d.radius > 0.0))
      throw ContractError("detection must be finite with positive radius");
    if (!region.contains(d.position)) throw ContractError("detection lies outside the observed region");
  }
  BeliefState out;
  out.m_p = state.m_p;
  for (std::size_t c : region.cells()) out.m_p[c] = 0.0;
  out.t = state.t;
  out.next_track_id = state.next_track_id;
  out.tracks.reserve(state.tracks.size() + detections.size());
  for (const ObstacleTrack& tr : state.tracks)
    if (!region.contains(tr.position)) out.tracks.push_back(tr);
  for (const Detection& d : detections) {
    ObstacleTrack tr;
    tr.id = out.next_track_id++;
    tr.position = d.position;
    tr.velocity = d.velocity;
    tr.radius = d.radius;
    tr.t_o = 0.0;
    out.tracks.push_back(tr);
  }
  return out;
}

BeliefState observe(const BeliefState& state, const SectorRegion& fov, const std::vector<Detection>& detections,
                    const BeliefParams& params) {
  return observe(state, ObservedRegion::from_sector(state.m_p.shape(), fov), detections, params);
}

BeliefGrid render_m_r(const BeliefState& state, const BeliefParams& params) {
  params.validate();
  const GridShape& s = state.m_p.shape();
  BeliefGrid out(s, 0.0);
  const double area = s.resolution * s.resolution;
  for (const ObstacleTrack& tr : state.tracks) {
    const double var = params.track_variance(tr.t_o);
    const double sigma = std::sqrt(var);
    const double norm = area / (2.0 * std::numbers::pi * var);
    const double reach = 6.0 * sigma;
    const int x0 = std::max(0, static_cast<int>(std::floor((tr.position.x() - reach - s.origin.x()) / s.resolution)));
    const int x1 = std::min(s.width - 1, static_cast<int>(std::ceil((tr.position.x() + reach - s.origin.x()) / s.resolution)));
    const int y0 = std::max(0, static_cast<int>(std::floor((tr.position.y() - reach - s.origin.y()) / s.resolution)));
    const int y1 = std::min(s.height - 1, static_cast<int>(std::ceil((tr.position.y() + reach - s.origin.y()) / s.resolution)));
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix) {
        const double d2 = (s.cell_center(ix, iy) - tr.position).squaredNorm();
        out.at(ix, iy) += norm * std::exp(-0.5 * d2 / var);
      }
  }
  return out;
}

BeliefState step(const BeliefState& state, const ObservedRegion& region, const std::vector<Detection>& detections,
                 const BeliefParams& params, const OccupancyGrid* static_occupancy) {
  return observe(predict(state, params, static_occupancy), region, detections, params);
}

BeliefState step(const BeliefState& state, const SectorRegion& fov, const std::vector<Detection>& detections,
                 const BeliefParams& params, const OccupancyGrid* static_occupancy) {
  return observe(predict(state, params, static_occupancy), fov, detections, params);
}

}  // namespace spot
