#include "spot/urgency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Gaussian terms with exponent beyond this are dropped (exp(-30) ~ 1e-13).
constexpr double kExpCutoff = 30.0;

struct Sample {
  double t;
  double w;  // weight * step
  Eigen::Vector2d tau;
  Eigen::Vector2d tau_dot;
};

std::vector<Sample> trajectory_samples(const Trajectory& traj, const UrgencyParams& params, double lambda,
                                       double lo) {
  if (traj.points.size() < 2 || !(traj.dt_knot > 0.0)) throw ParameterError("trajectory has zero duration");
  params.validate();
  std::vector<Sample> out;
  for (const auto& [t, width] : params.nodes(lo)) {
    Sample s;
    s.t = t;
    s.w = lambda * params.weight(t) * width;
    s.tau = traj.position(traj.t0 + t).head<2>();
    s.tau_dot = traj.velocity(traj.t0 + t).head<2>();
    out.push_back(s);
  }
  return out;
}

// |d/dt ||g(t)||| for g with derivative g_dot; zero at g = 0.
double norm_rate(const Eigen::Vector2d& g, const Eigen::Vector2d& g_dot) {
  const double n = g.norm();
  if (n == 0.0) return 0.0;
  return std::abs(g.dot(g_dot)) / n;
}

// One weighted sample of the potential-urgency integrand, without m_p.
inline double potential_term(const Sample& s, double var, const Eigen::Vector2d& p) {
  const Eigen::Vector2d r = s.tau - p;
  const double x = 0.5 * r.squaredNorm() / var;
  if (x > kExpCutoff) return 0.0;
  const double density = std::exp(-x) / (kTwoPi * var);
  const Eigen::Vector2d d = r / s.t;
  const Eigen::Vector2d d_dot = s.tau_dot / s.t - r / (s.t * s.t);
  return s.w * density * norm_rate(d, d_dot);
}

double potential_variance(const BeliefParams& b, double t) {
  const double s2 = b.sigma_vel * b.sigma_vel;
  return b.variance_law == VarianceLaw::Literal ? s2 * t : s2 * t * t;
}

}  // namespace

void UrgencyParams::validate() const {
  if (!(t_min > 0.0) || !(horizon > t_min)) throw ParameterError("urgency requires horizon > t_min > 0");
  if (!(step > 0.0)) throw ParameterError("urgency step must be > 0");
  if (!(lambda_p >= 0.0) || !(lambda_r >= 0.0)) throw ParameterError("urgency weights must be >= 0");
  if (weight_shape == WeightShape::Exponential && !(decay_time > 0.0))
    throw ParameterError("urgency decay_time must be > 0");
}

double UrgencyParams::weight(double t) const {
  return weight_shape == WeightShape::Constant ? 1.0 : std::exp(-t / decay_time);
}

std::vector<UrgencyParams::Node> UrgencyParams::nodes(double lo) const {
  std::vector<Node> out;
  const double span = horizon - lo;
  if (!(span > 0.0)) return out;
  // Tolerate rounding in lo so that e.g. 0.1 to 2.0 is exactly 19 steps.
  const int n = std::max(1, static_cast<int>(std::ceil(span / step - 1e-9)));
  for (int k = 0; k < n; ++k) {
    const double a = lo + k * step;
    const double b = k + 1 == n ? horizon : lo + (k + 1) * step;
    const int m = k < static_cast<int>(grading.size()) ? std::max(1, grading[k]) : 1;
    const double h = (b - a) / m;
    for (int j = 0; j < m; ++j) out.push_back({a + (j + 0.5) * h, h});
  }
  return out;
}

double urgency_potential(const Eigen::Vector2d& p, const Trajectory& traj, double m_p_value,
                         const UrgencyParams& params, const BeliefParams& belief) {
  const auto samples = trajectory_samples(traj, params, params.lambda_p, params.t_min);
  if (m_p_value == 0.0) return 0.0;
  double acc = 0.0;
  for (const Sample& s : samples) acc += potential_term(s, potential_variance(belief, s.t), p);
  return m_p_value * acc;
}

double urgency_recognized(const ObstacleTrack& track, const Trajectory& traj, const UrgencyParams& params,
                          const BeliefParams& belief) {
  belief.validate();
  // The literal law measures elapsed time as t - t_o and needs it >= t_min.
  const double lo = belief.variance_law == VarianceLaw::Literal ? track.t_o + params.t_min : params.t_min;
  const auto samples = trajectory_samples(traj, params, params.lambda_r, lo);
  const double floor2 = belief.sigma_floor * belief.sigma_floor;
  const double sa2 = belief.sigma_acc * belief.sigma_acc;
  double acc = 0.0;
  for (const Sample& s : samples) {
    double el, var;
    if (belief.variance_law == VarianceLaw::Literal) {
      el = s.t - track.t_o;
      var = std::max(0.5 * sa2 * el * el, floor2);
    } else {
      el = s.t + track.t_o;
      var = std::max(0.25 * sa2 * el * el * el * el, floor2);
    }
    const Eigen::Vector2d e = s.tau - (track.position + track.velocity * s.t);
    const Eigen::Vector2d e_dot = s.tau_dot - track.velocity;
    const double density = std::exp(-0.5 * e.squaredNorm() / var) / (kTwoPi * var);
    const Eigen::Vector2d a = 2.0 * e / (el * el);
    const Eigen::Vector2d a_dot = 2.0 * e_dot / (el * el) - 4.0 * e / (el * el * el);
    acc += s.w * density * norm_rate(a, a_dot);
  }
  return acc;
}

UrgencyField build_urgency_field(const BeliefState& state, const Trajectory& traj, const UrgencyParams& params,
                                 const BeliefParams& belief) {
  const auto samples = trajectory_samples(traj, params, params.lambda_p, params.t_min);
  belief.validate();
  const GridShape& shape = state.m_p.shape();
  UrgencyField field;
  field.t0 = traj.t0;
  field.u_p = BeliefGrid(shape, 0.0);

  std::vector<double> var(samples.size()), reach2(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    var[k] = potential_variance(belief, samples[k].t);
    reach2[k] = 2.0 * var[k] * kExpCutoff * (1.0 + 1e-9);
  }

  for (int iy = 0; iy < shape.height; ++iy)
    for (int ix = 0; ix < shape.width; ++ix) {
      const std::size_t idx = shape.index(ix, iy);
      const double m = state.m_p[idx];
      if (m == 0.0) continue;
      const Eigen::Vector2d p = shape.cell_center(ix, iy);
      double acc = 0.0;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        // Cheap reject first; potential_term applies the exact cutoff.
        if ((samples[k].tau - p).squaredNorm() > reach2[k]) continue;
        acc += potential_term(samples[k], var[k], p);
      }
      field.u_p[idx] = m * acc;
    }

  for (const ObstacleTrack& tr : state.tracks) field.u_r[tr.id] = urgency_recognized(tr, traj, params, belief);
  return field;
}

namespace {

template <class Region>
double add_tracks(double total, const UrgencyField& field, const Region& region,
                  const std::vector<ObstacleTrack>& tracks) {
  for (const ObstacleTrack& tr : tracks) {
    if (!region.contains(tr.position)) continue;
    const auto it = field.u_r.find(tr.id);
    if (it != field.u_r.end()) total += it->second;
  }
  return total;
}

}  // namespace

double region_urgency(const UrgencyField& field, const SectorRegion& region, const std::vector<ObstacleTrack>& tracks) {
  return add_tracks(integrate_sector(field.u_p, region), field, region, tracks);
}

double region_urgency(const UrgencyField& field, const DiskRegion& region, const std::vector<ObstacleTrack>& tracks) {
  return add_tracks(integrate_disk(field.u_p, region), field, region, tracks);
}

double candidate_yaw(int k, int n) { return wrap_angle(kTwoPi * static_cast<double>(k) / static_cast<double>(n)); }

std::vector<double> sector_urgencies(const UrgencyField& field, const Eigen::Vector2d& pose, const SensorSpec& sensor,
                                     const std::vector<ObstacleTrack>& tracks, int n_candidates) {
  if (n_candidates < 8) throw ParameterError("select_yaw needs at least 8 candidates");
  const GridShape& s = field.u_p.shape();
  const double half = sensor.half_angle;
  const double range = sensor.range;
  SectorRegion probe{pose, 0.0, half, range};
  probe.validate();

  std::vector<double> yaws(n_candidates);
  for (int k = 0; k < n_candidates; ++k) yaws[k] = candidate_yaw(k, n_candidates);
  const double step = kTwoPi / n_candidates;
  const double margin = 1e-9;

  // Accumulate in the same row-major order integrate_sector uses, so each
  // candidate's sum is bitwise identical to the direct evaluation.
  std::vector<double> acc(n_candidates, 0.0);
  const int x_lo = std::max(0, static_cast<int>(std::floor((pose.x() - range - s.origin.x()) / s.resolution)));
  const int x_hi = std::min(s.width - 1, static_cast<int>(std::ceil((pose.x() + range - s.origin.x()) / s.resolution)));
  const int y_lo = std::max(0, static_cast<int>(std::floor((pose.y() - range - s.origin.y()) / s.resolution)));
  const int y_hi = std::min(s.height - 1, static_cast<int>(std::ceil((pose.y() + range - s.origin.y()) / s.resolution)));
  const double range2 = range * range;
  for (int iy = y_lo; iy <= y_hi; ++iy)
    for (int ix = x_lo; ix <= x_hi; ++ix) {
      const double v = field.u_p.at(ix, iy);
      if (v == 0.0) continue;
      const Eigen::Vector2d p = s.cell_center(ix, iy);
      const Eigen::Vector2d d = p - pose;
      const double d2 = d.squaredNorm();
      if (d2 > range2) continue;
      if (d2 == 0.0 || half >= std::numbers::pi) {
        for (double& a : acc) a += v;
        continue;
      }
      if (half > std::numbers::pi - 2.0 * step) {
        for (int k = 0; k < n_candidates; ++k) {
          probe.yaw = yaws[k];
          if (probe.contains(p)) acc[k] += v;
        }
        continue;
      }
      const double b = std::atan2(d.y(), d.x());
      const long k_lo = static_cast<long>(std::ceil((b - half) / step - 1e-6));
      const long k_hi = static_cast<long>(std::floor((b + half) / step + 1e-6));
      for (long k = k_lo; k <= k_hi; ++k) {
        const double diff = std::abs(b - static_cast<double>(k) * step);
        const int kk = static_cast<int>(((k % n_candidates) + n_candidates) % n_candidates);
        if (diff < half - margin) {
          acc[kk] += v;
        } else {
          probe.yaw = yaws[kk];
          if (probe.contains(p)) acc[kk] += v;
        }
      }
    }

  std::vector<double> out(n_candidates);
  for (int k = 0; k < n_candidates; ++k) {
    probe.yaw = yaws[k];
    out[k] = add_tracks(acc[k] * s.resolution * s.resolution, field, probe, tracks);
  }
  return out;
}

double select_yaw(const UrgencyField& field, const Eigen::Vector2d& pose, const SensorSpec& sensor,
                  const std::vector<ObstacleTrack>& tracks, int n_candidates, double previous_yaw) {
  const auto vals = sector_urgencies(field, pose, sensor, tracks, n_candidates);
  const double best = *std::max_element(vals.begin(), vals.end());
  if (!(best > 0.0)) return previous_yaw;
  int pick = -1;
  double pick_dist = 0.0, pick_yaw = 0.0;
  for (int k = 0; k < n_candidates; ++k) {
    if (vals[k] != best) continue;
    const double yaw = candidate_yaw(k, n_candidates);
    const double dist = std::abs(wrap_angle(yaw - previous_yaw));
    if (pick < 0 || dist < pick_dist || (dist == pick_dist && yaw < pick_yaw)) {
      pick = k;
      pick_dist = dist;
      pick_yaw = yaw;
    }
  }
  return pick_yaw;
}

}  // namespace spot
