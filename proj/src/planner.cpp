#include "spot/planner.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

namespace spot {

void PlannerWeights::validate() const {
  for (double v : {lambda_v, lambda_c, lambda_s, lambda_d, omega_v, omega_a, omega_j, uav_radius})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("planner weights must be finite and >= 0");
  if (!(v_max > 0.0) || !(a_max > 0.0) || !(j_max > 0.0)) throw ParameterError("kinematic limits must be > 0");
  if (!(d_safe > 0.0)) throw ParameterError("d_safe must be > 0");
}

namespace {

std::vector<Eigen::Vector2d> zeros(std::size_t n) { return std::vector<Eigen::Vector2d>(n, Eigen::Vector2d::Zero()); }

CostTerm observation_term(const Trajectory& traj, const BeliefGrid& u_p, const InterpolatedDiskIntegrator& integ, double range,
                          int samples) {
  CostTerm out;
  out.gradient = zeros(traj.size());
  // Boundary arcs no longer than half a cell: the interpolant has kinks on every cell line.
  const int n = std::max(samples, static_cast<int>(std::ceil(4.0 * std::numbers::pi * range / u_p.resolution())));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const DiskRegion disk{traj.xy(i), range};
    out.value -= integ.integrate(disk);
    out.gradient[i] = -disk_integral_gradient(u_p, disk, n);
  }
  return out;
}

}  // namespace

CostTerm cost_observation(const Trajectory& traj, const UrgencyField& field, double sensing_range, int samples) {
  traj.validate(1);
  const InterpolatedDiskIntegrator integ(field.u_p);
  return observation_term(traj, field.u_p, integ, sensing_range, samples);
}

CostTerm cost_observation(const Trajectory& traj, const BeliefState& belief, const UrgencyParams& urgency,
                          const BeliefParams& belief_params, double sensing_range, int samples) {
  const UrgencyField field = build_urgency_field(belief, traj, urgency, belief_params);
  return cost_observation(traj, field, sensing_range, samples);
}

CostTerm cost_collision(const Trajectory& traj, const std::vector<ObstacleTrack>& tracks, const OccupancyGrid* occ,
                        const PlannerWeights& w) {
  CostTerm out;
  out.gradient = zeros(traj.size());
  const double ds = w.d_safe;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Eigen::Vector2d p = traj.xy(i);
    const double dt = traj.knot_time(i) - traj.t0;
    for (const ObstacleTrack& tr : tracks) {
      const Eigen::Vector2d r = p - (tr.position + tr.velocity * dt);
      const double n = r.norm();
      const double d = n - tr.radius - w.uav_radius;
      if (d >= ds) continue;
      const double gap = ds - d;
      out.value += gap * gap * gap;
      if (n > 0.0) out.gradient[i] -= 3.0 * gap * gap * r / n;
    }
    if (occ) {
      Eigen::Vector2d q;
      const auto dist = occ->distance_to_occupied(p, ds + w.uav_radius, &q);
      if (!dist) continue;
      const double d = *dist - w.uav_radius;
      if (d >= ds) continue;
      const double gap = ds - d;
      out.value += gap * gap * gap;
      if (*dist > 0.0) out.gradient[i] -= 3.0 * gap * gap * (p - q) / *dist;
    }
  }
  return out;
}

CostTerm cost_smoothness(const Trajectory& traj, const PlannerWeights& w) {
  traj.validate(4);
  const double u = w.smoothness_time_unit > 0.0 ? w.smoothness_time_unit : traj.dt_knot;
  const double ia = 1.0 / (u * u), ij = 1.0 / (u * u * u);
  const std::size_t n = traj.size();
  CostTerm out;
  out.gradient = zeros(n);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const Eigen::Vector2d a = (traj.xy(i + 2) - 2.0 * traj.xy(i + 1) + traj.xy(i)) * ia;
    out.value += a.squaredNorm();
    out.gradient[i] += 2.0 * a * ia;
    out.gradient[i + 1] -= 4.0 * a * ia;
    out.gradient[i + 2] += 2.0 * a * ia;
  }
  for (std::size_t i = 0; i + 3 < n; ++i) {
    const Eigen::Vector2d j = (traj.xy(i + 3) - 3.0 * traj.xy(i + 2) + 3.0 * traj.xy(i + 1) - traj.xy(i)) * ij;
    out.value += j.squaredNorm();
    out.gradient[i] -= 2.0 * j * ij;
    out.gradient[i + 1] += 6.0 * j * ij;
    out.gradient[i + 2] -= 6.0 * j * ij;
    out.gradient[i + 3] += 2.0 * j * ij;
  }
  return out;
}

namespace {

// Adds omega * sum_axes hinge(x) and scatters its gradient through `taps`.
void hinge_term(CostTerm& out, const Eigen::Vector2d& x, double limit, double omega, std::size_t first,
                std::initializer_list<double> taps, double scale) {
  for (int ax = 0; ax < 2; ++ax) {
    const double ex = std::abs(x[ax]) - limit;
    if (ex <= 0.0) continue;
    out.value += omega * ex * ex * ex;
    const double g = omega * 3.0 * ex * ex * (x[ax] > 0.0 ? 1.0 : -1.0) * scale;
    std::size_t k = first;
    for (double c : taps) out.gradient[k++][ax] += g * c;
  }
}

}  // namespace

CostTerm cost_feasibility(const Trajectory& traj, const PlannerWeights& w) {
  traj.validate(4);
  const double dt = traj.dt_knot;
  const std::size_t n = traj.size();
  CostTerm out;
  out.gradient = zeros(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Eigen::Vector2d v = (traj.xy(i + 1) - traj.xy(i)) / dt;
    hinge_term(out, v, w.v_max, w.omega_v, i, {-1.0, 1.0}, 1.0 / dt);
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const Eigen::Vector2d a = (traj.xy(i + 2) - 2.0 * traj.xy(i + 1) + traj.xy(i)) / (dt * dt);
    hinge_term(out, a, w.a_max, w.omega_a, i, {1.0, -2.0, 1.0}, 1.0 / (dt * dt));
  }
  for (std::size_t i = 0; i + 3 < n; ++i) {
    const Eigen::Vector2d j = (traj.xy(i + 3) - 3.0 * traj.xy(i + 2) + 3.0 * traj.xy(i + 1) - traj.xy(i)) / (dt * dt * dt);
    hinge_term(out, j, w.j_max, w.omega_j, i, {-1.0, 3.0, -3.0, 1.0}, 1.0 / (dt * dt * dt));
  }
  return out;
}

namespace {

CostReport combine(const Trajectory& traj, const CostTerm* jv, const PlanningScene& scene, const PlannerWeights& w) {
  static const std::vector<ObstacleTrack> kNone;
  const auto& tracks = scene.belief ? scene.belief->tracks : kNone;
  CostReport r;
  r.gradient = zeros(traj.size());
  if (jv && w.lambda_v != 0.0) {
    r.j_v = jv->value;
    for (std::size_t i = 0; i < traj.size(); ++i) r.gradient[i] += w.lambda_v * jv->gradient[i];
  }
  const CostTerm jc = cost_collision(traj, tracks, scene.occupancy, w);
  const CostTerm js = cost_smoothness(traj, w);
  const CostTerm jd = cost_feasibility(traj, w);
  r.j_c = jc.value;
  r.j_s = js.value;
  r.j_d = jd.value;
  for (std::size_t i = 0; i < traj.size(); ++i)
    r.gradient[i] += w.lambda_c * jc.gradient[i] + w.lambda_s * js.gradient[i] + w.lambda_d * jd.gradient[i];
  r.total = w.lambda_v * r.j_v + w.lambda_c * r.j_c + w.lambda_s * r.j_s + w.lambda_d * r.j_d;
  return r;
}

// Inverse of the smoothness Hessian over the free points (shared by both
// axes), regularized so it stays definite when the last point is free.
std::function<void(Eigen::VectorXd&)> smoothness_preconditioner(const Trajectory& traj, const PlannerWeights& w,
                                                                 std::size_t first, std::size_t nfree) {
  const std::size_t n = traj.size();
  const double u = w.smoothness_time_unit > 0.0 ? w.smoothness_time_unit : traj.dt_knot;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto add = [&](std::size_t i0, std::initializer_list<double> taps, double scale) {
    std::size_t a = 0;
    for (double ca : taps) {
      std::size_t b = 0;
      for (double cb : taps) {
        h(static_cast<Eigen::Index>(i0 + a), static_cast<Eigen::Index>(i0 + b)) += 2.0 * scale * ca * cb;
        ++b;
      }
      ++a;
    }
  };
  for (std::size_t i = 0; i + 2 < n; ++i) add(i, {1.0, -2.0, 1.0}, w.lambda_s / std::pow(u, 4));
  for (std::size_t i = 0; i + 3 < n; ++i) add(i, {-1.0, 3.0, -3.0, 1.0}, w.lambda_s / std::pow(u, 6));
  const auto k = static_cast<Eigen::Index>(nfree);
  Eigen::MatrixXd free = h.block(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(first), k, k);
  free.diagonal().array() += 1e-3 * free.diagonal().maxCoeff();
  auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(free);
  return [llt, k](Eigen::VectorXd& v) {
    for (Eigen::Index ax = 0; ax < 2; ++ax) {
      Eigen::VectorXd c(k);
      for (Eigen::Index i = 0; i < k; ++i) c[i] = v[2 * i + ax];
      c = llt->solve(c);
      for (Eigen::Index i = 0; i < k; ++i) v[2 * i + ax] = c[i];
    }
  };
}

}  // namespace

CostReport evaluate_cost(const Trajectory& traj, const UrgencyField* field, const PlanningScene& scene,
                         const PlannerWeights& w, const OptimizeOptions& opt) {
  w.validate();
  std::optional<CostTerm> jv;
  if (field && w.lambda_v != 0.0) jv = cost_observation(traj, *field, opt.sensing_range, opt.gradient_samples);
  return combine(traj, jv ? &*jv : nullptr, scene, w);
}

OptimizeResult optimize(const Trajectory& traj0, const PlanningScene& scene, const PlannerWeights& w,
                        const OptimizeOptions& opt, const UrgencyField* field) {
  const auto start = std::chrono::steady_clock::now();
  traj0.validate(4);
  w.validate();
  const bool use_v = w.lambda_v != 0.0;
  if (use_v && !scene.belief && !field) throw ParameterError("observation cost needs a belief or a field");

  std::optional<UrgencyField> own;
  if (use_v && !field) {
    own = build_urgency_field(*scene.belief, traj0, scene.urgency, scene.belief_params);
    field = &*own;
  }
  std::optional<InterpolatedDiskIntegrator> integ;
  if (use_v) integ.emplace(field->u_p);

  const std::size_t n = traj0.size();
  const std::size_t first = 1;
  if (opt.pin_last && n < opt.hold_tail + 2) throw ContractError("hold_tail exceeds the trajectory");
  const std::size_t last = opt.pin_last ? n - 2 - opt.hold_tail : n - 1;  // inclusive
  const std::size_t nfree = last >= first ? last - first + 1 : 0;

  Trajectory work = traj0;
  auto load = [&](const Eigen::VectorXd& x) {
    for (std::size_t k = 0; k < nfree; ++k) {
      work.points[first + k].x() = x[2 * k];
      work.points[first + k].y() = x[2 * k + 1];
    }
  };
  auto eval_report = [&]() {
    std::optional<CostTerm> jv;
    if (use_v) {
      if (opt.refresh_field) {
        const UrgencyField f = build_urgency_field(*scene.belief, work, scene.urgency, scene.belief_params);
        jv = cost_observation(work, f, opt.sensing_range, opt.gradient_samples);
      } else {
        jv = observation_term(work, field->u_p, *integ, opt.sensing_range, opt.gradient_samples);
      }
    }
    return combine(work, jv ? &*jv : nullptr, scene, w);
  };

  OptimizeResult res;
  res.initial = eval_report();
  Eigen::VectorXd x0(2 * nfree);
  for (std::size_t k = 0; k < nfree; ++k) {
    x0[2 * k] = traj0.points[first + k].x();
    x0[2 * k + 1] = traj0.points[first + k].y();
  }

  LbfgsResult lr;
  if (nfree == 0) {
    lr.x = x0;
    lr.f = res.initial.total;
    lr.history = {lr.f};
  } else {
    const Objective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      load(x);
      const CostReport r = eval_report();
      for (std::size_t k = 0; k < nfree; ++k) {
        g[2 * k] = r.gradient[first + k].x();
        g[2 * k + 1] = r.gradient[first + k].y();
      }
      return r.total;
    };
    LbfgsOptions lo = opt.lbfgs;
    if (opt.precondition && w.lambda_s > 0.0) lo.precondition = smoothness_preconditioner(traj0, w, first, nfree);
    lr = lbfgs_minimize(obj, x0, lo);
  }
  load(lr.x);
  res.trajectory = work;
  res.report = eval_report();
  res.report.iterations = lr.iterations;
  res.report.evaluations = lr.evaluations;
  res.report.status = lr.status;
  res.history = lr.history;
  res.report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Spot: return "spot";
    case Variant::SpotStar: return "spot-star";
    case Variant::Baseline: return "baseline";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(const std::string& s) {
  if (s == "spot") return Variant::Spot;
  if (s == "spot-star") return Variant::SpotStar;
  if (s == "baseline") return Variant::Baseline;
  return std::nullopt;
}

void PlannerConfig::validate() const {
  weights.validate();
  optimize.lbfgs.validate();
  urgency.validate();
  belief.validate();
  if (n_points < 4) throw ParameterError("planner needs at least 4 control points");
  if (!(dt_knot > 0.0)) throw ParameterError("dt_knot must be > 0");
  if (!(cruise_speed > 0.0)) throw ParameterError("cruise_speed must be > 0");
  if (yaw_candidates < 8) throw ParameterError("yaw_candidates must be >= 8");
  if (!(reference_inflation >= 0.0)) throw ParameterError("reference_inflation must be >= 0");
  if (!(sensor.half_angle > 0.0) || sensor.half_angle > 3.141592653589793 || !(sensor.range > 0.0))
    throw ParameterError("sensor needs 0 < half_angle <= pi and range > 0");
}

Trajectory initial_guess(const PlanContext& ctx, const PlannerConfig& cfg, double* progress_out,
                         std::size_t* hold_out) {
  if (!ctx.reference || ctx.reference->points().empty()) throw ContractError("plan needs a reference path");
  const ReferencePath& ref = *ctx.reference;
  const double s = ref.project(ctx.position, ctx.progress);
  if (progress_out) *progress_out = s;
  const double T = cfg.horizon();
  const Eigen::Vector2d goal = ref.at(std::min(s + cfg.cruise_speed * T, ref.length()));

  Trajectory tr;
  tr.dt_knot = cfg.dt_knot;
  tr.t0 = ctx.t;
  tr.points.resize(static_cast<std::size_t>(cfg.n_points));
  const std::size_t n = tr.points.size();
  const bool reuse = ctx.previous && ctx.previous->size() >= 2 && ctx.previous->end_time() > ctx.t;
  // First knot index at which the guess sits on the goal.
  std::size_t arrive = n - 1;
  const double remaining = ref.length() - s;
  if (remaining < cfg.cruise_speed * T) {
    const double k = std::ceil(remaining / (cfg.cruise_speed * cfg.dt_knot));
    arrive = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n - 1);
  }
  if (hold_out) *hold_out = n - 1 - arrive;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector2d q;
    if (i == 0) {
      q = ctx.position;
    } else if (i >= arrive) {
      q = goal;
    } else if (reuse) {
      q = ctx.previous->position(tr.knot_time(i)).head<2>();
    } else {
      q = ref.at(std::min(s + cfg.cruise_speed * cfg.dt_knot * static_cast<double>(i), ref.length()));
    }
    tr.points[i] = Eigen::Vector3d(q.x(), q.y(), cfg.altitude);
  }
  return tr;
}

PlanResult plan_step(const PlanContext& ctx, const PlannerConfig& cfg, Variant variant) {
  PlanResult out;
  out.yaw = ctx.yaw;
  try {
    cfg.validate();
    if (!ctx.belief) throw ContractError("plan needs a belief state");
    std::size_t hold = 0;
    const Trajectory guess = initial_guess(ctx, cfg, &out.progress, &hold);
    PlannerWeights w = cfg.weights;
    if (variant != Variant::Spot) w.lambda_v = 0.0;
    PlanningScene scene{ctx.belief, ctx.occupancy, cfg.urgency, cfg.belief};
    OptimizeOptions opt = cfg.optimize;
    opt.sensing_range = cfg.sensor.range;
    if (opt.pin_last) opt.hold_tail = std::min(hold, guess.size() - 2);
    OptimizeResult res = optimize(guess, scene, w, opt);
    out.trajectory = std::move(res.trajectory);
    out.report = std::move(res.report);

    if (variant == Variant::Baseline) {
      for (std::size_t i = 1; i < out.trajectory.size(); ++i) {
        const Eigen::Vector2d d = out.trajectory.xy(i) - out.trajectory.xy(0);
        if (d.norm() > 1e-6) {
          out.yaw = std::atan2(d.y(), d.x());
          break;
        }
      }
    } else {
      out.yaw_field = build_urgency_field(*ctx.belief, out.trajectory, cfg.urgency, cfg.belief);
      out.yaw = select_yaw(out.yaw_field, ctx.position, cfg.sensor, ctx.belief->tracks, cfg.yaw_candidates, ctx.yaw);
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.diagnostics = e.what();
  }
  return out;
}

}  // namespace spot
