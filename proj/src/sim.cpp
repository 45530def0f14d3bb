#include "spot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spot {

namespace {

constexpr double kGoalTolerance = 0.3;

// Uniform in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double jitter(std::mt19937_64& rng, double half_width) {
  const double u = unit_uniform(rng);
  return half_width > 0.0 ? (2.0 * u - 1.0) * half_width : 0.0;
}

void place(ObstacleState& o, const ObstacleSpec& spec, bool moving) {
  Eigen::Vector2d tangent;
  o.position = path_point(spec.path, o.s, &tangent);
  o.velocity = moving ? Eigen::Vector2d(o.direction * o.speed * tangent) : Eigen::Vector2d::Zero();
}

}  // namespace

double path_length(const std::vector<Eigen::Vector2d>& path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += (path[i] - path[i - 1]).norm();
  return len;
}

Eigen::Vector2d path_point(const std::vector<Eigen::Vector2d>& path, double s, Eigen::Vector2d* tangent) {
  if (path.empty()) throw ContractError("empty waypoint path");
  if (tangent) *tangent = Eigen::Vector2d::Zero();
  if (path.size() == 1) return path.front();
  double acc = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Eigen::Vector2d seg = path[i] - path[i - 1];
    const double len = seg.norm();
    if (len == 0.0) continue;
    if (tangent) *tangent = seg / len;
    if (s <= acc + len || i + 1 == path.size()) {
      const double f = std::clamp((s - acc) / len, 0.0, 1.0);
      return path[i - 1] + f * seg;
    }
    acc += len;
  }
  return path.back();
}

SimState init_sim(const ScenarioSpec& spec, std::uint64_t trial_seed) {
  std::mt19937_64 rng(trial_seed ^ (spec.seed * 0x9E3779B97F4A7C15ULL));
  SimState sim;
  sim.uav = spec.start;
  for (const ObstacleSpec& os : spec.obstacles) {
    ObstacleState o;
    o.radius = os.radius;
    o.speed = os.speed + jitter(rng, os.speed_jitter);
    const double trig = jitter(rng, os.trigger_jitter);
    if (os.trigger) {
      o.trigger = os.trigger;
      o.trigger->threshold += trig;
      o.active = false;
    }
    place(o, os, o.active);
    sim.obstacles.push_back(o);
  }
  return sim;
}

SimState advance(const SimState& sim, const ScenarioSpec& spec, const Trajectory* plan, double dt) {
  SimState next = sim;
  next.step = sim.step + 1;
  next.t = next.step * dt;
  for (std::size_t i = 0; i < next.obstacles.size(); ++i) {
    ObstacleState& o = next.obstacles[i];
    const ObstacleSpec& os = spec.obstacles[i];
    if (!o.active && o.trigger && sim.uav[o.trigger->axis] > o.trigger->threshold) {
      o.active = true;
      o.trigger.reset();
    }
    if (!o.active) continue;
    const double len = path_length(os.path);
    bool moving = true;
    o.s += o.direction * o.speed * dt;
    if (os.mode == PathMode::Once) {
      if (o.s >= len) {
        o.s = len;
        moving = false;
      }
    } else {
      while (o.s > len || o.s < 0.0) {
        if (o.s > len) {
          o.s = 2.0 * len - o.s;
          o.direction = -1;
        } else {
          o.s = -o.s;
          o.direction = 1;
        }
      }
    }
    place(o, os, moving);
  }
  if (plan) {
    const Eigen::Vector2d p = plan->position(next.t).head<2>();
    next.uav_velocity = (p - sim.uav) / dt;
    next.uav = p;
  } else {
    next.uav_velocity.setZero();
  }
  return next;
}

std::vector<Detection> sense(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ, double yaw,
                             std::mt19937_64* rng) {
  if (!std::isfinite(yaw)) throw ParameterError("sensing yaw must be finite");
  const SectorRegion fov{sim.uav, yaw, spec.sensor.half_angle, spec.sensor.range};
  std::vector<Detection> out;
  for (std::size_t i = 0; i < sim.obstacles.size(); ++i) {
    const ObstacleState& o = sim.obstacles[i];
    if (!fov.contains(o.position) || !line_of_sight(occ, sim.uav, o.position)) continue;
    Detection d;
    d.position = o.position;
    d.velocity = o.velocity;
    d.radius = o.radius;
    d.source = static_cast<int>(i);
    out.push_back(d);
  }
  if (rng && spec.sensor.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sensor.noise_sigma);
    for (Detection& d : out) {
      const Eigen::Vector2d p = d.position + Eigen::Vector2d(noise(*rng), noise(*rng));
      // Keep the noisy detection inside the observed cells.
      if (fov.contains(p) && occ.shape().cell_of(p) && line_of_sight(occ, sim.uav, p)) d.position = p;
    }
  }
  return out;
}

ObservedRegion observed_region(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ, double yaw,
                               const std::vector<Detection>& detections) {
  const GridShape& shape = occ.shape();
  const SectorRegion fov{sim.uav, yaw, spec.sensor.half_angle, spec.sensor.range};
  std::vector<std::size_t> cells;
  for (std::size_t idx : rasterize_sector(shape, fov))
    if (line_of_sight(occ, sim.uav, shape.cell_center(idx))) cells.push_back(idx);
  for (const Detection& d : detections)
    if (const auto c = shape.cell_of(d.position)) cells.push_back(shape.index(c->ix, c->iy));
  return ObservedRegion::from_cells(shape, std::move(cells));
}

double min_clearance(const SimState& sim, const ScenarioSpec& spec, const OccupancyGrid& occ) {
  const double r = spec.planner.weights.uav_radius;
  double best = std::numeric_limits<double>::infinity();
  for (const ObstacleState& o : sim.obstacles) best = std::min(best, (sim.uav - o.position).norm() - o.radius - r);
  const double search = std::isfinite(best) ? std::max(best + r, 0.0) + occ.shape().resolution : 5.0;
  if (const auto d = occ.distance_to_occupied(sim.uav, search)) best = std::min(best, *d - r);
  return best;
}

const char* to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ReachedGoal: return "reached_goal";
    case TrialStatus::Collision: return "collision";
    case TrialStatus::Timeout: return "timeout";
    case TrialStatus::Failed: return "failed";
  }
  return "unknown";
}

std::optional<TrialStatus> parse_trial_status(const std::string& s) {
  for (auto st : {TrialStatus::ReachedGoal, TrialStatus::Collision, TrialStatus::Timeout, TrialStatus::Failed})
    if (s == to_string(st)) return st;
  return std::nullopt;
}

TrialLog run_trial(const ScenarioSpec& spec, Variant variant, std::uint64_t seed, const TrialOptions& options) {
  const PlannerConfig& cfg = spec.planner;
  const BeliefParams& bp = cfg.belief;
  const double dt = bp.dt;
  const OccupancyGrid occ = spec.occupancy();

  TrialLog log;
  log.scenario = spec.name;
  log.variant = to_string(variant);
  log.seed = seed;
  log.dt = dt;
  log.plan_dt_knot = cfg.dt_knot;

  SimState sim = init_sim(spec, seed);
  std::mt19937_64 noise_rng(seed + 0x5851F42D4C957F2DULL);
  const auto route = plan_reference(occ, spec.start, spec.goal, cfg.reference_inflation);
  if (route.empty()) {
    log.status = TrialStatus::Failed;
    log.diagnostics = "no reference route from start to goal";
    return log;
  }
  const ReferencePath reference(route);
  if (route.size() >= 2) {
    const Eigen::Vector2d d = route[1] - route[0];
    sim.yaw = std::atan2(d.y(), d.x());
  }

  BeliefState belief = init_belief(bp, occ.shape());
  for (std::size_t i = 0; i < belief.m_p.size(); ++i)
    if (occ.occupied(i)) belief.m_p[i] = 0.0;
  std::vector<Detection> detections = sense(sim, spec, occ, sim.yaw, &noise_rng);
  belief = observe(belief, observed_region(sim, spec, occ, sim.yaw, detections), detections, bp);

  Trajectory previous;
  bool have_previous = false;
  double progress = 0.0;
  const int max_steps = static_cast<int>(std::ceil(spec.duration / dt - 1e-9));

  for (;;) {
    StepRecord rec;
    rec.step = sim.step;
    rec.t = sim.t;
    rec.uav = sim.uav;
    rec.uav_velocity = sim.uav_velocity;
    rec.yaw = sim.yaw;
    for (const ObstacleState& o : sim.obstacles) rec.obstacles.push_back({o.position, o.velocity, o.active});
    rec.detections = detections;
    rec.min_clearance = min_clearance(sim, spec, occ);

    std::optional<TrialStatus> end;
    if (rec.min_clearance <= 0.0)
      end = TrialStatus::Collision;
    else if ((sim.uav - spec.goal).norm() <= kGoalTolerance)
      end = TrialStatus::ReachedGoal;
    else if (sim.step >= max_steps)
      end = TrialStatus::Timeout;
    if (end) {
      log.status = *end;
      log.steps.push_back(std::move(rec));
      if (options.observer) options.observer(StepView{sim, belief, nullptr});
      break;
    }

    PlanContext ctx;
    ctx.belief = &belief;
    ctx.occupancy = &occ;
    ctx.reference = &reference;
    ctx.position = sim.uav;
    ctx.t = sim.t;
    ctx.yaw = sim.yaw;
    ctx.progress = progress;
    ctx.previous = have_previous ? &previous : nullptr;
    const PlanResult plan = plan_step(ctx, cfg, variant);
    if (plan.failed) {
      log.status = TrialStatus::Failed;
      log.diagnostics = "step " + std::to_string(sim.step) + ": " + plan.diagnostics;
      log.steps.push_back(std::move(rec));
      break;
    }
    const CostReport& r = plan.report;
    rec.cost = {r.total, r.j_v, r.j_c, r.j_s, r.j_d, r.iterations, r.evaluations, to_string(r.status)};
    if (options.record_plans) rec.plan = plan.trajectory.points;
    log.steps.push_back(std::move(rec));
    if (options.observer) options.observer(StepView{sim, belief, &plan});
    if (options.stop_at >= 0.0 && sim.t >= options.stop_at - 1e-9) break;

    sim = advance(sim, spec, &plan.trajectory, dt);
    sim.yaw = plan.yaw;
    previous = plan.trajectory;
    have_previous = true;
    progress = plan.progress;
    detections = sense(sim, spec, occ, sim.yaw, &noise_rng);
    belief = step(belief, observed_region(sim, spec, occ, sim.yaw, detections), detections, bp, &occ);
  }
  return log;
}

}  // namespace spot
