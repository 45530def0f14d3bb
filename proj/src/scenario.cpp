#include "spot/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spot {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ScenarioError("field '" + field + "': " + what);
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  expect_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(join(where, it.key()), "unknown field");
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

Eigen::Vector2d point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) fail(field, "expected [x, y]");
  return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

const json& required(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(join(where, key), "missing");
  return j[key];
}

struct DoubleField {
  const char* name;
  double* target;
};
struct IntField {
  const char* name;
  int* target;
};
struct BoolField {
  const char* name;
  bool* target;
};

void apply_overrides(const json& j, const std::string& where, const std::vector<DoubleField>& doubles,
                     const std::vector<IntField>& ints, const std::vector<BoolField>& bools,
                     const std::set<std::string>& extra = {}) {
  std::set<std::string> allowed = extra;
  for (const auto& f : doubles) allowed.insert(f.name);
  for (const auto& f : ints) allowed.insert(f.name);
  for (const auto& f : bools) allowed.insert(f.name);
  check_keys(j, where, allowed);
  for (const auto& f : doubles)
    if (j.contains(f.name)) *f.target = number(j[f.name], join(where, f.name));
  for (const auto& f : ints)
    if (j.contains(f.name)) *f.target = integer(j[f.name], join(where, f.name));
  for (const auto& f : bools)
    if (j.contains(f.name)) *f.target = boolean(j[f.name], join(where, f.name));
}

void parse_planner(const json& j, PlannerConfig& cfg) {
  PlannerWeights& w = cfg.weights;
  OptimizeOptions& o = cfg.optimize;
  apply_overrides(j, "planner",
                  {{"lambda_v", &w.lambda_v},
                   {"lambda_c", &w.lambda_c},
                   {"lambda_s", &w.lambda_s},
                   {"lambda_d", &w.lambda_d},
                   {"v_max", &w.v_max},
                   {"a_max", &w.a_max},
                   {"j_max", &w.j_max},
                   {"d_safe", &w.d_safe},
                   {"omega_v", &w.omega_v},
                   {"omega_a", &w.omega_a},
                   {"omega_j", &w.omega_j},
                   {"smoothness_time_unit", &w.smoothness_time_unit},
                   {"g_tol", &o.lbfgs.g_tol},
                   {"dt_knot", &cfg.dt_knot},
                   {"cruise_speed", &cfg.cruise_speed},
                   {"altitude", &cfg.altitude},
                   {"reference_inflation", &cfg.reference_inflation}},
                  {{"n_points", &cfg.n_points},
                   {"yaw_candidates", &cfg.yaw_candidates},
                   {"max_iterations", &o.lbfgs.max_iterations},
                   {"gradient_samples", &o.gradient_samples}},
                  {{"pin_last", &o.pin_last}, {"refresh_field", &o.refresh_field}});
}

void parse_belief(const json& j, BeliefParams& b) {
  apply_overrides(j, "belief",
                  {{"p_prior", &b.p_prior},
                   {"sigma_vel", &b.sigma_vel},
                   {"sigma_acc", &b.sigma_acc},
                   {"sigma_floor", &b.sigma_floor}},
                  {}, {}, {"variance_law"});
  if (j.contains("variance_law")) {
    const std::string v = string(j["variance_law"], "belief.variance_law");
    if (v == "literal")
      b.variance_law = VarianceLaw::Literal;
    else if (v == "kinematic")
      b.variance_law = VarianceLaw::Kinematic;
    else
      fail("belief.variance_law", "expected \"literal\" or \"kinematic\"");
  }
}

void parse_urgency(const json& j, UrgencyParams& u) {
  apply_overrides(j, "urgency",
                  {{"horizon", &u.horizon},
                   {"t_min", &u.t_min},
                   {"step", &u.step},
                   {"lambda_p", &u.lambda_p},
                   {"lambda_r", &u.lambda_r},
                   {"decay_time", &u.decay_time}},
                  {}, {}, {"weight_shape", "grading"});
  if (j.contains("weight_shape")) {
    const std::string v = string(j["weight_shape"], "urgency.weight_shape");
    if (v == "constant")
      u.weight_shape = WeightShape::Constant;
    else if (v == "exponential")
      u.weight_shape = WeightShape::Exponential;
    else
      fail("urgency.weight_shape", "expected \"constant\" or \"exponential\"");
  }
  if (j.contains("grading")) {
    const json& g = j["grading"];
    if (!g.is_array()) fail("urgency.grading", "expected an array of integers");
    u.grading.clear();
    for (std::size_t i = 0; i < g.size(); ++i) u.grading.push_back(integer(g[i], "urgency.grading"));
  }
}

ObstacleSpec parse_obstacle(const json& j, const std::string& where) {
  check_keys(j, where, {"radius", "speed", "path", "mode", "trigger", "speed_jitter", "trigger_jitter"});
  ObstacleSpec o;
  if (j.contains("radius")) o.radius = number(j["radius"], where + ".radius");
  o.speed = number(required(j, where, "speed"), where + ".speed");
  const json& path = required(j, where, "path");
  if (!path.is_array()) fail(where + ".path", "expected a list of [x, y] waypoints");
  for (std::size_t i = 0; i < path.size(); ++i)
    o.path.push_back(point(path[i], where + ".path[" + std::to_string(i) + "]"));
  if (j.contains("mode")) {
    const std::string m = string(j["mode"], where + ".mode");
    if (m == "loop")
      o.mode = PathMode::Loop;
    else if (m == "once")
      o.mode = PathMode::Once;
    else
      fail(where + ".mode", "expected \"loop\" or \"once\"");
  }
  if (j.contains("trigger")) {
    const std::string tw = where + ".trigger";
    const json& t = j["trigger"];
    check_keys(t, tw, {"axis", "threshold"});
    Trigger trig;
    const std::string axis = string(required(t, tw, "axis"), tw + ".axis");
    if (axis == "x")
      trig.axis = 0;
    else if (axis == "y")
      trig.axis = 1;
    else
      fail(tw + ".axis", "expected \"x\" or \"y\"");
    trig.threshold = number(required(t, tw, "threshold"), tw + ".threshold");
    o.trigger = trig;
  }
  if (j.contains("speed_jitter")) o.speed_jitter = number(j["speed_jitter"], where + ".speed_jitter");
  if (j.contains("trigger_jitter")) o.trigger_jitter = number(j["trigger_jitter"], where + ".trigger_jitter");
  return o;
}

bool inside(const ScenarioSpec& s, const Eigen::Vector2d& p) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= s.map_extent.x() && p.y() <= s.map_extent.y();
}

}  // namespace

GridShape ScenarioSpec::grid_shape() const {
  GridShape g;
  g.resolution = resolution;
  g.origin = Eigen::Vector2d::Constant(0.5 * resolution);
  g.width = static_cast<int>(std::lround(map_extent.x() / resolution));
  g.height = static_cast<int>(std::lround(map_extent.y() / resolution));
  return g;
}

OccupancyGrid ScenarioSpec::occupancy() const {
  OccupancyGrid occ(grid_shape());
  for (const WallBox& w : walls) occ.fill_box(w.min, w.max);
  return occ;
}

void ScenarioSpec::validate() const {
  if (format_version != 1) fail("format_version", "unsupported version " + std::to_string(format_version));
  if (!(map_extent.x() > 0.0) || !(map_extent.y() > 0.0)) fail("map_extent", "must be positive");
  if (!(resolution > 0.0)) fail("resolution", "must be > 0");
  if (map_extent.x() / resolution > 10000.0 || map_extent.y() / resolution > 10000.0)
    fail("resolution", "grid larger than 10000 cells per side");
  for (std::size_t i = 0; i < walls.size(); ++i)
    if (!(walls[i].min.array() <= walls[i].max.array()).all())
      fail("walls[" + std::to_string(i) + "]", "min must not exceed max");
  const OccupancyGrid occ = occupancy();
  if (!inside(*this, start)) fail("start", "outside map_extent");
  if (!inside(*this, goal)) fail("goal", "outside map_extent");
  if (occ.occupied_at(start)) fail("start", "inside a wall");
  if (occ.occupied_at(goal)) fail("goal", "inside a wall");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const ObstacleSpec& o = obstacles[i];
    const std::string where = "obstacles[" + std::to_string(i) + "]";
    if (!(o.radius > 0.0)) fail(where + ".radius", "must be > 0");
    if (!(o.speed > 0.0)) fail(where + ".speed", "must be > 0");
    if (o.path.size() < 2) fail(where + ".path", "needs at least 2 waypoints");
    for (std::size_t k = 0; k < o.path.size(); ++k)
      if (!inside(*this, o.path[k])) fail(where + ".path[" + std::to_string(k) + "]", "outside map_extent");
    if (!(o.speed_jitter >= 0.0) || !(o.speed_jitter < o.speed)) fail(where + ".speed_jitter", "must be in [0, speed)");
    if (!(o.trigger_jitter >= 0.0)) fail(where + ".trigger_jitter", "must be >= 0");
    if (o.trigger) {
      const double ext = map_extent[o.trigger->axis];
      if (!(o.trigger->threshold >= 0.0 && o.trigger->threshold <= ext))
        fail(where + ".trigger.threshold", "outside map_extent");
    }
  }
  if (!(sensor.half_angle > 0.0) || sensor.half_angle > std::numbers::pi) fail("sensor.half_angle", "must be in (0, pi]");
  if (!(sensor.range > 0.0)) fail("sensor.range", "must be > 0");
  if (!(sensor.noise_sigma >= 0.0)) fail("sensor.noise_sigma", "must be >= 0");
  if (!(duration > 0.0)) fail("duration", "must be > 0");
  try {
    planner.validate();
  } catch (const ParameterError& e) {
    fail("planner", e.what());
  }
}

ScenarioSpec parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, "",
             {"format_version", "name", "map_extent", "resolution", "walls", "start", "goal", "obstacles", "sensor",
              "duration", "seed", "uav_radius", "planner", "belief", "urgency"});
  ScenarioSpec s;
  s.format_version = integer(required(j, "", "format_version"), "format_version");
  if (j.contains("name")) s.name = string(j["name"], "name");
  s.map_extent = point(required(j, "", "map_extent"), "map_extent");
  s.resolution = number(required(j, "", "resolution"), "resolution");
  if (j.contains("walls")) {
    const json& walls = j["walls"];
    if (!walls.is_array()) fail("walls", "expected a list");
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const std::string where = "walls[" + std::to_string(i) + "]";
      check_keys(walls[i], where, {"min", "max"});
      s.walls.push_back({point(required(walls[i], where, "min"), where + ".min"),
                         point(required(walls[i], where, "max"), where + ".max")});
    }
  }
  s.start = point(required(j, "", "start"), "start");
  s.goal = point(required(j, "", "goal"), "goal");
  if (j.contains("obstacles")) {
    const json& obs = j["obstacles"];
    if (!obs.is_array()) fail("obstacles", "expected a list");
    for (std::size_t i = 0; i < obs.size(); ++i)
      s.obstacles.push_back(parse_obstacle(obs[i], "obstacles[" + std::to_string(i) + "]"));
  }
  const json& sensor = required(j, "", "sensor");
  check_keys(sensor, "sensor", {"half_angle", "range", "noise_sigma"});
  s.sensor.half_angle = number(required(sensor, "sensor", "half_angle"), "sensor.half_angle");
  s.sensor.range = number(required(sensor, "sensor", "range"), "sensor.range");
  if (sensor.contains("noise_sigma")) s.sensor.noise_sigma = number(sensor["noise_sigma"], "sensor.noise_sigma");
  s.duration = number(required(j, "", "duration"), "duration");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("uav_radius")) s.planner.weights.uav_radius = number(j["uav_radius"], "uav_radius");
  if (j.contains("planner")) parse_planner(j["planner"], s.planner);
  if (j.contains("belief")) parse_belief(j["belief"], s.planner.belief);
  if (j.contains("urgency")) parse_urgency(j["urgency"], s.planner.urgency);
  s.planner.sensor.half_angle = s.sensor.half_angle;
  s.planner.sensor.range = s.sensor.range;
  s.validate();
  return s;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace spot
