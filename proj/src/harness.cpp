#include "spot/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace spot {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json vec2(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }
json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
Eigen::Vector2d read2(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Eigen::Vector3d read3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

// JSON has no infinity; an unbounded clearance is stored as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double read_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Data lines of a CSV written by this module (version comment and header skipped).
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(split(line, ','));
  }
  return rows;
}

double num(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

const char* kCsvVersion = "# format_version: 1\n";

}  // namespace

std::string trial_log_to_json(const TrialLog& log) {
  json j;
  j["format_version"] = log.format_version;
  j["scenario"] = log.scenario;
  j["variant"] = log.variant;
  j["seed"] = log.seed;
  j["dt"] = log.dt;
  j["plan_dt_knot"] = log.plan_dt_knot;
  j["status"] = to_string(log.status);
  j["diagnostics"] = log.diagnostics;
  json steps = json::array();
  for (const StepRecord& s : log.steps) {
    json js;
    js["step"] = s.step;
    js["t"] = s.t;
    js["uav"] = vec2(s.uav);
    js["uav_velocity"] = vec2(s.uav_velocity);
    js["yaw"] = s.yaw;
    js["min_clearance"] = finite_or_null(s.min_clearance);
    json obs = json::array();
    for (const auto& o : s.obstacles)
      obs.push_back({{"position", vec2(o.position)}, {"velocity", vec2(o.velocity)}, {"active", o.active}});
    js["obstacles"] = std::move(obs);
    json det = json::array();
    for (const auto& d : s.detections)
      det.push_back({{"position", vec2(d.position)},
                     {"velocity", vec2(d.velocity)},
                     {"radius", d.radius},
                     {"source", d.source}});
    js["detections"] = std::move(det);
    js["cost"] = {{"total", s.cost.total}, {"j_v", s.cost.j_v},         {"j_c", s.cost.j_c},
                  {"j_s", s.cost.j_s},     {"j_d", s.cost.j_d},         {"iterations", s.cost.iterations},
                  {"evaluations", s.cost.evaluations}, {"status", s.cost.status}};
    json plan = json::array();
    for (const auto& p : s.plan) plan.push_back(vec3(p));
    js["plan"] = std::move(plan);
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j.dump() + "\n";
}

TrialLog trial_log_from_json(const std::string& text) {
  const json j = json::parse(text);
  TrialLog log;
  log.format_version = j.at("format_version").get<int>();
  if (log.format_version != kFormatVersion)
    throw std::runtime_error("unsupported trial log format_version " + std::to_string(log.format_version));
  log.scenario = j.at("scenario").get<std::string>();
  log.variant = j.at("variant").get<std::string>();
  log.seed = j.at("seed").get<std::uint64_t>();
  log.dt = j.at("dt").get<double>();
  log.plan_dt_knot = j.at("plan_dt_knot").get<double>();
  const auto status = parse_trial_status(j.at("status").get<std::string>());
  if (!status) throw std::runtime_error("unknown trial status");
  log.status = *status;
  log.diagnostics = j.at("diagnostics").get<std::string>();
  for (const json& js : j.at("steps")) {
    StepRecord s;
    s.step = js.at("step").get<int>();
    s.t = js.at("t").get<double>();
    s.uav = read2(js.at("uav"));
    s.uav_velocity = read2(js.at("uav_velocity"));
    s.yaw = js.at("yaw").get<double>();
    s.min_clearance = read_or_inf(js.at("min_clearance"));
    for (const json& o : js.at("obstacles"))
      s.obstacles.push_back({read2(o.at("position")), read2(o.at("velocity")), o.at("active").get<bool>()});
    for (const json& d : js.at("detections")) {
      Detection det;
      det.position = read2(d.at("position"));
      det.velocity = read2(d.at("velocity"));
      det.radius = d.at("radius").get<double>();
      det.source = d.at("source").get<int>();
      s.detections.push_back(det);
    }
    const json& c = js.at("cost");
    s.cost.total = c.at("total").get<double>();
    s.cost.j_v = c.at("j_v").get<double>();
    s.cost.j_c = c.at("j_c").get<double>();
    s.cost.j_s = c.at("j_s").get<double>();
    s.cost.j_d = c.at("j_d").get<double>();
    s.cost.iterations = c.at("iterations").get<int>();
    s.cost.evaluations = c.at("evaluations").get<int>();
    s.cost.status = c.at("status").get<std::string>();
    for (const json& p : js.at("plan")) s.plan.push_back(read3(p));
    log.steps.push_back(std::move(s));
  }
  return log;
}

std::string metrics_to_json(const MetricsRecord& m) {
  json j;
  j["format_version"] = m.format_version;
  j["scenario"] = m.scenario;
  j["variant"] = m.variant;
  j["d_f"] = m.d_f;
  j["trials"] = m.trials;
  j["success_ratio"] = m.success_ratio;
  j["breakdown"] = {{"collision", m.collision_ratio}, {"failed", m.failed_ratio}};
  j["status_counts"] = {
      {"reached_goal", m.reached_goal}, {"collision", m.collisions}, {"timeout", m.timeouts}, {"failed", m.failed}};
  j["observation_lead_time"] = optional_number(m.observation_lead_time);
  j["time_coverage_ratio"] = optional_number(m.time_coverage_ratio);
  j["encounters"] = m.encounters;
  j["encounters_never_detected_before_entry"] = m.encounters_never_detected;
  j["obstacles_never_within_d_f"] = m.excluded_obstacles;
  json per = json::array();
  for (const auto& t : m.per_trial) {
    json enc = json::array();
    for (const auto& e : t.encounters)
      enc.push_back({{"obstacle", e.obstacle},
                     {"t_enter", e.t_enter},
                     {"t_first_detection", optional_number(e.t_first_detection)},
                     {"lead_time", e.lead_time},
                     {"never_detected_before_entry", e.lead_flagged},
                     {"steps_in_range", e.steps_in_range},
                     {"steps_seen", e.steps_seen},
                     {"coverage", e.coverage}});
    per.push_back({{"seed", t.seed},
                   {"status", to_string(t.status)},
                   {"collision_free", t.collision_free},
                   {"coverage", optional_number(t.coverage)},
                   {"obstacles_never_within_d_f", t.excluded_obstacles},
                   {"encounters", std::move(enc)}});
  }
  j["per_trial"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const TrialLog& log) {
  std::string out = kCsvVersion;
  out += "step,t,x,y,vx,vy,yaw,min_clearance,detections\n";
  for (const auto& s : log.steps) {
    out += std::to_string(s.step) + ',' + fmt(s.t) + ',' + fmt(s.uav.x()) + ',' + fmt(s.uav.y()) + ',' +
           fmt(s.uav_velocity.x()) + ',' + fmt(s.uav_velocity.y()) + ',' + fmt(s.yaw) + ',' + fmt(s.min_clearance) +
           ',' + std::to_string(s.detections.size()) + '\n';
  }
  return out;
}

std::string yaw_csv(const TrialLog& log) {
  std::string out = kCsvVersion;
  out += "step,t,yaw,detected\n";
  for (const auto& s : log.steps) {
    std::string ids;
    for (const auto& d : s.detections) {
      if (!ids.empty()) ids += ';';
      ids += std::to_string(d.source);
    }
    out += std::to_string(s.step) + ',' + fmt(s.t) + ',' + fmt(s.yaw) + ',' + ids + '\n';
  }
  return out;
}

std::string plans_csv(const TrialLog& log) {
  std::string out = kCsvVersion;
  out += "step,index,x,y,z\n";
  for (const auto& s : log.steps)
    for (std::size_t i = 0; i < s.plan.size(); ++i)
      out += std::to_string(s.step) + ',' + std::to_string(i) + ',' + fmt(s.plan[i].x()) + ',' + fmt(s.plan[i].y()) +
             ',' + fmt(s.plan[i].z()) + '\n';
  return out;
}

std::string raster_csv(const BeliefGrid& grid) {
  std::string out = kCsvVersion;
  out += "ix,iy,x,y,value\n";
  const GridShape& sh = grid.shape();
  for (int iy = 0; iy < sh.height; ++iy)
    for (int ix = 0; ix < sh.width; ++ix) {
      const Eigen::Vector2d c = sh.cell_center(ix, iy);
      out += std::to_string(ix) + ',' + std::to_string(iy) + ',' + fmt(c.x()) + ',' + fmt(c.y()) + ',' +
             fmt(grid.at(ix, iy)) + '\n';
    }
  return out;
}

std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text) {
  std::vector<TrajectoryRow> out;
  for (const auto& r : csv_rows(text)) {
    if (r.size() < 8) throw std::runtime_error("trajectory CSV row with " + std::to_string(r.size()) + " fields");
    TrajectoryRow row;
    row.step = std::stoi(r[0]);
    row.t = num(r[1]);
    row.position = {num(r[2]), num(r[3])};
    row.velocity = {num(r[4]), num(r[5])};
    row.yaw = num(r[6]);
    row.min_clearance = num(r[7]);
    out.push_back(row);
  }
  return out;
}

std::vector<PlanRows> parse_plans_csv(const std::string& text) {
  std::vector<PlanRows> out;
  for (const auto& r : csv_rows(text)) {
    if (r.size() != 5) throw std::runtime_error("plan CSV row with " + std::to_string(r.size()) + " fields");
    const int step = std::stoi(r[0]);
    if (out.empty() || out.back().step != step) out.push_back({step, {}});
    out.back().points.emplace_back(num(r[2]), num(r[3]), num(r[4]));
  }
  return out;
}

void RunConfig::validate() const {
  if (trials < 1) throw ParameterError("trials must be >= 1");
  if (!(d_f > 0.0)) throw ParameterError("d_f must be positive");
  if (jobs < 1) throw ParameterError("jobs must be >= 1");
  if (snapshot_stride < 0) throw ParameterError("snapshot stride must be >= 0");
}

namespace {

struct TrialOutput {
  TrialLog log;
  std::vector<std::pair<int, std::string>> snapshots;  // step, raster CSV
};

TrialOutput run_one(const ScenarioSpec& spec, const RunConfig& cfg, std::uint64_t seed) {
  TrialOutput out;
  TrialOptions opt;
  if (cfg.snapshot_stride > 0) {
    opt.observer = [&](const StepView& v) {
      if (!v.plan || v.state.step % cfg.snapshot_stride != 0) return;
      if (!v.plan->yaw_field.u_p.values().empty()) {
        out.snapshots.emplace_back(v.state.step, raster_csv(v.plan->yaw_field.u_p));
      } else {
        const UrgencyField f =
            build_urgency_field(v.belief, v.plan->trajectory, spec.planner.urgency, spec.planner.belief);
        out.snapshots.emplace_back(v.state.step, raster_csv(f.u_p));
      }
    };
  }
  out.log = run_trial(spec, cfg.variant, seed, opt);
  return out;
}

std::vector<TrialOutput> run_all(const ScenarioSpec& spec, const RunConfig& cfg) {
  std::vector<TrialOutput> results(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int k = next++; k < cfg.trials; k = next++)
      results[static_cast<std::size_t>(k)] = run_one(spec, cfg, cfg.seed + static_cast<std::uint64_t>(k));
  };
  const int n = std::min(cfg.jobs, cfg.trials);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace

std::vector<TrialLog> run_trials(const ScenarioSpec& spec, const RunConfig& cfg) {
  cfg.validate();
  RunConfig c = cfg;
  c.snapshot_stride = 0;
  std::vector<TrialLog> logs;
  for (auto& r : run_all(spec, c)) logs.push_back(std::move(r.log));
  return logs;
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  try {
    cfg.validate();
    spec = load_scenario(cfg.scenario_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const std::vector<TrialOutput> results = run_all(spec, cfg);

  const fs::path root(cfg.out_dir);
  fs::create_directories(root / "logs");
  fs::create_directories(root / "csv");
  if (cfg.snapshot_stride > 0) fs::create_directories(root / "urgency");
  std::vector<TrialLog> logs;
  int failed = 0;
  for (const TrialOutput& r : results) {
    const std::string tag = std::to_string(r.log.seed);
    write_file(root / "logs" / ("trial_" + tag + ".json"), trial_log_to_json(r.log));
    write_file(root / "csv" / ("trajectory_" + tag + ".csv"), trajectory_csv(r.log));
    write_file(root / "csv" / ("yaw_" + tag + ".csv"), yaw_csv(r.log));
    write_file(root / "csv" / ("plans_" + tag + ".csv"), plans_csv(r.log));
    for (const auto& [step, csv] : r.snapshots)
      write_file(root / "urgency" / ("urgency_" + tag + "_" + std::to_string(step) + ".csv"), csv);
    if (r.log.status == TrialStatus::Failed) {
      ++failed;
      err << "trial " << tag << " failed: " << r.log.diagnostics << "\n";
    }
    logs.push_back(r.log);
  }
  const MetricsRecord m = compute_metrics(logs, cfg.d_f);
  write_file(root / "metrics.json", metrics_to_json(m));

  out << "scenario " << m.scenario << " variant " << m.variant << " trials " << m.trials << "\n";
  out << "success_ratio " << m.success_ratio << " %  (collision " << m.collision_ratio << " %, failed "
      << m.failed_ratio << " %)\n";
  out << "observation_lead_time ";
  if (m.observation_lead_time)
    out << *m.observation_lead_time << " s over " << m.encounters << " encounters ("
        << m.encounters_never_detected << " never detected before entry)\n";
  else
    out << "n/a (no encounters)\n";
  out << "time_coverage_ratio ";
  if (m.time_coverage_ratio)
    out << *m.time_coverage_ratio << " %\n";
  else
    out << "n/a\n";
  if (failed > 0) out << failed << " trial(s) failed\n";
  return 0;
}

bool GradcheckReport::pass() const {
  return std::all_of(terms.begin(), terms.end(), [](const GradcheckTerm& t) { return t.pass(); });
}

namespace {

struct GradInstance {
  Trajectory traj;
  UrgencyField field;
  std::vector<ObstacleTrack> tracks;
  OccupancyGrid occ;
  PlannerWeights w;
  double range = 2.0;
};

GradInstance random_instance(std::mt19937_64& rng, bool zero_weights) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  GradInstance in;
  GridShape shape;
  shape.width = 100;
  shape.height = 100;
  shape.resolution = 0.1;
  shape.origin = Eigen::Vector2d(0.05, 0.05);

  in.field.u_p = BeliefGrid(shape, 0.0);
  for (int b = 0; b < 5; ++b) {
    const Eigen::Vector2d c(10.0 * u(rng), 10.0 * u(rng));
    const double width = 0.5 + 1.5 * u(rng), amp = u(rng);
    for (std::size_t i = 0; i < shape.size(); ++i)
      in.field.u_p[i] += amp * std::exp(-(shape.cell_center(i) - c).squaredNorm() / (2.0 * width * width));
  }

  // A wiggly segment inside [3, 7]^2 so every sensing disk stays on the map.
  const Eigen::Vector2d a(3.2 + 0.6 * u(rng), 3.2 + 3.6 * u(rng));
  const Eigen::Vector2d b(6.2 + 0.6 * u(rng), 3.2 + 3.6 * u(rng));
  in.traj = Trajectory::straight_line({a.x(), a.y(), 1.0}, {b.x(), b.y(), 1.0}, 21, 0.1, 0.0);
  const double amp = 0.02 + 0.1 * u(rng);
  for (auto& p : in.traj.points) {
    p.x() += amp * g(rng);
    p.y() += amp * g(rng);
  }

  for (int k = 0; k < 3; ++k) {
    const auto& p = in.traj.points[static_cast<std::size_t>(4 + 6 * k)];
    ObstacleTrack t;
    t.id = k;
    t.position = Eigen::Vector2d(p.x(), p.y()) + 0.8 * Eigen::Vector2d(g(rng), g(rng));
    t.velocity = Eigen::Vector2d(g(rng), g(rng));
    t.radius = 0.3;
    in.tracks.push_back(t);
  }

  in.occ = OccupancyGrid(shape);
  const Eigen::Vector2d mid = 0.5 * (a + b);
  const Eigen::Vector2d lo = mid + Eigen::Vector2d(-0.3 + 0.2 * g(rng), 0.9 + 0.3 * u(rng));
  in.occ.fill_box(lo, lo + Eigen::Vector2d(0.6, 0.4));

  in.range = 1.0 + 1.5 * u(rng);
  // Low limits so the feasibility hinges engage.
  in.w.v_max = 0.5 + 2.0 * u(rng);
  in.w.a_max = 1.0 + 5.0 * u(rng);
  in.w.j_max = 5.0 + 30.0 * u(rng);
  if (zero_weights) {
    in.w.lambda_v = in.w.lambda_c = in.w.lambda_s = in.w.lambda_d = 0.0;
  }
  return in;
}

std::vector<Eigen::Vector2d> fd_gradient(const Trajectory& t, const std::function<double(const Trajectory&)>& f,
                                         double eps) {
  std::vector<Eigen::Vector2d> grad(t.size(), Eigen::Vector2d::Zero());
  Trajectory work = t;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (int ax = 0; ax < 2; ++ax) {
      const double x0 = t.points[i][ax];
      work.points[i][ax] = x0 + eps;
      const double fp = f(work);
      work.points[i][ax] = x0 - eps;
      const double fm = f(work);
      work.points[i][ax] = x0;
      grad[i][ax] = (fp - fm) / (2.0 * eps);
    }
  return grad;
}

double relative_error(const std::vector<Eigen::Vector2d>& analytic, const std::vector<Eigen::Vector2d>& fd) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    diff = std::max(diff, (analytic[i] - fd[i]).cwiseAbs().maxCoeff());
    scale = std::max(scale, fd[i].cwiseAbs().maxCoeff());
  }
  return scale > 1e-12 ? diff / scale : diff;
}

std::vector<Eigen::Vector2d> scaled(std::vector<Eigen::Vector2d> g, double s) {
  for (auto& v : g) v *= s;
  return g;
}

}  // namespace

GradcheckReport gradcheck(const GradcheckOptions& opt) {
  if (opt.instances < 1) throw ParameterError("gradcheck needs at least one instance");
  GradcheckReport rep;
  rep.instances = opt.instances;
  rep.terms = {{"j_v", 0.0, 1e-3}, {"j_c", 0.0, 1e-4}, {"j_s", 0.0, 1e-6}, {"j_d", 0.0, 1e-4}};
  std::mt19937_64 rng(opt.seed);
  for (int k = 0; k < opt.instances; ++k) {
    const GradInstance in = random_instance(rng, opt.zero_weights);
    const PlannerWeights& w = in.w;

    const auto jv = [&](const Trajectory& t) { return w.lambda_v * cost_observation(t, in.field, in.range).value; };
    const auto jc = [&](const Trajectory& t) { return w.lambda_c * cost_collision(t, in.tracks, &in.occ, w).value; };
    const auto js = [&](const Trajectory& t) { return w.lambda_s * cost_smoothness(t, w).value; };
    const auto jd = [&](const Trajectory& t) { return w.lambda_d * cost_feasibility(t, w).value; };

    const double errs[4] = {
        relative_error(scaled(cost_observation(in.traj, in.field, in.range).gradient, w.lambda_v),
                       fd_gradient(in.traj, jv, 1e-5)),
        relative_error(scaled(cost_collision(in.traj, in.tracks, &in.occ, w).gradient, w.lambda_c),
                       fd_gradient(in.traj, jc, 1e-6)),
        relative_error(scaled(cost_smoothness(in.traj, w).gradient, w.lambda_s), fd_gradient(in.traj, js, 1e-5)),
        relative_error(scaled(cost_feasibility(in.traj, w).gradient, w.lambda_d), fd_gradient(in.traj, jd, 1e-6)),
    };
    for (int t = 0; t < 4; ++t) rep.terms[static_cast<std::size_t>(t)].max_error =
        std::max(rep.terms[static_cast<std::size_t>(t)].max_error, errs[t]);
  }
  return rep;
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out) {
  const GradcheckReport rep = gradcheck(opt);
  out << "gradcheck instances " << rep.instances << " seed " << opt.seed << (opt.zero_weights ? " zero-weights" : "")
      << "\n";
  for (const auto& t : rep.terms) {
    char line[128];
    std::snprintf(line, sizeof line, "%-4s max_rel_error %.3e tolerance %.0e %s\n", t.name.c_str(), t.max_error,
                  t.tolerance, t.pass() ? "ok" : "FAIL");
    out << line;
  }
  return rep.pass() ? 0 : 1;
}

namespace {

BenchStage summarize(const std::string& name, std::vector<double> ms) {
  std::sort(ms.begin(), ms.end());
  BenchStage s;
  s.name = name;
  s.repetitions = static_cast<int>(ms.size());
  const std::size_t n = ms.size();
  s.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  const std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
  s.p95_ms = ms[std::min(k, n - 1)];
  return s;
}

template <class F>
BenchStage time_stage(const std::string& name, int reps, F&& f) {
  std::vector<double> ms;
  f();  // warm-up
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return summarize(name, std::move(ms));
}

}  // namespace

std::vector<BenchStage> bench(const BenchOptions& opt) {
  if (opt.repetitions < 1) throw ParameterError("bench needs at least one repetition");
  std::vector<BenchStage> out;
  const PlannerConfig cfg;

  GridShape shape;
  shape.width = shape.height = opt.grid_cells;
  shape.resolution = 0.1;
  shape.origin = Eigen::Vector2d(0.05, 0.05);
  const double side = shape.resolution * opt.grid_cells;
  const Eigen::Vector2d c(0.5 * side, 0.5 * side);

  BeliefState belief = init_belief(cfg.belief, shape);
  const SectorRegion fov{c, 0.0, cfg.sensor.half_angle, cfg.sensor.range};
  std::vector<Detection> dets(1);
  dets[0].position = c + Eigen::Vector2d(3.0, 0.5);
  dets[0].velocity = Eigen::Vector2d(-1.0, 0.0);
  for (int i = 0; i < 5; ++i) belief = step(belief, fov, dets, cfg.belief);
  const Trajectory traj =
      Trajectory::straight_line({c.x(), c.y(), 1.0}, {c.x() + 3.0, c.y() + 1.0, 1.0}, 21, cfg.dt_knot, belief.t);

  UrgencyField field;
  out.push_back(time_stage("urgency_field", opt.repetitions,
                           [&] { field = build_urgency_field(belief, traj, cfg.urgency, cfg.belief); }));
  out.push_back(time_stage("observation_gradient", opt.repetitions, [&] {
    const CostTerm t = cost_observation(traj, field, cfg.sensor.range, cfg.optimize.gradient_samples);
    (void)t;
  }));

  if (!opt.scenario_path.empty()) {
    const ScenarioSpec spec = load_scenario(opt.scenario_path);
    const OccupancyGrid occ = spec.occupancy();
    const ReferencePath reference(plan_reference(occ, spec.start, spec.goal, spec.planner.reference_inflation));
    // Capture a mid-course state, then replan from it repeatedly.
    std::optional<BeliefState> snap;
    Trajectory previous;
    PlanContext ctx;
    TrialOptions topt;
    topt.stop_at = 0.25 * spec.duration > 3.0 ? 3.0 : 0.25 * spec.duration;
    topt.observer = [&](const StepView& v) {
      if (!v.plan) return;
      snap = v.belief;
      previous = v.plan->trajectory;
      ctx.position = v.state.uav;
      ctx.t = v.state.t;
      ctx.yaw = v.state.yaw;
      ctx.progress = v.plan->progress;
    };
    run_trial(spec, Variant::Spot, spec.seed, topt);
    if (snap) {
      ctx.belief = &*snap;
      ctx.occupancy = &occ;
      ctx.reference = &reference;
      ctx.previous = &previous;
      out.push_back(time_stage("replan_spot", opt.repetitions, [&] {
        const PlanResult r = plan_step(ctx, spec.planner, Variant::Spot);
        (void)r;
      }));
    }
  }
  return out;
}

int cmd_bench(const BenchOptions& opt, const std::string& out_path, std::ostream& out) {
  const std::vector<BenchStage> stages = bench(opt);
  json j;
  j["format_version"] = kFormatVersion;
  j["grid"] = {opt.grid_cells, opt.grid_cells};
  json js = json::array();
  for (const auto& s : stages) {
    js.push_back({{"name", s.name}, {"repetitions", s.repetitions}, {"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}});
    char line[128];
    std::snprintf(line, sizeof line, "%-22s reps %4d median %8.3f ms p95 %8.3f ms\n", s.name.c_str(), s.repetitions,
                  s.median_ms, s.p95_ms);
    out << line;
  }
  j["stages"] = std::move(js);
  if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_snapshot(const SnapshotConfig& cfg, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  try {
    if (!(cfg.at >= 0.0)) throw ParameterError("--at must be >= 0");
    spec = load_scenario(cfg.scenario_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  std::optional<BeliefState> belief;
  std::optional<PlanResult> plan;
  SimState state;
  TrialOptions topt;
  topt.stop_at = cfg.at;
  topt.observer = [&](const StepView& v) {
    belief = v.belief;
    state = v.state;
    if (v.plan) plan = *v.plan;
  };
  const TrialLog log = run_trial(spec, cfg.variant, cfg.seed, topt);
  if (!belief) {
    err << "error: trial ended before any step: " << log.diagnostics << "\n";
    return 1;
  }

  const fs::path root(cfg.out_dir);
  fs::create_directories(root);
  const BeliefParams& bp = spec.planner.belief;
  write_file(root / "m_p.csv", raster_csv(belief->m_p));
  write_file(root / "m_r.csv", raster_csv(render_m_r(*belief, bp)));
  UrgencyField field;
  if (plan && !plan->yaw_field.u_p.values().empty())
    field = plan->yaw_field;
  else if (plan)
    field = build_urgency_field(*belief, plan->trajectory, spec.planner.urgency, bp);
  if (plan) write_file(root / "u_p.csv", raster_csv(field.u_p));

  json j;
  j["format_version"] = kFormatVersion;
  j["scenario"] = spec.name;
  j["variant"] = to_string(cfg.variant);
  j["seed"] = cfg.seed;
  j["t"] = state.t;
  j["status"] = to_string(log.status);
  j["uav"] = vec2(state.uav);
  j["yaw"] = state.yaw;
  const GridShape& sh = belief->m_p.shape();
  j["grid"] = {{"origin", vec2(sh.origin)}, {"resolution", sh.resolution}, {"width", sh.width}, {"height", sh.height}};
  json tracks = json::array();
  for (const auto& t : belief->tracks) {
    const auto it = field.u_r.find(t.id);
    tracks.push_back({{"id", t.id},
                      {"position", vec2(t.position)},
                      {"velocity", vec2(t.velocity)},
                      {"t_o", t.t_o},
                      {"u_r", it != field.u_r.end() ? json(it->second) : json(nullptr)}});
  }
  j["tracks"] = std::move(tracks);
  json pts = json::array();
  if (plan)
    for (const auto& p : plan->trajectory.points) pts.push_back(vec3(p));
  j["plan"] = std::move(pts);
  if (plan) j["next_yaw"] = plan->yaw;
  write_file(root / "snapshot.json", j.dump(2) + "\n");
  out << "snapshot at t=" << state.t << " written to " << root.string() << "\n";
  return 0;
}

}  // namespace spot
