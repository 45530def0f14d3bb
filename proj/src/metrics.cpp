#include "spot/metrics.hpp"

#include <algorithm>

namespace spot {

namespace {

bool detected(const StepRecord& s, int index) {
  return std::any_of(s.detections.begin(), s.detections.end(), [&](const Detection& d) { return d.source == index; });
}

}  // namespace

std::vector<Encounter> find_encounters(const TrialLog& log, int index, double d_f) {
  std::vector<Encounter> out;
  const std::size_t n = log.steps.size();
  std::size_t search_from = 0;  // first step that may hold the detection for the next encounter
  std::size_t i = 0;
  while (i < n) {
    const auto in_range = [&](std::size_t k) {
      const StepRecord& s = log.steps[k];
      if (index < 0 || static_cast<std::size_t>(index) >= s.obstacles.size()) return false;
      return (s.obstacles[static_cast<std::size_t>(index)].position - s.uav).norm() <= d_f;
    };
    if (!in_range(i)) {
      ++i;
      continue;
    }
    Encounter e;
    e.obstacle = index;
    e.enter_step = log.steps[i].step;
    e.t_enter = log.steps[i].t;
    for (std::size_t k = search_from; k <= i; ++k)
      if (detected(log.steps[k], index)) {
        e.t_first_detection = log.steps[k].t;
        break;
      }
    std::size_t j = i;
    while (j < n && in_range(j)) {
      ++e.steps_in_range;
      if (detected(log.steps[j], index)) ++e.steps_seen;
      ++j;
    }
    if (e.t_first_detection) {
      e.lead_time = e.t_enter - *e.t_first_detection;
    } else {
      e.lead_time = 0.0;
      e.lead_flagged = true;
    }
    e.coverage = 100.0 * e.steps_seen / e.steps_in_range;
    out.push_back(e);
    search_from = j;
    i = j;
  }
  return out;
}

TrialMetrics trial_metrics(const TrialLog& log, double d_f) {
  TrialMetrics m;
  m.seed = log.seed;
  m.status = log.status;
  m.collision_free = log.status != TrialStatus::Collision;
  const std::size_t n_obs = log.steps.empty() ? 0 : log.steps.front().obstacles.size();
  for (std::size_t k = 0; k < n_obs; ++k) {
    auto enc = find_encounters(log, static_cast<int>(k), d_f);
    if (enc.empty()) ++m.excluded_obstacles;
    m.encounters.insert(m.encounters.end(), enc.begin(), enc.end());
  }
  if (!m.encounters.empty()) {
    double acc = 0.0;
    for (const auto& e : m.encounters) acc += e.coverage;
    m.coverage = acc / static_cast<double>(m.encounters.size());
  }
  return m;
}

MetricsRecord compute_metrics(const std::vector<TrialLog>& logs, double d_f) {
  if (logs.empty()) throw ContractError("compute_metrics needs at least one log");
  if (!(d_f > 0.0)) throw ContractError("d_f must be positive");
  MetricsRecord r;
  r.scenario = logs.front().scenario;
  r.variant = logs.front().variant;
  r.d_f = d_f;
  r.trials = static_cast<int>(logs.size());
  double lead_sum = 0.0, cov_sum = 0.0;
  int cov_trials = 0;
  for (const auto& log : logs) {
    TrialMetrics m = trial_metrics(log, d_f);
    switch (log.status) {
      case TrialStatus::ReachedGoal: ++r.reached_goal; break;
      case TrialStatus::Collision: ++r.collisions; break;
      case TrialStatus::Timeout: ++r.timeouts; break;
      case TrialStatus::Failed: ++r.failed; break;
    }
    for (const auto& e : m.encounters) {
      lead_sum += e.lead_time;
      if (e.lead_flagged) ++r.encounters_never_detected;
    }
    r.encounters += static_cast<int>(m.encounters.size());
    r.excluded_obstacles += m.excluded_obstacles;
    if (m.coverage) {
      cov_sum += *m.coverage;
      ++cov_trials;
    }
    r.per_trial.push_back(std::move(m));
  }
  const double trials = r.trials;
  r.collision_ratio = 100.0 * r.collisions / trials;
  r.failed_ratio = 100.0 * r.failed / trials;
  r.success_ratio = 100.0 * (r.reached_goal + r.timeouts) / trials;
  if (r.encounters > 0) r.observation_lead_time = lead_sum / r.encounters;
  if (cov_trials > 0) r.time_coverage_ratio = cov_sum / cov_trials;
  return r;
}

std::optional<double> first_detection_time(const TrialLog& log, int index) {
  for (const auto& s : log.steps)
    if (detected(s, index)) return s.t;
  return std::nullopt;
}

}  // namespace spot
