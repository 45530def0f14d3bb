#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spot/grid.hpp"
#include "spot/planner.hpp"

namespace spot {

/// Scenario file problem; the message names the offending field.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WallBox {
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max = Eigen::Vector2d::Zero();
};

/// Obstacle stays put until the UAV coordinate on `axis` (0 = x, 1 = y)
/// exceeds `threshold`.
struct Trigger {
  int axis = 0;
  double threshold = 0.0;
};

enum class PathMode { Loop, Once };

struct ObstacleSpec {
  double radius = 0.3;
  double speed = 1.0;  // m/s
  std::vector<Eigen::Vector2d> path;
  PathMode mode = PathMode::Loop;
  std::optional<Trigger> trigger;
  /// Per-trial uniform jitter half-widths drawn from the trial seed.
  double speed_jitter = 0.0;
  double trigger_jitter = 0.0;
};

struct SensorConfig {
  double half_angle = 0.759;  // rad
  double range = 5.0;         // m
  double noise_sigma = 0.0;   // m, position noise on detections
};

struct ScenarioSpec {
  int format_version = 1;
  std::string name;
  Eigen::Vector2d map_extent = Eigen::Vector2d(20.0, 20.0);
  double resolution = 0.1;
  std::vector<WallBox> walls;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  std::vector<ObstacleSpec> obstacles;
  SensorConfig sensor;
  double duration = 30.0;
  std::uint64_t seed = 0;
  /// Planner, belief and urgency settings; the sensor fields are kept in
  /// sync with `sensor`.
  PlannerConfig planner;

  GridShape grid_shape() const;
  OccupancyGrid occupancy() const;
  /// Throws ScenarioError on the first violated field.
  void validate() const;
};

ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::string& path);

}  // namespace spot
