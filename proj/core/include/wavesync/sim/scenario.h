#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavesync/pose_graph.h"

namespace wavesync::sim {

// Odometry drift: per-axis translational and yaw random walks applied to the
// relative motion, plus an optional one-time step fault (localization jump).
struct DriftModel {
  double translation_sigma = 0.0;  // m / sqrt(s), per axis
  double yaw_sigma = 0.0;          // rad / sqrt(s)
  bool has_step_fault = false;
  double step_fault_time_s = 0.0;
  Eigen::Vector3d step_fault_translation = Eigen::Vector3d::Zero();
  double step_fault_yaw_rad = 0.0;
};

struct RobotSpec {
  std::vector<Eigen::Vector3d> waypoints;  // meters, polyline
  double speed_mps = 1.0;
  DriftModel drift;
};

struct Scenario {
  std::string name = "custom";
  std::uint64_t seed = 0;
  std::vector<RobotSpec> robots;
  double odometry_rate_hz = 10.0;
  double submap_period_s = 10.0;
  double epoch_period_s = 20.0;
};

// Named presets: "tunnel", "euroc-like", "indoor-outdoor".
Scenario scenario_preset(const std::string& name, std::uint64_t seed);
std::vector<std::string> preset_names();

// JSON scenario file. Throws InvalidSpec on malformed input.
Scenario load_scenario(const std::string& path);

// Clone with all drift and faults disabled (calibration runs).
Scenario without_drift(const Scenario& scenario);

struct RobotTrajectories {
  int robot_id = 0;
  PoseGraph ground_truth;
  PoseGraph odometry;
};

// Samples ground truth along each robot's polyline at the odometry rate and
// integrates drifted odometry on top; deterministic in the seed. With all
// drift zero the odometry equals the ground truth exactly.
std::vector<RobotTrajectories> generate_scenario(const Scenario& scenario);

// Node ids are robot_id * 10^7 + sample index; submaps cut by period.
std::int64_t node_id_for(int robot_id, int sample_index);

}  // namespace wavesync::sim
