#include "wavesync/sim/scenario.h"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "wavesync/error.h"

namespace wavesync::sim {
namespace {

constexpr std::int64_t kRobotIdStride = 10'000'000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Positions along the polyline at arc-length `s`, with the segment heading.
struct PathSample {
  Eigen::Vector3d position;
  double yaw;
};

class PolylinePath {
 public:
  explicit PolylinePath(const std::vector<Eigen::Vector3d>& waypoints)
      : points_(waypoints) {
    if (points_.size() < 2) {
      throw InvalidSpec("robot trajectory needs at least 2 waypoints");
    }
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double len = (points_[i] - points_[i - 1]).norm();
      if (len <= 0.0) throw InvalidSpec("repeated waypoint in trajectory");
      cumulative_.push_back(cumulative_.back() + len);
    }
  }

  double length() const { return cumulative_.back(); }

  PathSample at(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t seg = 1;
    while (seg + 1 < cumulative_.size() && cumulative_[seg] < s) ++seg;
    const double t =
        (s - cumulative_[seg - 1]) / (cumulative_[seg] - cumulative_[seg - 1]);
    const Eigen::Vector3d dir = points_[seg] - points_[seg - 1];
    PathSample sample;
    sample.position = points_[seg - 1] + t * dir;
    sample.yaw = std::atan2(dir.y(), dir.x());
    return sample;
  }

 private:
  std::vector<Eigen::Vector3d> points_;
  std::vector<double> cumulative_;
};

Scenario tunnel_preset(std::uint64_t seed) {
  Scenario s;
  s.name = "tunnel";
  s.seed = seed;
  s.odometry_rate_hz = 10.0 / 3.0;
  s.submap_period_s = 10.0;
  s.epoch_period_s = 120.0;

  // Two serpentine corridor systems sharing an entrance, roughly 1.2 km
  // each; parallel passes let submap constraints bridge revisits.
  RobotSpec r0;
  r0.speed_mps = 2.0;
  r0.waypoints = {{0.0, 0.0, 0.0},   {420.0, 0.0, 0.0},  {420.0, 28.0, 0.0},
                  {30.0, 28.0, 0.0}, {30.0, 56.0, 0.0},  {400.0, 56.0, 0.0}};
  r0.drift.translation_sigma = 0.02;
  r0.drift.yaw_sigma = 1.5e-3;

  RobotSpec r1;
  r1.speed_mps = 2.0;
  r1.waypoints = {{0.0, -6.0, 0.0},    {380.0, -6.0, 0.0},  {380.0, -34.0, 0.0},
                  {25.0, -34.0, 0.0},  {25.0, -62.0, 0.0},  {400.0, -62.0, 0.0}};
  r1.drift.translation_sigma = 0.02;
  r1.drift.yaw_sigma = 1.5e-3;

  s.robots = {r0, r1};
  return s;
}

Scenario euroc_like_preset(std::uint64_t seed) {
  Scenario s;
  s.name = "euroc-like";
  s.seed = seed;
  s.odometry_rate_hz = 10.0;
  s.submap_period_s = 10.0;
  s.epoch_period_s = 15.0;

  // Three short indoor loops in a shared hall.
  auto loop = [](double cx, double cy, double w, double h) {
    return std::vector<Eigen::Vector3d>{{cx - w, cy - h, 0.0}, {cx + w, cy - h, 0.0},
                                        {cx + w, cy + h, 0.0}, {cx - w, cy + h, 0.0},
                                        {cx - w, cy - h, 0.0}, {cx + w, cy - h, 0.2}};
  };
  for (int i = 0; i < 3; ++i) {
    RobotSpec r;
    r.speed_mps = 1.03;
    r.waypoints = loop(6.0 * i, 2.0 * i, 8.0, 5.0);
    r.drift.translation_sigma = 0.01;
    r.drift.yaw_sigma = 4e-4;
    s.robots.push_back(r);
  }
  return s;
}

Scenario indoor_outdoor_preset(std::uint64_t seed) {
  Scenario s;
  s.name = "indoor-outdoor";
  s.seed = seed;
  s.odometry_rate_hz = 10.0;
  s.submap_period_s = 10.0;
  s.epoch_period_s = 15.0;

  // First robot loops indoors.
  RobotSpec r0;
  r0.speed_mps = 1.03;
  r0.waypoints = {{0.0, 0.0, 0.0},  {40.0, 0.0, 0.0}, {40.0, 15.0, 0.0},
                  {0.0, 15.0, 0.0}, {0.0, 0.0, 0.0},  {40.0, 0.0, 0.0},
                  {40.0, 15.0, 0.0}};
  r0.drift.translation_sigma = 0.006;
  r0.drift.yaw_sigma = 8e-5;

  // Second robot transitions outdoors, suffers a localization jump on the
  // terrace, and returns.
  RobotSpec r1;
  r1.speed_mps = 1.03;
  r1.waypoints = {{0.0, -4.0, 0.0},  {42.0, -4.0, 0.0},  {42.0, -30.0, 0.5},
                  {75.0, -30.0, 0.5}, {75.0, -4.0, 0.5},  {42.0, -4.0, 0.0},
                  {0.0, -4.0, 0.0}};
  r1.drift.translation_sigma = 0.006;
  r1.drift.yaw_sigma = 8e-5;
  r1.drift.has_step_fault = true;
  r1.drift.step_fault_time_s = 70.0;
  r1.drift.step_fault_translation = Eigen::Vector3d(0.0, 6.0, 0.0);
  r1.drift.step_fault_yaw_rad = 0.18;

  s.robots = {r0, r1};
  return s;
}

DriftModel drift_from_json(const nlohmann::json& j) {
  DriftModel d;
  d.translation_sigma = j.value("translation_sigma", 0.0);
  d.yaw_sigma = j.value("yaw_sigma", 0.0);
  if (j.contains("step_fault")) {
    const auto& f = j.at("step_fault");
    d.has_step_fault = true;
    d.step_fault_time_s = f.value("time_s", 0.0);
    const auto t = f.value("translation", std::vector<double>{0.0, 0.0, 0.0});
    if (t.size() != 3) throw InvalidSpec("step_fault.translation needs 3 entries");
    d.step_fault_translation = Eigen::Vector3d(t[0], t[1], t[2]);
    d.step_fault_yaw_rad = f.value("yaw_rad", 0.0);
  }
  return d;
}

}  // namespace

Scenario scenario_preset(const std::string& name, std::uint64_t seed) {
  if (name == "tunnel") return tunnel_preset(seed);
  if (name == "euroc-like") return euroc_like_preset(seed);
  if (name == "indoor-outdoor") return indoor_outdoor_preset(seed);
  throw InvalidSpec("unknown scenario preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"tunnel", "euroc-like", "indoor-outdoor"};
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("scenario json: ") + e.what());
  }

  Scenario s;
  s.name = j.value("name", "custom");
  s.seed = j.value("seed", 0ULL);
  s.odometry_rate_hz = j.value("odometry_rate_hz", 10.0);
  s.submap_period_s = j.value("submap_period_s", 10.0);
  s.epoch_period_s = j.value("epoch_period_s", 20.0);
  if (!j.contains("robots") || !j.at("robots").is_array() || j.at("robots").empty()) {
    throw InvalidSpec("scenario json: missing robots array");
  }
  for (const auto& rj : j.at("robots")) {
    RobotSpec r;
    r.speed_mps = rj.value("speed_mps", 1.0);
    if (!rj.contains("waypoints")) throw InvalidSpec("robot needs waypoints");
    for (const auto& wp : rj.at("waypoints")) {
      if (!wp.is_array() || wp.size() != 3) {
        throw InvalidSpec("waypoints must be [x, y, z] triples");
      }
      r.waypoints.emplace_back(wp[0].get<double>(), wp[1].get<double>(),
                               wp[2].get<double>());
    }
    if (rj.contains("drift")) r.drift = drift_from_json(rj.at("drift"));
    s.robots.push_back(r);
  }
  if (s.odometry_rate_hz <= 0.0 || s.submap_period_s <= 0.0 || s.epoch_period_s <= 0.0) {
    throw InvalidSpec("scenario rates and periods must be positive");
  }
  return s;
}

Scenario without_drift(const Scenario& scenario) {
  Scenario clean = scenario;
  for (RobotSpec& r : clean.robots) r.drift = DriftModel{};
  return clean;
}

std::int64_t node_id_for(int robot_id, int sample_index) {
  return static_cast<std::int64_t>(robot_id) * kRobotIdStride + sample_index;
}

std::vector<RobotTrajectories> generate_scenario(const Scenario& scenario) {
  if (scenario.robots.empty()) throw InvalidSpec("scenario has no robots");
  if (scenario.odometry_rate_hz <= 0.0) throw InvalidSpec("odometry rate must be > 0");

  const double dt = 1.0 / scenario.odometry_rate_hz;
  const auto dt_ns = static_cast<std::int64_t>(std::llround(dt * 1e9));

  std::vector<RobotTrajectories> out;
  for (int robot = 0; robot < static_cast<int>(scenario.robots.size()); ++robot) {
    const RobotSpec& spec = scenario.robots[robot];
    const PolylinePath path(spec.waypoints);
    if (spec.speed_mps <= 0.0) throw InvalidSpec("robot speed must be > 0");
    const double duration = path.length() / spec.speed_mps;
    const int samples = static_cast<int>(std::floor(duration / dt)) + 1;

    RobotTrajectories traj;
    traj.robot_id = robot;
    traj.ground_truth.set_frame_id("world");
    traj.odometry.set_frame_id("odom_" + std::to_string(robot));

    std::mt19937_64 rng(splitmix64(scenario.seed ^ splitmix64(robot + 1)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    const DriftModel& drift = spec.drift;
    const bool noiseless = drift.translation_sigma == 0.0 && drift.yaw_sigma == 0.0 &&
                           !drift.has_step_fault;
    const double sigma_t_step = drift.translation_sigma * std::sqrt(dt);
    const double sigma_y_step = drift.yaw_sigma * std::sqrt(dt);
    // Odometry edges claim this uncertainty; floored so zero-drift runs keep
    // finite information.
    const double edge_sigma_t = std::max(sigma_t_step, 0.01);
    const double edge_sigma_r = std::max(sigma_y_step, 5e-3);
    const Matrix6d edge_info = isotropic_information(edge_sigma_t, edge_sigma_r);

    std::vector<Pose> gt_poses(samples);
    for (int k = 0; k < samples; ++k) {
      const PathSample sample = path.at(spec.speed_mps * k * dt);
      gt_poses[k] = Pose(sample.position,
                         Eigen::Quaterniond(
                             Eigen::AngleAxisd(sample.yaw, Eigen::Vector3d::UnitZ())));
    }

    std::vector<Pose> odom_poses(samples);
    std::vector<Pose> odom_rels(std::max(0, samples - 1));
    odom_poses[0] = gt_poses[0];
    bool fault_pending = drift.has_step_fault;
    for (int k = 0; k + 1 < samples; ++k) {
      const Pose rel = relative_pose(gt_poses[k], gt_poses[k + 1]);
      Pose noisy = rel;
      if (!noiseless) {
        const Eigen::Vector3d dtrans(sigma_t_step * gauss(rng), sigma_t_step * gauss(rng),
                                     sigma_t_step * gauss(rng));
        const double dyaw = sigma_y_step * gauss(rng);
        noisy = rel * Pose(dtrans, Eigen::Quaterniond(Eigen::AngleAxisd(
                                       dyaw, Eigen::Vector3d::UnitZ())));
        if (fault_pending && (k + 1) * dt >= drift.step_fault_time_s) {
          noisy = noisy * Pose(drift.step_fault_translation,
                               Eigen::Quaterniond(Eigen::AngleAxisd(
                                   drift.step_fault_yaw_rad, Eigen::Vector3d::UnitZ())));
          fault_pending = false;
        }
      }
      odom_rels[k] = noisy;
      odom_poses[k + 1] = noiseless ? gt_poses[k + 1] : odom_poses[k] * noisy;
    }

    for (int k = 0; k < samples; ++k) {
      PoseNode gt_node;
      gt_node.node_id = node_id_for(robot, k);
      gt_node.robot_id = robot;
      gt_node.submap_id = static_cast<int>(k * dt / scenario.submap_period_s);
      gt_node.timestamp_ns = k * dt_ns;
      gt_node.pose = gt_poses[k];
      traj.ground_truth.add_node(gt_node);

      PoseNode odom_node = gt_node;
      odom_node.pose = odom_poses[k];
      traj.odometry.add_node(odom_node);
    }
    for (int k = 0; k + 1 < samples; ++k) {
      RelativeConstraint edge;
      edge.from_id = node_id_for(robot, k);
      edge.to_id = node_id_for(robot, k + 1);
      edge.information = edge_info;
      edge.kind = ConstraintKind::kOdometry;
      edge.measurement = noiseless ? relative_pose(gt_poses[k], gt_poses[k + 1])
                                   : odom_rels[k];
      traj.odometry.add_edge(edge);
      RelativeConstraint gt_edge = edge;
      gt_edge.measurement = relative_pose(gt_poses[k], gt_poses[k + 1]);
      traj.ground_truth.add_edge(gt_edge);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace wavesync::sim
