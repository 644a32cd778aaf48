#include "wavesync/sim/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>

#include "wavesync/error.h"
#include "wavesync/graph_monitor.h"
#include "wavesync/optimizer.h"
#include "wavesync/posegraph_io.h"

namespace wavesync::sim {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-node server position noise, a pure function of (seed, node_id) so the
// server estimate is stable across epochs and call order.
Eigen::Vector3d server_noise(std::uint64_t seed, std::int64_t node_id, double sigma) {
  if (sigma == 0.0) return Eigen::Vector3d::Zero();
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(node_id))));
  std::normal_distribution<double> gauss(0.0, sigma);
  const double x = gauss(rng);
  const double y = gauss(rng);
  const double z = gauss(rng);
  return {x, y, z};
}

struct Closure {
  std::int64_t from_id = 0;
  std::int64_t to_id = 0;
  std::int64_t max_ts = 0;
  RelativeConstraint edge;
};

// Synthetic loop closures from ground-truth revisits (same robot after a time
// gap, or any two robots) within the closure radius.
std::vector<Closure> synthetic_closures(const std::vector<RobotTrajectories>& trajs,
                                        const ServerOracle& oracle) {
  struct Sample {
    int robot;
    std::int64_t node_id;
    std::int64_t ts;
    Eigen::Vector3d position;
    Pose pose;
  };
  std::vector<Sample> samples;
  for (const RobotTrajectories& traj : trajs) {
    std::int64_t next_ts = 0;
    const auto stride_ns = static_cast<std::int64_t>(oracle.closure_stride_s * 1e9);
    for (const PoseNode& n : traj.ground_truth.nodes()) {
      if (n.timestamp_ns < next_ts) continue;
      next_ts = n.timestamp_ns + stride_ns;
      samples.push_back({traj.robot_id, n.node_id, n.timestamp_ns,
                         n.pose.translation(), n.pose});
    }
  }

  const auto gap_ns = static_cast<std::int64_t>(oracle.min_revisit_gap_s * 1e9);
  const Matrix6d info = isotropic_information(0.02, 0.01);
  std::vector<Closure> closures;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const Sample& a = samples[i];
      const Sample& b = samples[j];
      if (a.robot == b.robot && std::llabs(a.ts - b.ts) < gap_ns) continue;
      if ((a.position - b.position).norm() > oracle.loop_closure_radius_m) continue;
      Closure c;
      c.from_id = a.node_id;
      c.to_id = b.node_id;
      c.max_ts = std::max(a.ts, b.ts);
      c.edge.from_id = a.node_id;
      c.edge.to_id = b.node_id;
      c.edge.measurement = relative_pose(a.pose, b.pose);
      c.edge.information = info;
      c.edge.kind = ConstraintKind::kLoopClosure;
      closures.push_back(c);
    }
  }
  return closures;
}

// Server-side estimate of everything observed up to `t_ns`.
PoseGraph build_server_graph(const std::vector<RobotTrajectories>& trajs,
                             const ServerOracle& oracle, std::uint64_t seed,
                             std::int64_t t_ns, const std::vector<Closure>& closures) {
  PoseGraph server("server");
  if (oracle.mode == ServerMode::kGroundTruthNoisy) {
    for (const RobotTrajectories& traj : trajs) {
      for (const PoseNode& n : traj.ground_truth.nodes()) {
        if (n.timestamp_ns > t_ns) break;
        PoseNode noisy = n;
        noisy.pose = Pose(n.pose.translation() +
                              server_noise(seed, n.node_id, oracle.noise_sigma_m),
                          n.pose.rotation());
        server.add_node(noisy);
      }
    }
    return server;
  }

  // kLoopClosed: optimize shipped odometry plus the synthetic closures.
  for (const RobotTrajectories& traj : trajs) {
    for (const PoseNode& n : traj.odometry.nodes()) {
      if (n.timestamp_ns > t_ns) break;
      server.add_node(n);
    }
  }
  for (const RobotTrajectories& traj : trajs) {
    for (const RelativeConstraint& e : traj.odometry.edges()) {
      if (server.has_node(e.from_id) && server.has_node(e.to_id)) server.add_edge(e);
    }
  }
  int usable_closures = 0;
  for (const Closure& c : closures) {
    if (c.max_ts <= t_ns && server.has_node(c.from_id) && server.has_node(c.to_id)) {
      server.add_edge(c.edge);
      ++usable_closures;
    }
  }
  if (usable_closures == 0) return server;

  OptimizationProblem problem;
  problem.graph = std::move(server);
  problem.gauge_id = problem.graph.nodes().front().node_id;
  problem.settings.max_iterations = 25;
  try {
    auto [optimized, report] = optimize(problem);
    return optimized;
  } catch (const Disconnected&) {
    // Robots not yet linked by closures; serve the raw merged graph.
    return problem.graph;
  }
}

struct RobotState {
  int robot_id = 0;
  std::vector<Pose> estimate;  // per sample index
  std::vector<RelativeConstraint> corrections;
  RegionMemory regions;
  // Until the first optimization the estimate is the raw odometry, bitwise.
  bool optimized_once = false;
};

// Onboard graph at the current horizon: estimated poses, odometry edges, and
// the accumulated correction constraints.
PoseGraph onboard_graph(const RobotTrajectories& traj, const RobotState& state,
                        int count) {
  PoseGraph graph("robot_" + std::to_string(state.robot_id));
  const auto& odom_nodes = traj.odometry.nodes();
  for (int k = 0; k < count; ++k) {
    PoseNode n = odom_nodes[k];
    n.pose = state.estimate[k];
    graph.add_node(n);
  }
  for (const RelativeConstraint& e : traj.odometry.edges()) {
    if (graph.has_node(e.from_id) && graph.has_node(e.to_id)) graph.add_edge(e);
  }
  for (const RelativeConstraint& e : state.corrections) graph.add_edge(e);
  return graph;
}

PoseGraph truth_prefix(const RobotTrajectories& traj, int count) {
  PoseGraph graph("world");
  const auto& nodes = traj.ground_truth.nodes();
  for (int k = 0; k < count; ++k) graph.add_node(nodes[k]);
  return graph;
}

int count_until(const PoseGraph& graph, std::int64_t t_ns) {
  int count = 0;
  for (const PoseNode& n : graph.nodes()) {
    if (n.timestamp_ns > t_ns) break;
    ++count;
  }
  return count;
}

// Comparator strategy: a correction between every pair of consecutive matched
// proxy nodes, measured from server poses.
std::vector<RelativeConstraint> baseline_constraints(const BroadcastPayload& payload,
                                                     const ProxyGraph& robot_proxy,
                                                     const Correspondence& corr,
                                                     const PipelineConfig& config) {
  const Matrix6d info = isotropic_information(config.correction_sigma_translation_m,
                                              config.correction_sigma_rotation_rad);
  std::vector<RelativeConstraint> out;
  for (int k = 0; k + 1 < corr.size(); ++k) {
    const std::int64_t from = robot_proxy.nodes[corr.pairs[k].robot_index].source_node_id;
    const std::int64_t to =
        robot_proxy.nodes[corr.pairs[k + 1].robot_index].source_node_id;
    if (from == to) continue;
    RelativeConstraint c;
    c.from_id = from;
    c.to_id = to;
    c.measurement = relative_pose(payload.node_pose(corr.pairs[k].server_index),
                                  payload.node_pose(corr.pairs[k + 1].server_index));
    c.information = info;
    c.kind = ConstraintKind::kCorrectionAdjacent;
    out.push_back(c);
  }
  return out;
}

struct BandStats {
  std::vector<double> small, mid, large;
};

void collect_band_stats(const std::vector<ScaleDistance>& distances,
                        const BandPartition& partition, BandStats* stats) {
  for (const ScaleDistance& d : distances) {
    double s = 0.0, m = 0.0, l = 0.0;
    const int n = std::min<int>(partition.num_scales(),
                                static_cast<int>(d.per_scale.size()));
    for (int j = 0; j < n; ++j) {
      switch (partition.band_of(j)) {
        case ScaleBand::kSmall:
          s = std::max(s, d.per_scale[j]);
          break;
        case ScaleBand::kMid:
          m = std::max(m, d.per_scale[j]);
          break;
        case ScaleBand::kLarge:
          l = std::max(l, d.per_scale[j]);
          break;
      }
    }
    stats->small.push_back(s);
    stats->mid.push_back(m);
    stats->large.push_back(l);
  }
}

double mean_plus_3_sigma(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return mean + 3.0 * std::sqrt(var);
}

// The shared epoch loop. With `calibration` set, constraints are never
// generated and the per-band distance statistics land in `stats`.
RunResult run_loop(const Scenario& scenario, const RunOptions& options,
                   const BandThresholds& thresholds, bool calibration,
                   BandStats* stats) {
  PipelineConfig pipeline = options.pipeline;
  if (options.disable_kron) pipeline.kron_trigger = std::numeric_limits<int>::max();

  RunResult result;
  auto trajs = generate_scenario(scenario);
  const int num_robots = static_cast<int>(trajs.size());

  std::vector<Closure> closures;
  if (options.oracle.mode == ServerMode::kLoopClosed) {
    closures = synthetic_closures(trajs, options.oracle);
  }

  std::vector<RobotState> states(num_robots);
  std::vector<int> shipped(num_robots, 0);
  for (int r = 0; r < num_robots; ++r) {
    states[r].robot_id = r;
    states[r].estimate.reserve(trajs[r].odometry.size());
  }

  std::int64_t horizon_ns = 0;
  for (const auto& traj : trajs) {
    horizon_ns = std::max(horizon_ns, traj.ground_truth.nodes().back().timestamp_ns);
  }
  const auto epoch_ns = static_cast<std::int64_t>(scenario.epoch_period_s * 1e9);
  int num_epochs = static_cast<int>((horizon_ns + epoch_ns - 1) / epoch_ns);
  if (options.max_epochs > 0) num_epochs = std::min(num_epochs, options.max_epochs);

  RunMetrics& metrics = result.metrics;
  metrics.thresholds = thresholds;
  metrics.robots.resize(num_robots);
  for (int r = 0; r < num_robots; ++r) metrics.robots[r].robot_id = r;

  const BandPartition partition = BandPartition::for_scales(pipeline.num_scales);

  for (int epoch = 1; epoch <= num_epochs; ++epoch) {
    const std::int64_t t_ns = static_cast<std::int64_t>(epoch) * epoch_ns;

    // Robots ship the new submap chunk; bytes are the serialized size.
    std::vector<std::uint64_t> bytes_up(num_robots, 0);
    for (int r = 0; r < num_robots; ++r) {
      const auto& odom = trajs[r].odometry;
      const int count = count_until(odom, t_ns);
      if (count > shipped[r]) {
        PoseGraph chunk("submaps_" + std::to_string(r));
        for (int k = shipped[r]; k < count; ++k) chunk.add_node(odom.nodes()[k]);
        for (const RelativeConstraint& e : odom.edges()) {
          if (chunk.has_node(e.from_id) && chunk.has_node(e.to_id)) chunk.add_edge(e);
        }
        bytes_up[r] = serialize_graph(chunk).size();
        // Extend the onboard estimate with the raw odometry increments.
        auto& est = states[r].estimate;
        for (int k = shipped[r]; k < count; ++k) {
          if (!states[r].optimized_once || k == 0) {
            est.push_back(odom.nodes()[k].pose);
          } else {
            const Pose rel = odom.edges()[k - 1].measurement;
            est.push_back(est[k - 1] * rel);
          }
        }
        shipped[r] = count;
      }
    }

    // Server update and broadcast.
    const auto t_server = Clock::now();
    PoseGraph server = build_server_graph(trajs, options.oracle, scenario.seed, t_ns,
                                          closures);
    BroadcastStats bstats;
    const BroadcastPayload payload = make_broadcast(server, epoch, pipeline, &bstats);
    const std::uint64_t payload_bytes = encode_payload(payload).size();
    metrics.server_ms += ms_since(t_server);
    result.server = std::move(server);

    for (int r = 0; r < num_robots; ++r) {
      EpochRow row;
      row.epoch = epoch;
      row.robot_id = r;
      row.bytes_robot_to_server = bytes_up[r];
      row.bytes_server_to_robot = payload_bytes;
      row.payload_nodes_pre = bstats.representatives;
      row.payload_nodes_post = bstats.transmitted;

      RobotState& state = states[r];
      const int count = shipped[r];
      if (count == 0) {
        metrics.rows.push_back(row);
        continue;
      }

      PoseGraph current = onboard_graph(trajs[r], state, count);

      if (options.strategy != CorrectionStrategy::kNone) {
        const auto t_disc = Clock::now();
        // The broadcast names this robot's representative nodes by timestamp;
        // the onboard proxy is built over the robot's own copies of exactly
        // those nodes, so the chronological matching is one-to-one by
        // construction.
        PoseGraph rep_graph(current.frame_id());
        for (int i = 0; i < payload.size(); ++i) {
          if (payload.robot_ids[i] != r) continue;
          const std::int64_t ts = payload.proxy.nodes[i].timestamp_ns;
          const std::int64_t id = payload.proxy.nodes[i].source_node_id;
          if (current.has_node(id) && current.node(id).timestamp_ns == ts) {
            rep_graph.add_node(current.node(id));
          }
        }
        if (rep_graph.empty()) {
          metrics.discrepancy_ms += ms_since(t_disc);
          row.rmse_m = rmse_ate(current, truth_prefix(trajs[r], count));
          metrics.rows.push_back(row);
          continue;
        }
        const ProxyGraph robot_proxy = build_proxy(rep_graph, pipeline.proxy);

        std::vector<RelativeConstraint> fresh;
        try {
          if (options.strategy == CorrectionStrategy::kProposed) {
            const auto disc = run_discrepancy(
                payload, robot_proxy, r, pipeline,
                calibration ? std::nullopt : std::optional<BandThresholds>(thresholds),
                &state.regions);
            if (calibration && stats) {
              collect_band_stats(disc.distances, partition, stats);
            }
            fresh = disc.constraints;
            if (options.collect_audit && !calibration) {
              for (const DiscrepancyVerdict& v : disc.verdicts) {
                result.audit.push_back(verdict_record(epoch, r, v));
              }
            }
          } else if (options.strategy == CorrectionStrategy::kBaseline) {
            const Correspondence corr =
                synchronize(payload, robot_proxy, r, pipeline.sync_tolerance_s);
            fresh = baseline_constraints(payload, robot_proxy, corr, pipeline);
          }
        } catch (const NoOverlap&) {
          // Robot not represented in this broadcast yet.
        }
        metrics.discrepancy_ms += ms_since(t_disc);

        if (!calibration && !fresh.empty()) {
          const UpsertReport report = upsert_constraints(
              state.corrections, fresh, pipeline.upsert_translation_gate_m,
              pipeline.upsert_rotation_gate_rad);
          row.constraints_added = report.added;
          row.constraints_updated = report.updated;
          row.constraints_skipped = report.skipped;
          if (options.collect_audit) {
            result.audit.push_back(upsert_record(epoch, r, report));
          }

          if (report.added + report.updated > 0) {
            const auto t_opt = Clock::now();
            OptimizationProblem problem;
            problem.graph = onboard_graph(trajs[r], state, count);
            problem.gauge_id = node_id_for(r, 0);
            auto [optimized, opt_report] = optimize(problem);
            metrics.optimize_ms += ms_since(t_opt);
            state.optimized_once = true;
            for (int k = 0; k < count; ++k) {
              state.estimate[k] = optimized.node(node_id_for(r, k)).pose;
            }
            current = std::move(optimized);
          }
        }
      }

      row.rmse_m = rmse_ate(current, truth_prefix(trajs[r], count));
      metrics.rows.push_back(row);
    }
  }

  // Final accounting.
  for (int r = 0; r < num_robots; ++r) {
    RobotSummary& summary = metrics.robots[r];
    const int count = shipped[r];
    PoseGraph corrected = count > 0 ? onboard_graph(trajs[r], states[r], count)
                                    : PoseGraph("robot_" + std::to_string(r));
    PoseGraph odometry_prefix("odom");
    for (int k = 0; k < count; ++k) odometry_prefix.add_node(trajs[r].odometry.nodes()[k]);

    if (count > 0) {
      const PoseGraph truth = truth_prefix(trajs[r], count);
      summary.rmse_corrected = rmse_ate(corrected, truth);
      summary.rmse_uncorrected = rmse_ate(odometry_prefix, truth);
      if (!result.server.empty()) {
        try {
          summary.rmse_server = rmse_ate(result.server.robot_subgraph(r), truth);
        } catch (const NoCommonNodes&) {
          summary.rmse_server = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    summary.odometry_factors = std::max(0, count - 1);
    summary.correction_factors = static_cast<int>(states[r].corrections.size());
    for (const EpochRow& row : metrics.rows) {
      if (row.robot_id != r) continue;
      summary.constraints_added += row.constraints_added;
      summary.constraints_updated += row.constraints_updated;
      summary.constraints_skipped += row.constraints_skipped;
      summary.bytes_to_server += row.bytes_robot_to_server;
      summary.bytes_from_server += row.bytes_server_to_robot;
    }

    result.corrected.push_back(std::move(corrected));
    result.odometry.push_back(trajs[r].odometry);
    result.ground_truth.push_back(trajs[r].ground_truth);
  }
  return result;
}

}  // namespace

BandThresholds calibrate_thresholds(const Scenario& scenario, const RunOptions& options) {
  RunOptions calib_options = options;
  calib_options.strategy = CorrectionStrategy::kProposed;
  calib_options.collect_audit = false;
  BandStats stats;
  run_loop(without_drift(scenario), calib_options, BandThresholds{}, true, &stats);
  BandThresholds thresholds;
  thresholds.small = mean_plus_3_sigma(stats.small);
  thresholds.mid = mean_plus_3_sigma(stats.mid);
  thresholds.large = mean_plus_3_sigma(stats.large);
  return thresholds;
}

RunResult run_epochs(const Scenario& scenario, const RunOptions& options) {
  BandThresholds thresholds;
  if (options.thresholds) {
    thresholds = *options.thresholds;
  } else if (options.strategy == CorrectionStrategy::kProposed) {
    thresholds = calibrate_thresholds(scenario, options);
  }
  return run_loop(scenario, options, thresholds, false, nullptr);
}

std::string metrics_csv(const RunMetrics& metrics) {
  std::string out =
      "epoch,robot_id,bytes_robot_to_server,bytes_server_to_robot,"
      "payload_nodes_pre,payload_nodes_post,constraints_added,constraints_updated,"
      "constraints_skipped,rmse_m\n";
  char buf[256];
  for (const EpochRow& row : metrics.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%llu,%llu,%d,%d,%d,%d,%d,%.17g\n",
                  static_cast<long long>(row.epoch), row.robot_id,
                  static_cast<unsigned long long>(row.bytes_robot_to_server),
                  static_cast<unsigned long long>(row.bytes_server_to_robot),
                  row.payload_nodes_pre, row.payload_nodes_post, row.constraints_added,
                  row.constraints_updated, row.constraints_skipped, row.rmse_m);
    out += buf;
  }
  return out;
}

std::string metrics_summary(const RunMetrics& metrics) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "thresholds: small=%.6g mid=%.6g large=%.6g\n"
                "stage times: server=%.1f ms, discrepancy=%.1f ms, optimize=%.1f ms\n",
                metrics.thresholds.small, metrics.thresholds.mid,
                metrics.thresholds.large, metrics.server_ms, metrics.discrepancy_ms,
                metrics.optimize_ms);
  out += buf;
  out += "robot | rmse_odom | rmse_corrected | rmse_server | factors (+corr) | "
         "added/updated/skipped | bytes_up | bytes_down\n";
  for (const RobotSummary& r : metrics.robots) {
    std::snprintf(buf, sizeof(buf),
                  "%5d | %9.4f | %14.4f | %11.4f | %7d (+%d) | %d/%d/%d | %llu | %llu\n",
                  r.robot_id, r.rmse_uncorrected, r.rmse_corrected, r.rmse_server,
                  r.odometry_factors, r.correction_factors, r.constraints_added,
                  r.constraints_updated, r.constraints_skipped,
                  static_cast<unsigned long long>(r.bytes_to_server),
                  static_cast<unsigned long long>(r.bytes_from_server));
    out += buf;
  }
  return out;
}

}  // namespace wavesync::sim
