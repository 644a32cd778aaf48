#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wavesync/config.h"
#include "wavesync/discrepancy.h"
#include "wavesync/pose_graph.h"
#include "wavesync/sim/scenario.h"

namespace wavesync::sim {

enum class ServerMode {
  // Ground-truth poses with i.i.d. positional noise stand in for the
  // globally optimized server map.
  kGroundTruthNoisy,
  // Server optimizes shipped odometry plus synthetic loop closures generated
  // from ground-truth revisits.
  kLoopClosed,
};

struct ServerOracle {
  ServerMode mode = ServerMode::kGroundTruthNoisy;
  double noise_sigma_m = 0.05;
  double loop_closure_radius_m = 2.0;
  double min_revisit_gap_s = 20.0;
  double closure_stride_s = 1.0;  // candidate spacing for closure search
};

enum class CorrectionStrategy {
  kNone,      // uncorrected baseline: odometry only
  kProposed,  // multiscale spectral discrepancy constraints
  kBaseline,  // comparator: one constraint per matched proxy node
};

struct RunOptions {
  PipelineConfig pipeline;
  ServerOracle oracle;
  CorrectionStrategy strategy = CorrectionStrategy::kProposed;
  // Pinned per-band thresholds; otherwise they are calibrated from a
  // drift-free run of the same scenario (mean + 3 sigma per band).
  std::optional<BandThresholds> thresholds;
  int max_epochs = 0;  // 0 = run the scenario to the end
  bool disable_kron = false;
  bool collect_audit = true;
};

struct EpochRow {
  std::int64_t epoch = 0;
  int robot_id = 0;
  std::uint64_t bytes_robot_to_server = 0;
  std::uint64_t bytes_server_to_robot = 0;
  int payload_nodes_pre = 0;
  int payload_nodes_post = 0;
  int constraints_added = 0;
  int constraints_updated = 0;
  int constraints_skipped = 0;
  double rmse_m = 0.0;
};

struct RobotSummary {
  int robot_id = 0;
  double rmse_uncorrected = 0.0;
  double rmse_corrected = 0.0;
  double rmse_server = 0.0;
  int odometry_factors = 0;
  int correction_factors = 0;
  int constraints_added = 0;
  int constraints_updated = 0;
  int constraints_skipped = 0;
  std::uint64_t bytes_to_server = 0;
  std::uint64_t bytes_from_server = 0;
};

struct RunMetrics {
  std::vector<EpochRow> rows;
  std::vector<RobotSummary> robots;
  BandThresholds thresholds;
  double discrepancy_ms = 0.0;
  double optimize_ms = 0.0;
  double server_ms = 0.0;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<PoseGraph> corrected;  // final onboard estimate per robot
  std::vector<PoseGraph> odometry;   // raw odometry per robot
  std::vector<PoseGraph> ground_truth;
  PoseGraph server;  // final server graph
  std::vector<std::string> audit;    // line-delimited audit records
};

// Runs the full closed loop: robots ship submaps, the server graph updates
// per the oracle, the graph monitor broadcasts, every robot synchronizes,
// detects discrepancies, upserts constraints, and re-optimizes. Deterministic
// given (scenario, options).
RunResult run_epochs(const Scenario& scenario, const RunOptions& options);

// Per-band mean + 3 sigma thresholds from a drift-free calibration pass.
BandThresholds calibrate_thresholds(const Scenario& scenario, const RunOptions& options);

// Per-epoch CSV (deterministic; no wall-clock columns).
std::string metrics_csv(const RunMetrics& metrics);
// Human-readable summary table.
std::string metrics_summary(const RunMetrics& metrics);

}  // namespace wavesync::sim
