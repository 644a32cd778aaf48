#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wavesync/config.h"
#include "wavesync/graph_monitor.h"
#include "wavesync/pose_graph.h"
#include "wavesync/proxy_graph.h"
#include "wavesync/spectral.h"

namespace wavesync {

enum class ComparisonSide { kServer, kRobot };
enum class ScaleBand { kSmall, kMid, kLarge };

// Distance-to-origin values over correspondence pairs, in pair order, in the
// graph's own frame.
struct ComparisonSignal {
  Eigen::VectorXd values;
};

// Per matched node pair (n on the server, n' onboard), the per-scale wavelet
// coefficient distances d^s.
struct ScaleDistance {
  int server_index = 0;
  int robot_index = 0;
  Eigen::VectorXd per_scale;
};

struct BandThresholds {
  double small = 0.0;
  double mid = 0.0;
  double large = 0.0;

  double of(ScaleBand band) const {
    switch (band) {
      case ScaleBand::kSmall:
        return small;
      case ScaleBand::kMid:
        return mid;
      case ScaleBand::kLarge:
        return large;
    }
    return 0.0;
  }
};

struct DiscrepancyVerdict {
  int pair_index = 0;
  int server_index = 0;
  int robot_index = 0;
  bool small = false;
  bool mid = false;
  bool large = false;
  double small_stat = 0.0;
  double mid_stat = 0.0;
  double large_stat = 0.0;

  bool any() const { return small || mid || large; }
};

// Scales are ordered largest first, so leading indices describe the large
// (coarse) band and trailing indices the small (fine) band; with seven scales
// the partition is 2 / 3 / 2.
struct BandPartition {
  int large_count = 2;
  int mid_count = 3;
  int small_count = 2;

  static BandPartition for_scales(int num_scales);
  ScaleBand band_of(int scale_index) const;
  int num_scales() const { return large_count + mid_count + small_count; }
};

// The pair anchoring both signals: the matched pair whose server node has the
// earliest timestamp (robot trajectories start there).
int origin_pair(const BroadcastPayload& payload, const Correspondence& corr);

// Distance-to-origin signal over a pair-ordered comparison graph.
Eigen::VectorXd distance_to_origin_signal(const ProxyGraph& graph, int origin_index);

// Spec-shaped accessor: values for the chosen side restricted and ordered by
// the correspondence pairs.
ComparisonSignal comparison_signal(const BroadcastPayload& payload,
                                   const ProxyGraph& robot, const Correspondence& corr,
                                   ComparisonSide side);

// Synchronized comparison graphs: per side, a proxy graph rebuilt over the
// matched nodes in pair order, so identical positions give identical graphs.
struct ComparisonGraphs {
  ProxyGraph server;
  ProxyGraph robot;
};
ComparisonGraphs build_comparison_graphs(const BroadcastPayload& payload,
                                         const ProxyGraph& robot,
                                         const Correspondence& corr,
                                         const PipelineConfig& config);

// d^s per pair: when the feature lists are pair-aligned (one entry per pair)
// they are compared directly; otherwise they are indexed through `corr`.
std::vector<ScaleDistance> scale_distances(const std::vector<WaveletFeature>& server_feats,
                                           const std::vector<WaveletFeature>& robot_feats,
                                           const Correspondence& corr);

DiscrepancyVerdict classify(const ScaleDistance& distance, int pair_index,
                            const BandThresholds& thresholds,
                            const BandPartition& partition);

// Remembers which discrepancy region each constraint covers, keyed by
// (kind, submap, submap). A re-triggered region re-measures the registered
// constraint at its original endpoints (the upsert gates then decide update
// vs skip) instead of minting a new node pair every epoch.
struct RegionMemory {
  std::map<std::tuple<int, int, int>, std::pair<std::int64_t, std::int64_t>> regions;
};

// Emits the constraint for every triggered band: adjacent (predecessor to
// successor of n'), midscale (mid_hops before to mid_hops after, clipped at
// trajectory ends), and submap (anchor of n''s submap to the anchors of the k
// nearest submaps by server-frame centroid distance). Measurements come from
// the server-side poses. Throws MissingAuxiliary when orientations are
// absent.
std::vector<RelativeConstraint> generate_constraints(
    const std::vector<DiscrepancyVerdict>& verdicts, const ProxyGraph& robot,
    const BroadcastPayload& payload, const Correspondence& corr,
    const PipelineConfig& config, RegionMemory* memory = nullptr);

struct UpsertReport {
  int added = 0;
  int updated = 0;
  int skipped = 0;
};

// Merges a fresh constraint batch into the existing set: same
// (from, to, kind) replaces only past the translation/rotation gates,
// otherwise the fresh constraint is dropped; new pairs append.
UpsertReport upsert_constraints(std::vector<RelativeConstraint>& existing,
                                const std::vector<RelativeConstraint>& fresh,
                                double translation_gate_m, double rotation_gate_rad);

struct DiscrepancyResult {
  Correspondence corr;
  std::vector<ScaleDistance> distances;
  std::vector<DiscrepancyVerdict> verdicts;
  std::vector<RelativeConstraint> constraints;
};

// Full per-robot pipeline for one broadcast: synchronize, build comparison
// graphs, compute signals and wavelet features (shared Meyer bank sized by
// the larger lambda_max), distances, verdicts, constraints. Per band, one
// constraint is emitted per contiguous triggered region, at the region's
// peak. Without thresholds the pipeline stops after the distances
// (calibration mode).
DiscrepancyResult run_discrepancy(const BroadcastPayload& payload,
                                  const ProxyGraph& robot, int robot_id,
                                  const PipelineConfig& config,
                                  const std::optional<BandThresholds>& thresholds,
                                  RegionMemory* memory = nullptr);

// One-line structured-text records for the audit log.
std::string verdict_record(std::int64_t epoch, int robot_id,
                           const DiscrepancyVerdict& verdict);
std::string upsert_record(std::int64_t epoch, int robot_id, const UpsertReport& report);

}  // namespace wavesync
