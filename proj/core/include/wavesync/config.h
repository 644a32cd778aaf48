#pragma once

#include "wavesync/proxy_graph.h"

namespace wavesync {

// Knobs shared by the graph monitor, the discrepancy pipeline, and the
// simulation harness.
struct PipelineConfig {
  ProxyBuildOptions proxy;

  // Representative selection: consecutive representatives at least this far
  // apart in space or time, whichever rule yields more nodes per submap.
  double rep_min_distance_m = 1.0;
  double rep_min_dt_s = 2.0;

  // Kron reduction runs when the proxy graph exceeds this node count.
  int kron_trigger = 1000;
  // Transmitted graphs drop Schur fill-in edges below this weight.
  double broadcast_weight_floor = 3e-2;

  double sync_tolerance_s = 0.5;

  int num_scales = 7;
  double scale_span = 20.0;
  bool include_lowpass = false;

  // Constraint generation.
  int mid_hops = 5;
  int submap_k = 4;
  double correction_sigma_translation_m = 0.1;
  double correction_sigma_rotation_rad = 0.05;

  // Constraint update gates.
  double upsert_translation_gate_m = 0.05;
  double upsert_rotation_gate_rad = 0.02;
};

}  // namespace wavesync
