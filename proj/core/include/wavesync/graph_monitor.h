#pragma once

#include <cstdint>
#include <vector>

#include "wavesync/config.h"
#include "wavesync/pose_graph.h"
#include "wavesync/proxy_graph.h"

namespace wavesync {

// Snapshot of the server-side proxy graph plus the per-node auxiliary data
// (orientation, robot id; timestamps and submap ids ride on the proxy nodes)
// needed for synchronization and constraint generation.
struct BroadcastPayload {
  ProxyGraph proxy;
  std::vector<Eigen::Quaterniond> orientations;
  std::vector<int> robot_ids;
  std::int64_t epoch = 0;

  int size() const { return proxy.size(); }
  Pose node_pose(int index) const {
    return Pose(proxy.nodes[index].position, orientations[index]);
  }
};

struct CorrespondencePair {
  int server_index = 0;
  int robot_index = 0;
  std::int64_t residual_dt_ns = 0;
};

// One-to-one chronological matching between server and robot proxy nodes,
// sorted by server index.
struct Correspondence {
  std::vector<CorrespondencePair> pairs;

  bool empty() const { return pairs.empty(); }
  int size() const { return static_cast<int>(pairs.size()); }
};

// Per submap: first node, last node, and nodes subsampled at the distance or
// time gap, whichever rule yields more representatives. Deterministic; output
// ordered by (robot, timestamp).
std::vector<PoseNode> select_representatives(const PoseGraph& graph,
                                             const PipelineConfig& config);

struct BroadcastStats {
  int representatives = 0;  // proxy nodes before reduction
  int transmitted = 0;      // proxy nodes actually broadcast
};

// Builds the broadcast for one optimization epoch: selects representatives,
// builds the proxy graph, Kron-reduces it past the node trigger (the
// chronologically last node of every robot is force-kept), and populates the
// auxiliary arrays. Throws EmptyGraph.
BroadcastPayload make_broadcast(const PoseGraph& server_graph, std::int64_t epoch,
                                const PipelineConfig& config,
                                BroadcastStats* stats = nullptr);

// Greedy nearest-timestamp matching between this robot's server nodes and the
// robot's own proxy nodes; pairs beyond the tolerance are never matched.
// Throws NoOverlap when nothing matches.
Correspondence synchronize(const BroadcastPayload& server, const ProxyGraph& robot,
                           int robot_id, double tolerance_s = 0.5);

std::string encode_payload(const BroadcastPayload& payload);
BroadcastPayload decode_payload(const std::string& bytes);

// Stateful wrapper that enforces strictly increasing epochs.
class GraphMonitor {
 public:
  explicit GraphMonitor(const PipelineConfig& config) : config_(config) {}

  BroadcastPayload broadcast(const PoseGraph& server_graph);
  std::int64_t epoch() const { return epoch_; }

 private:
  PipelineConfig config_;
  std::int64_t epoch_ = 0;
};

}  // namespace wavesync
