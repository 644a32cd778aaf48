#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wavesync/lie.h"
#include "wavesync/pose.h"

namespace wavesync {

enum class ConstraintKind {
  kOdometry,
  kLoopClosure,
  kCorrectionAdjacent,
  kCorrectionMidscale,
  kCorrectionSubmap,
};

const char* to_string(ConstraintKind kind);
std::optional<ConstraintKind> constraint_kind_from_string(const std::string& name);

bool is_correction(ConstraintKind kind);

struct PoseNode {
  std::int64_t node_id = 0;
  int robot_id = 0;
  int submap_id = 0;
  std::int64_t timestamp_ns = 0;
  Pose pose;
};

// Relative SE(3) measurement from `from_id` to `to_id` with a 6x6 information
// matrix ordered [translation; rotation].
struct RelativeConstraint {
  std::int64_t from_id = 0;
  std::int64_t to_id = 0;
  Pose measurement;
  Matrix6d information = Matrix6d::Identity();
  ConstraintKind kind = ConstraintKind::kOdometry;
};

Matrix6d isotropic_information(double sigma_translation, double sigma_rotation);

class PoseGraph {
 public:
  PoseGraph() = default;
  explicit PoseGraph(std::string frame_id) : frame_id_(std::move(frame_id)) {}

  const std::string& frame_id() const { return frame_id_; }
  void set_frame_id(std::string frame_id) { frame_id_ = std::move(frame_id); }

  const std::vector<PoseNode>& nodes() const { return nodes_; }
  const std::vector<RelativeConstraint>& edges() const { return edges_; }

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }

  void add_node(const PoseNode& node);
  void add_edge(const RelativeConstraint& edge);

  bool has_node(std::int64_t node_id) const { return index_.count(node_id) > 0; }
  const PoseNode& node(std::int64_t node_id) const;
  PoseNode& mutable_node(std::int64_t node_id);
  // Dense index of a node in nodes(), or -1.
  int index_of(std::int64_t node_id) const;

  void set_pose(std::int64_t node_id, const Pose& pose);

  // Subgraph with the given node set and the induced edges, preserving order.
  PoseGraph subgraph(const std::vector<std::int64_t>& node_ids) const;
  PoseGraph robot_subgraph(int robot_id) const;

  std::vector<int> robot_ids() const;

  // Throws InvalidGraph when edges dangle, node ids repeat, or per-robot
  // timestamps are not strictly increasing.
  void validate() const;

 private:
  std::string frame_id_ = "map";
  std::vector<PoseNode> nodes_;
  std::vector<RelativeConstraint> edges_;
  std::unordered_map<std::int64_t, int> index_;
};

// RMSE of the absolute trajectory error after rigid (rotation + translation,
// no scale) alignment of the estimate onto the ground truth over the node_id
// intersection. Throws NoCommonNodes when the intersection is empty.
double rmse_ate(const PoseGraph& estimate, const PoseGraph& ground_truth);

}  // namespace wavesync
