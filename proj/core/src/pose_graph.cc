#include "wavesync/pose_graph.h"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "wavesync/error.h"

namespace wavesync {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kOdometry:
      return "odometry";
    case ConstraintKind::kLoopClosure:
      return "loop_closure";
    case ConstraintKind::kCorrectionAdjacent:
      return "correction_adjacent";
    case ConstraintKind::kCorrectionMidscale:
      return "correction_midscale";
    case ConstraintKind::kCorrectionSubmap:
      return "correction_submap";
  }
  return "unknown";
}

std::optional<ConstraintKind> constraint_kind_from_string(const std::string& name) {
  if (name == "odometry") return ConstraintKind::kOdometry;
  if (name == "loop_closure") return ConstraintKind::kLoopClosure;
  if (name == "correction_adjacent") return ConstraintKind::kCorrectionAdjacent;
  if (name == "correction_midscale") return ConstraintKind::kCorrectionMidscale;
  if (name == "correction_submap") return ConstraintKind::kCorrectionSubmap;
  return std::nullopt;
}

bool is_correction(ConstraintKind kind) {
  return kind == ConstraintKind::kCorrectionAdjacent ||
         kind == ConstraintKind::kCorrectionMidscale ||
         kind == ConstraintKind::kCorrectionSubmap;
}

Matrix6d isotropic_information(double sigma_translation, double sigma_rotation) {
  Matrix6d info = Matrix6d::Zero();
  info.topLeftCorner<3, 3>() =
      Eigen::Matrix3d::Identity() / (sigma_translation * sigma_translation);
  info.bottomRightCorner<3, 3>() =
      Eigen::Matrix3d::Identity() / (sigma_rotation * sigma_rotation);
  return info;
}

void PoseGraph::add_node(const PoseNode& node) {
  if (index_.count(node.node_id)) {
    throw InvalidGraph("duplicate node id " + std::to_string(node.node_id));
  }
  index_[node.node_id] = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
}

void PoseGraph::add_edge(const RelativeConstraint& edge) {
  if (edge.from_id == edge.to_id) {
    throw InvalidGraph("self edge on node " + std::to_string(edge.from_id));
  }
  edges_.push_back(edge);
}

const PoseNode& PoseGraph::node(std::int64_t node_id) const {
  const auto it = index_.find(node_id);
  if (it == index_.end()) {
    throw InvalidGraph("unknown node id " + std::to_string(node_id));
  }
  return nodes_[it->second];
}

PoseNode& PoseGraph::mutable_node(std::int64_t node_id) {
  const auto it = index_.find(node_id);
  if (it == index_.end()) {
    throw InvalidGraph("unknown node id " + std::to_string(node_id));
  }
  return nodes_[it->second];
}

int PoseGraph::index_of(std::int64_t node_id) const {
  const auto it = index_.find(node_id);
  return it == index_.end() ? -1 : it->second;
}

void PoseGraph::set_pose(std::int64_t node_id, const Pose& pose) {
  mutable_node(node_id).pose = pose;
}

PoseGraph PoseGraph::subgraph(const std::vector<std::int64_t>& node_ids) const {
  PoseGraph out(frame_id_);
  std::set<std::int64_t> wanted(node_ids.begin(), node_ids.end());
  for (const PoseNode& n : nodes_) {
    if (wanted.count(n.node_id)) out.add_node(n);
  }
  for (const RelativeConstraint& e : edges_) {
    if (wanted.count(e.from_id) && wanted.count(e.to_id)) out.add_edge(e);
  }
  return out;
}

PoseGraph PoseGraph::robot_subgraph(int robot_id) const {
  std::vector<std::int64_t> ids;
  for (const PoseNode& n : nodes_) {
    if (n.robot_id == robot_id) ids.push_back(n.node_id);
  }
  return subgraph(ids);
}

std::vector<int> PoseGraph::robot_ids() const {
  std::set<int> ids;
  for (const PoseNode& n : nodes_) ids.insert(n.robot_id);
  return {ids.begin(), ids.end()};
}

void PoseGraph::validate() const {
  std::map<int, std::int64_t> last_ts;
  for (const PoseNode& n : nodes_) {
    const auto it = last_ts.find(n.robot_id);
    if (it != last_ts.end() && n.timestamp_ns <= it->second) {
      throw InvalidGraph("timestamps not strictly increasing for robot " +
                         std::to_string(n.robot_id));
    }
    last_ts[n.robot_id] = n.timestamp_ns;
  }
  for (const RelativeConstraint& e : edges_) {
    if (!has_node(e.from_id) || !has_node(e.to_id)) {
      throw InvalidGraph("edge references unknown node " +
                         std::to_string(has_node(e.from_id) ? e.to_id : e.from_id));
    }
    if ((e.information - e.information.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidGraph("information matrix not symmetric");
    }
    Eigen::LLT<Matrix6d> llt(e.information);
    if (llt.info() != Eigen::Success) {
      throw InvalidGraph("information matrix not positive definite");
    }
  }
}

double rmse_ate(const PoseGraph& estimate, const PoseGraph& ground_truth) {
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> matched;
  for (const PoseNode& n : estimate.nodes()) {
    if (ground_truth.has_node(n.node_id)) {
      matched.emplace_back(n.pose.translation(),
                           ground_truth.node(n.node_id).pose.translation());
    }
  }
  if (matched.empty()) throw NoCommonNodes();

  const int m = static_cast<int>(matched.size());
  Eigen::Matrix3Xd src(3, m), dst(3, m);
  for (int i = 0; i < m; ++i) {
    src.col(i) = matched[i].first;
    dst.col(i) = matched[i].second;
  }

  // Closed-form orthogonal Procrustes, rotation + translation only.
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
  const Eigen::Vector3d p = t.topRightCorner<3, 1>();

  double sq_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    sq_sum += (r * src.col(i) + p - dst.col(i)).squaredNorm();
  }
  return std::sqrt(sq_sum / m);
}

}  // namespace wavesync
