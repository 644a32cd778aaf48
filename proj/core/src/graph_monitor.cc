#include "wavesync/graph_monitor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "wavesync/error.h"

namespace wavesync {
namespace {

std::vector<const PoseNode*> subsample_by_distance(
    const std::vector<const PoseNode*>& nodes, double min_distance) {
  // Slack keeps the selection stable when gaps sit numerically on the
  // threshold (server and onboard copies of the same trajectory must pick
  // the same nodes).
  const double gate = min_distance - 1e-9;
  std::vector<const PoseNode*> kept;
  for (const PoseNode* n : nodes) {
    if (kept.empty() ||
        (n->pose.translation() - kept.back()->pose.translation()).norm() >= gate) {
      kept.push_back(n);
    }
  }
  return kept;
}

std::vector<const PoseNode*> subsample_by_time(const std::vector<const PoseNode*>& nodes,
                                               double min_dt_s) {
  const auto min_dt_ns = static_cast<std::int64_t>(min_dt_s * 1e9);
  std::vector<const PoseNode*> kept;
  for (const PoseNode* n : nodes) {
    if (kept.empty() || n->timestamp_ns - kept.back()->timestamp_ns >= min_dt_ns) {
      kept.push_back(n);
    }
  }
  return kept;
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("truncated payload record");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<PoseNode> select_representatives(const PoseGraph& graph,
                                             const PipelineConfig& config) {
  // Group nodes per (robot, submap), preserving trajectory order.
  std::map<std::pair<int, int>, std::vector<const PoseNode*>> submaps;
  for (const PoseNode& n : graph.nodes()) {
    submaps[{n.robot_id, n.submap_id}].push_back(&n);
  }

  std::vector<PoseNode> reps;
  for (const auto& [key, nodes] : submaps) {
    const auto by_distance = subsample_by_distance(nodes, config.rep_min_distance_m);
    const auto by_time = subsample_by_time(nodes, config.rep_min_dt_s);
    const auto& chosen =
        by_distance.size() >= by_time.size() ? by_distance : by_time;

    std::set<std::int64_t> ids;
    std::vector<const PoseNode*> selected;
    auto add = [&](const PoseNode* n) {
      if (ids.insert(n->node_id).second) selected.push_back(n);
    };
    add(nodes.front());
    for (const PoseNode* n : chosen) add(n);
    add(nodes.back());
    std::sort(selected.begin(), selected.end(),
              [](const PoseNode* a, const PoseNode* b) {
                return a->timestamp_ns < b->timestamp_ns;
              });
    for (const PoseNode* n : selected) reps.push_back(*n);
  }

  std::stable_sort(reps.begin(), reps.end(), [](const PoseNode& a, const PoseNode& b) {
    if (a.robot_id != b.robot_id) return a.robot_id < b.robot_id;
    return a.timestamp_ns < b.timestamp_ns;
  });
  return reps;
}

BroadcastPayload make_broadcast(const PoseGraph& server_graph, std::int64_t epoch,
                                const PipelineConfig& config, BroadcastStats* stats) {
  if (server_graph.empty()) throw EmptyGraph("make_broadcast: empty server graph");

  const std::vector<PoseNode> reps = select_representatives(server_graph, config);
  PoseGraph rep_graph(server_graph.frame_id());
  for (const PoseNode& n : reps) rep_graph.add_node(n);

  BroadcastPayload payload;
  payload.epoch = epoch;
  payload.proxy = build_proxy(rep_graph, config.proxy);
  payload.orientations.reserve(reps.size());
  payload.robot_ids.reserve(reps.size());
  for (const PoseNode& n : reps) {
    payload.orientations.push_back(n.pose.rotation());
    payload.robot_ids.push_back(n.robot_id);
  }

  if (payload.proxy.size() > config.kron_trigger) {
    std::vector<int> keep = kron_select(laplacian(payload.proxy));
    std::set<int> keep_set(keep.begin(), keep.end());

    // The latest node of each robot carries its last known position and must
    // survive the reduction.
    std::map<int, int> last_per_robot;
    for (int i = 0; i < payload.proxy.size(); ++i) {
      last_per_robot[payload.robot_ids[i]] = i;
    }
    for (const auto& [robot, index] : last_per_robot) keep_set.insert(index);

    const std::vector<int> kept(keep_set.begin(), keep_set.end());
    payload.proxy = kron_reduce(payload.proxy, kept);
    prune_edges_below(payload.proxy, config.broadcast_weight_floor);

    std::vector<Eigen::Quaterniond> orientations;
    std::vector<int> robot_ids;
    orientations.reserve(kept.size());
    robot_ids.reserve(kept.size());
    for (int index : kept) {
      orientations.push_back(payload.orientations[index]);
      robot_ids.push_back(payload.robot_ids[index]);
    }
    payload.orientations = std::move(orientations);
    payload.robot_ids = std::move(robot_ids);
  }
  if (stats) {
    stats->representatives = static_cast<int>(reps.size());
    stats->transmitted = payload.proxy.size();
  }
  return payload;
}

Correspondence synchronize(const BroadcastPayload& server, const ProxyGraph& robot,
                           int robot_id, double tolerance_s) {
  if (server.size() == 0 || robot.size() == 0) {
    throw NoOverlap("synchronize: empty graph");
  }
  const auto tolerance_ns = static_cast<std::int64_t>(tolerance_s * 1e9);

  struct Candidate {
    std::int64_t abs_dt;
    int server_index;
    int robot_index;
  };
  std::vector<Candidate> candidates;

  // Robot proxy nodes sorted by timestamp for a tolerance-window sweep.
  std::vector<int> robot_order(robot.size());
  for (int i = 0; i < robot.size(); ++i) robot_order[i] = i;
  std::sort(robot_order.begin(), robot_order.end(), [&](int a, int b) {
    return robot.nodes[a].timestamp_ns < robot.nodes[b].timestamp_ns;
  });

  for (int s = 0; s < server.size(); ++s) {
    if (server.robot_ids[s] != robot_id) continue;
    const std::int64_t ts = server.proxy.nodes[s].timestamp_ns;
    auto lo = std::lower_bound(robot_order.begin(), robot_order.end(), ts - tolerance_ns,
                               [&](int idx, std::int64_t t) {
                                 return robot.nodes[idx].timestamp_ns < t;
                               });
    for (auto it = lo; it != robot_order.end(); ++it) {
      const std::int64_t tr = robot.nodes[*it].timestamp_ns;
      if (tr > ts + tolerance_ns) break;
      candidates.push_back({std::abs(tr - ts), s, *it});
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.abs_dt != b.abs_dt) return a.abs_dt < b.abs_dt;
    if (a.server_index != b.server_index) return a.server_index < b.server_index;
    return a.robot_index < b.robot_index;
  });

  std::set<int> used_server, used_robot;
  Correspondence corr;
  for (const Candidate& c : candidates) {
    if (used_server.count(c.server_index) || used_robot.count(c.robot_index)) continue;
    used_server.insert(c.server_index);
    used_robot.insert(c.robot_index);
    const std::int64_t dt = robot.nodes[c.robot_index].timestamp_ns -
                            server.proxy.nodes[c.server_index].timestamp_ns;
    corr.pairs.push_back({c.server_index, c.robot_index, dt});
  }
  if (corr.pairs.empty()) throw NoOverlap();

  std::sort(corr.pairs.begin(), corr.pairs.end(),
            [](const CorrespondencePair& a, const CorrespondencePair& b) {
              return a.server_index < b.server_index;
            });
  return corr;
}

std::string encode_payload(const BroadcastPayload& payload) {
  std::string out;
  put<std::int64_t>(out, payload.epoch);
  out += encode_proxy(payload.proxy);
  for (int i = 0; i < payload.size(); ++i) {
    const Eigen::Quaterniond& q = payload.orientations[i];
    put<double>(out, q.w());
    put<double>(out, q.x());
    put<double>(out, q.y());
    put<double>(out, q.z());
    put<std::int32_t>(out, payload.robot_ids[i]);
  }
  return out;
}

BroadcastPayload decode_payload(const std::string& bytes) {
  BroadcastPayload payload;
  std::size_t pos = 0;
  payload.epoch = take<std::int64_t>(bytes, pos);
  payload.proxy = decode_proxy(bytes, pos);

  payload.orientations.reserve(payload.proxy.size());
  payload.robot_ids.reserve(payload.proxy.size());
  for (int i = 0; i < payload.proxy.size(); ++i) {
    const double w = take<double>(bytes, pos);
    const double x = take<double>(bytes, pos);
    const double y = take<double>(bytes, pos);
    const double z = take<double>(bytes, pos);
    payload.orientations.emplace_back(w, x, y, z);
    payload.robot_ids.push_back(take<std::int32_t>(bytes, pos));
  }
  return payload;
}

BroadcastPayload GraphMonitor::broadcast(const PoseGraph& server_graph) {
  return make_broadcast(server_graph, ++epoch_, config_);
}

}  // namespace wavesync
