#include "wavesync/graph_monitor.h"

#include <map>
#include <set>

#include "doctest.h"
#include "test_util.h"
#include "wavesync/error.h"

using namespace wavesync;

namespace {

// Straight-line trajectory; dt in seconds, step in meters.
PoseGraph line_trajectory(int samples, double step_m, double dt_s, int robot_id = 0,
                          double submap_period_s = 1e9) {
  PoseGraph g;
  for (int k = 0; k < samples; ++k) {
    PoseNode n;
    n.node_id = robot_id * 10'000'000 + k;
    n.robot_id = robot_id;
    n.submap_id = static_cast<int>(k * dt_s / submap_period_s);
    n.timestamp_ns = static_cast<std::int64_t>(k * dt_s * 1e9);
    n.pose = Pose::from_translation({k * step_m, 2.0 * robot_id, 0.0});
    g.add_node(n);
  }
  return g;
}

}  // namespace

TEST_CASE("representative selection") {
  const PipelineConfig config;
  SUBCASE("single-node submap keeps that node") {
    const PoseGraph g = line_trajectory(1, 0.1, 0.1);
    const auto reps = select_representatives(g, config);
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].node_id == g.nodes()[0].node_id);
  }
  SUBCASE("straight 10 m sampled every 0.1 m gives 11 representatives") {
    // 101 nodes, 0.1 m apart: the distance rule wins with reps each meter.
    const PoseGraph g = line_trajectory(101, 0.1, 0.1);
    const auto reps = select_representatives(g, config);
    CHECK(reps.size() == 11);
    for (std::size_t i = 1; i < reps.size(); ++i) {
      const double gap =
          (reps[i].pose.translation() - reps[i - 1].pose.translation()).norm();
      CHECK(gap == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("stationary robot for 10 s at 10 Hz gives 6 representatives") {
    const PoseGraph g = line_trajectory(101, 0.0, 0.1);
    const auto reps = select_representatives(g, config);
    CHECK(reps.size() == 6);
  }
  SUBCASE("per-submap first and last nodes are always kept") {
    const PoseGraph g = line_trajectory(100, 0.3, 0.1, 0, 3.0);
    const auto reps = select_representatives(g, config);
    std::set<std::int64_t> ids;
    for (const PoseNode& n : reps) ids.insert(n.node_id);
    // Submaps cut every 3 s = 30 nodes.
    CHECK(ids.count(0));
    CHECK(ids.count(29));
    CHECK(ids.count(30));
    CHECK(ids.count(99));
  }
}

TEST_CASE("make_broadcast") {
  PipelineConfig config;

  SUBCASE("below the trigger the node count is unchanged") {
    const PoseGraph g = line_trajectory(300, 1.0, 0.5);
    BroadcastStats stats;
    const BroadcastPayload payload = make_broadcast(g, 1, config, &stats);
    CHECK(stats.representatives == stats.transmitted);
    CHECK(payload.size() == stats.representatives);
    CHECK(payload.epoch == 1);
    CHECK(payload.orientations.size() == static_cast<std::size_t>(payload.size()));
    CHECK(payload.robot_ids.size() == static_cast<std::size_t>(payload.size()));
  }

  SUBCASE("above the trigger the graph reduces to roughly half") {
    config.kron_trigger = 100;
    const PoseGraph g = line_trajectory(1500, 1.0, 0.5, 0, 60.0);
    BroadcastStats stats;
    const BroadcastPayload payload = make_broadcast(g, 3, config, &stats);
    CHECK(stats.representatives > config.kron_trigger);
    CHECK(stats.transmitted < stats.representatives);
    const double ratio =
        static_cast<double>(stats.transmitted) / stats.representatives;
    CHECK(ratio > 0.3);
    CHECK(ratio < 0.75);
    CHECK(payload.orientations.size() == static_cast<std::size_t>(payload.size()));
  }

  SUBCASE("reduction keeps every robot's chronologically last node") {
    config.kron_trigger = 100;
    PoseGraph g = line_trajectory(800, 1.0, 0.5, 0, 60.0);
    const PoseGraph g1 = line_trajectory(800, 1.0, 0.5, 1, 60.0);
    for (const PoseNode& n : g1.nodes()) g.add_node(n);
    const BroadcastPayload payload = make_broadcast(g, 1, config);
    std::map<int, std::int64_t> last_ts, last_seen;
    for (const PoseNode& n : g.nodes()) {
      last_ts[n.robot_id] = std::max(last_ts[n.robot_id], n.timestamp_ns);
    }
    for (int i = 0; i < payload.size(); ++i) {
      last_seen[payload.robot_ids[i]] = std::max(
          last_seen[payload.robot_ids[i]], payload.proxy.nodes[i].timestamp_ns);
    }
    CHECK(last_seen[0] == last_ts[0]);
    CHECK(last_seen[1] == last_ts[1]);
  }

  SUBCASE("reduced payload is smaller than the unreduced one") {
    const PoseGraph g = line_trajectory(1500, 1.0, 0.5, 0, 60.0);
    PipelineConfig reduced_config = config;
    reduced_config.kron_trigger = 100;
    PipelineConfig unreduced_config = config;
    unreduced_config.kron_trigger = 1 << 30;
    const auto reduced = encode_payload(make_broadcast(g, 1, reduced_config)).size();
    const auto unreduced =
        encode_payload(make_broadcast(g, 1, unreduced_config)).size();
    CHECK(reduced < unreduced);
  }

  SUBCASE("empty graph throws") {
    CHECK_THROWS_AS(make_broadcast(PoseGraph(), 1, config), EmptyGraph);
  }

  SUBCASE("monitor epochs strictly increase") {
    GraphMonitor monitor(config);
    const PoseGraph g = line_trajectory(50, 1.0, 0.5);
    CHECK(monitor.broadcast(g).epoch == 1);
    CHECK(monitor.broadcast(g).epoch == 2);
  }
}

TEST_CASE("synchronize") {
  const PipelineConfig config;
  const PoseGraph g = line_trajectory(200, 0.5, 0.5);
  const BroadcastPayload payload = make_broadcast(g, 1, config);

  SUBCASE("identical node sets pair fully with zero residual") {
    const auto reps = select_representatives(g, config);
    PoseGraph rep_graph;
    for (const PoseNode& n : reps) rep_graph.add_node(n);
    const ProxyGraph robot = build_proxy(rep_graph, config.proxy);
    const Correspondence corr = synchronize(payload, robot, 0);
    CHECK(corr.size() == payload.size());
    for (const CorrespondencePair& pair : corr.pairs) {
      CHECK(pair.residual_dt_ns == 0);
    }
  }

  SUBCASE("double temporal density matches every server node once") {
    // Onboard proxy straight from the dense graph: twice the server rate.
    const PoseGraph dense = line_trajectory(399, 0.25, 0.25);
    const ProxyGraph robot = build_proxy(dense, config.proxy);
    const Correspondence corr = synchronize(payload, robot, 0);
    CHECK(corr.size() == payload.size());
    std::set<int> robot_used;
    for (const CorrespondencePair& pair : corr.pairs) {
      CHECK(robot_used.insert(pair.robot_index).second);
      CHECK(std::llabs(pair.residual_dt_ns) <= 500'000'000);
    }
    CHECK(static_cast<int>(robot_used.size()) < robot.size());
  }

  SUBCASE("disjoint time ranges throw NoOverlap") {
    PoseGraph late;
    for (int k = 0; k < 50; ++k) {
      PoseNode n;
      n.node_id = k;
      n.timestamp_ns = static_cast<std::int64_t>((1e6 + k) * 1e9);
      n.pose = Pose::from_translation({k * 1.0, 0.0, 0.0});
      late.add_node(n);
    }
    const ProxyGraph robot = build_proxy(late, config.proxy);
    CHECK_THROWS_AS(synchronize(payload, robot, 0), NoOverlap);
  }

  SUBCASE("wrong robot id has no candidates") {
    const auto reps = select_representatives(g, config);
    PoseGraph rep_graph;
    for (const PoseNode& n : reps) rep_graph.add_node(n);
    const ProxyGraph robot = build_proxy(rep_graph, config.proxy);
    CHECK_THROWS_AS(synchronize(payload, robot, 5), NoOverlap);
  }
}

TEST_CASE("payload binary record round trips") {
  const PoseGraph g = line_trajectory(120, 0.8, 0.5, 2, 10.0);
  const BroadcastPayload payload = make_broadcast(g, 9, PipelineConfig{});
  const BroadcastPayload decoded = decode_payload(encode_payload(payload));
  CHECK(decoded.epoch == payload.epoch);
  REQUIRE(decoded.size() == payload.size());
  for (int i = 0; i < payload.size(); ++i) {
    CHECK(decoded.proxy.nodes[i].position == payload.proxy.nodes[i].position);
    CHECK(decoded.proxy.nodes[i].timestamp_ns == payload.proxy.nodes[i].timestamp_ns);
    CHECK(decoded.robot_ids[i] == payload.robot_ids[i]);
    CHECK(decoded.orientations[i].coeffs() == payload.orientations[i].coeffs());
  }
  CHECK((decoded.proxy.adjacency - payload.proxy.adjacency).cwiseAbs().maxCoeff() ==
        0.0);
}
