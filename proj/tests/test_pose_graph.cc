#include "wavesync/pose_graph.h"

#include <random>

#include "doctest.h"
#include "test_util.h"
#include "wavesync/error.h"
#include "wavesync/posegraph_io.h"

using namespace wavesync;

TEST_CASE("compose identity and inverse") {
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    const Pose p = testing::random_pose(rng);
    CHECK(compose(Pose::identity(), p).is_approx(p, 1e-12));
    CHECK(compose(p, p.inverse()).is_approx(Pose::identity(), 1e-9));
    CHECK(std::abs(p.rotation().norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("compose pure translations adds") {
  const Pose a = Pose::from_translation({1.0, 0.0, 0.0});
  const Pose b = Pose::from_translation({2.0, 0.0, 0.0});
  const Pose c = compose(a, b);
  CHECK(c.translation().x() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.translation().norm() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("compose is associative") {
  std::mt19937 rng(11);
  for (int i = 0; i < 20; ++i) {
    const Pose a = testing::random_pose(rng);
    const Pose b = testing::random_pose(rng);
    const Pose c = testing::random_pose(rng);
    CHECK(compose(compose(a, b), c).is_approx(compose(a, compose(b, c)), 1e-9));
  }
}

TEST_CASE("relative_pose trivial cases and round trip") {
  std::mt19937 rng(13);
  const Pose p = testing::random_pose(rng);
  CHECK(relative_pose(p, p).is_approx(Pose::identity(), 1e-9));
  CHECK(relative_pose(Pose::identity(), p).is_approx(p, 1e-12));
  for (int i = 0; i < 100; ++i) {
    const Pose a = testing::random_pose(rng);
    const Pose b = testing::random_pose(rng);
    CHECK(compose(a, relative_pose(a, b)).is_approx(b, 1e-9));
  }
}

namespace {

PoseGraph graph_from_points(const std::vector<Eigen::Vector3d>& points) {
  PoseGraph g;
  for (std::size_t i = 0; i < points.size(); ++i) {
    PoseNode n;
    n.node_id = static_cast<std::int64_t>(i);
    n.timestamp_ns = static_cast<std::int64_t>(i) * 1'000'000'000;
    n.pose = Pose::from_translation(points[i]);
    g.add_node(n);
  }
  return g;
}

}  // namespace

TEST_CASE("rmse_ate identical graphs is zero") {
  std::mt19937 rng(17);
  const PoseGraph g = testing::random_graph(rng, 20);
  CHECK(rmse_ate(g, g) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rmse_ate is invariant to a rigid transform of the estimate") {
  std::mt19937 rng(19);
  const PoseGraph truth = testing::random_graph(rng, 30);
  for (int i = 0; i < 5; ++i) {
    const Pose t = testing::random_pose(rng);
    PoseGraph moved = truth;
    for (const PoseNode& n : truth.nodes()) {
      moved.set_pose(n.node_id, compose(t, n.pose));
    }
    CHECK(rmse_ate(moved, truth) < 1e-9);
  }
}

TEST_CASE("rmse_ate matches the hand-computed residual case") {
  // Collinear points with zero-mean displacements along the line: the optimal
  // alignment is the identity (up to a free rotation about the line), so the
  // RMSE follows directly from the residuals (0.3, -0.3, 0).
  const PoseGraph truth =
      graph_from_points({{0.0, 0.0, 0.0}, {5.0, 0.0, 0.0}, {10.0, 0.0, 0.0}});
  const PoseGraph estimate =
      graph_from_points({{0.3, 0.0, 0.0}, {4.7, 0.0, 0.0}, {10.0, 0.0, 0.0}});
  CHECK(rmse_ate(estimate, truth) ==
        doctest::Approx(std::sqrt(0.06)).epsilon(1e-9));
}

TEST_CASE("rmse_ate throws on disjoint node sets") {
  PoseGraph a, b;
  PoseNode n;
  n.node_id = 1;
  a.add_node(n);
  n.node_id = 2;
  b.add_node(n);
  CHECK_THROWS_AS(rmse_ate(a, b), NoCommonNodes);
}

TEST_CASE("serialize empty graph is header-only and round trips") {
  PoseGraph g("map");
  const std::string text = serialize_graph(g);
  for (const char c : text) {
    if (c == '\n') continue;
  }
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    CHECK(line.rfind("#", 0) == 0);
  }
  const PoseGraph parsed = parse_graph(text);
  CHECK(parsed.empty());
  CHECK(parsed.frame_id() == "map");
}

TEST_CASE("single identity vertex encodes exactly") {
  PoseGraph g;
  PoseNode n;
  n.node_id = 0;
  g.add_node(n);
  const std::string text = serialize_graph(g);
  CHECK(text.find("VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\n") != std::string::npos);
}

TEST_CASE("serialize then parse is the identity on random graphs") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const PoseGraph g = testing::random_graph(rng, 50);
    const PoseGraph parsed = parse_graph(serialize_graph(g));
    REQUIRE(parsed.size() == g.size());
    REQUIRE(parsed.edges().size() == g.edges().size());
    CHECK(parsed.frame_id() == g.frame_id());
    for (const PoseNode& n : g.nodes()) {
      const PoseNode& p = parsed.node(n.node_id);
      CHECK(p.robot_id == n.robot_id);
      CHECK(p.submap_id == n.submap_id);
      CHECK(p.timestamp_ns == n.timestamp_ns);
      CHECK((p.pose.translation() - n.pose.translation()).norm() < 1e-12);
      const double direct =
          (p.pose.rotation().coeffs() - n.pose.rotation().coeffs()).norm();
      const double flipped =
          (p.pose.rotation().coeffs() + n.pose.rotation().coeffs()).norm();
      CHECK(std::min(direct, flipped) < 1e-12);
    }
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
      const RelativeConstraint& a = g.edges()[i];
      const RelativeConstraint& b = parsed.edges()[i];
      CHECK(a.from_id == b.from_id);
      CHECK(a.to_id == b.to_id);
      CHECK(a.kind == b.kind);
      CHECK((a.information - b.information).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((a.measurement.translation() - b.measurement.translation()).norm() < 1e-12);
    }
  }
}

TEST_CASE("parse errors carry line numbers") {
  SUBCASE("short vertex") {
    try {
      parse_graph("VERTEX_SE3:QUAT 0 1 2\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("bad number on line 3") {
    const std::string text =
        "# .posegraph 1\n# FRAME map\nVERTEX_SE3:QUAT 0 0 0 zero 0 0 0 1\n";
    try {
      parse_graph(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("unknown record") {
    CHECK_THROWS_AS(parse_graph("VERTEX_SE2 0 0 0 0\n"), ParseError);
  }
  SUBCASE("edge referencing unknown vertex") {
    PoseGraph g;
    PoseNode n;
    n.node_id = 0;
    g.add_node(n);
    n.node_id = 1;
    n.timestamp_ns = 1;
    g.add_node(n);
    RelativeConstraint e;
    e.from_id = 0;
    e.to_id = 1;
    g.add_edge(e);
    std::string text = serialize_graph(g);
    // Drop vertex 1's line; its edge then dangles.
    const auto pos = text.find("VERTEX_SE3:QUAT 1");
    const auto end = text.find('\n', pos);
    text.erase(pos, end - pos + 1);
    CHECK_THROWS_AS(parse_graph(text), ParseError);
  }
  SUBCASE("duplicate vertex") {
    const std::string text =
        "VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\nVERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\n";
    try {
      parse_graph(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("validate rejects non-increasing timestamps and dangling edges") {
  PoseGraph g;
  PoseNode n;
  n.node_id = 0;
  n.timestamp_ns = 10;
  g.add_node(n);
  n.node_id = 1;
  n.timestamp_ns = 10;
  g.add_node(n);
  CHECK_THROWS_AS(g.validate(), InvalidGraph);
}
