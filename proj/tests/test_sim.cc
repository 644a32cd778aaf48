#include "wavesync/sim/harness.h"

#include <algorithm>

#include "doctest.h"
#include "wavesync/error.h"
#include "wavesync/posegraph_io.h"
#include "wavesync/sim/scenario.h"

using namespace wavesync;
using namespace wavesync::sim;

TEST_CASE("zero drift reproduces ground truth exactly") {
  Scenario s = scenario_preset("euroc-like", 5);
  s = without_drift(s);
  const auto trajs = generate_scenario(s);
  for (const RobotTrajectories& traj : trajs) {
    REQUIRE(traj.odometry.size() == traj.ground_truth.size());
    for (std::size_t k = 0; k < traj.odometry.size(); ++k) {
      CHECK(traj.odometry.nodes()[k].pose.translation() ==
            traj.ground_truth.nodes()[k].pose.translation());
    }
  }
}

TEST_CASE("identical seeds give byte-identical trajectories") {
  const Scenario s = scenario_preset("tunnel", 42);
  const auto a = generate_scenario(s);
  const auto b = generate_scenario(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(serialize_graph(a[r].odometry) == serialize_graph(b[r].odometry));
    CHECK(serialize_graph(a[r].ground_truth) == serialize_graph(b[r].ground_truth));
  }
}

TEST_CASE("different seeds change the drift") {
  const auto a = generate_scenario(scenario_preset("tunnel", 1));
  const auto b = generate_scenario(scenario_preset("tunnel", 2));
  CHECK(serialize_graph(a[0].odometry) != serialize_graph(b[0].odometry));
  // Ground truth is seed-independent.
  CHECK(serialize_graph(a[0].ground_truth) == serialize_graph(b[0].ground_truth));
}

TEST_CASE("pure yaw drift on a straight line grows superlinearly") {
  Scenario s;
  s.name = "straight";
  s.odometry_rate_hz = 5.0;
  s.epoch_period_s = 60.0;
  RobotSpec r;
  r.speed_mps = 2.0;
  r.waypoints = {{0.0, 0.0, 0.0}, {400.0, 0.0, 0.0}};
  r.drift.yaw_sigma = 0.01;
  s.robots = {r};

  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    s.seed = seed;
    const auto trajs = generate_scenario(s);
    const auto& odom = trajs[0].odometry.nodes();
    const auto& truth = trajs[0].ground_truth.nodes();
    const std::size_t n = odom.size();
    auto error_at = [&](std::size_t k) {
      return (odom[k].pose.translation() - truth[k].pose.translation()).norm();
    };
    // Average over a window to reduce single-sample noise.
    auto window_error = [&](std::size_t center) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t k = center - 10; k <= center + 10 && k < n; ++k) {
        sum += error_at(k);
        ++count;
      }
      return sum / count;
    };
    const double mid = window_error(n / 2);
    const double end = window_error(n - 11);
    if (mid > 0.0) ratios.push_back(end / mid);
  }
  std::sort(ratios.begin(), ratios.end());
  REQUIRE(ratios.size() == 5);
  // Linear growth would give 2.0; the integrated random walk grows faster.
  CHECK(ratios[2] > 2.0);
}

TEST_CASE("invalid scenarios are rejected") {
  CHECK_THROWS_AS(scenario_preset("nope", 1), InvalidSpec);
  Scenario s;
  s.robots.clear();
  CHECK_THROWS_AS(generate_scenario(s), InvalidSpec);
  RobotSpec r;
  r.waypoints = {{0, 0, 0}};
  s.robots = {r};
  CHECK_THROWS_AS(generate_scenario(s), InvalidSpec);
}

TEST_CASE("drift-free closed loop adds no constraints and keeps the estimate") {
  Scenario s = without_drift(scenario_preset("euroc-like", 3));
  RunOptions options;
  options.oracle.noise_sigma_m = 0.0;
  options.strategy = CorrectionStrategy::kProposed;
  const RunResult result = run_epochs(s, options);
  for (const RobotSummary& r : result.metrics.robots) {
    CHECK(r.constraints_added == 0);
    CHECK(r.constraints_updated == 0);
    CHECK(r.correction_factors == 0);
    CHECK(r.rmse_corrected == r.rmse_uncorrected);
    CHECK(r.rmse_corrected < 1e-12);
  }
}

TEST_CASE("empty run produces a header-only CSV") {
  const RunMetrics empty;
  const std::string csv = metrics_csv(empty);
  CHECK(csv ==
        "epoch,robot_id,bytes_robot_to_server,bytes_server_to_robot,"
        "payload_nodes_pre,payload_nodes_post,constraints_added,constraints_updated,"
        "constraints_skipped,rmse_m\n");
}

TEST_CASE("metrics CSV is deterministic and sums are consistent") {
  Scenario s = scenario_preset("indoor-outdoor", 11);
  RunOptions options;
  options.max_epochs = 3;
  const RunResult a = run_epochs(s, options);
  const RunResult b = run_epochs(s, options);
  const std::string csv_a = metrics_csv(a.metrics);
  CHECK(csv_a == metrics_csv(b.metrics));
  CHECK(csv_a.rfind("epoch,robot_id,", 0) == 0);

  for (const RobotSummary& r : a.metrics.robots) {
    int added = 0;
    std::uint64_t bytes_down = 0;
    for (const EpochRow& row : a.metrics.rows) {
      if (row.robot_id == r.robot_id) {
        added += row.constraints_added;
        bytes_down += row.bytes_server_to_robot;
      }
    }
    CHECK(added == r.constraints_added);
    CHECK(bytes_down == r.bytes_from_server);
  }
}

TEST_CASE("loop-closed server oracle runs and improves on raw odometry") {
  Scenario s = scenario_preset("euroc-like", 7);
  RunOptions options;
  options.oracle.mode = ServerMode::kLoopClosed;
  options.strategy = CorrectionStrategy::kNone;
  options.max_epochs = 4;
  const RunResult result = run_epochs(s, options);
  CHECK(!result.server.empty());
  // The server graph spans all robots.
  CHECK(result.server.robot_ids().size() == 3);
}

TEST_CASE("baseline strategy adds roughly one constraint per matched pair") {
  Scenario s = scenario_preset("euroc-like", 13);
  RunOptions options;
  options.strategy = CorrectionStrategy::kBaseline;
  options.max_epochs = 2;
  const RunResult result = run_epochs(s, options);
  int total = 0;
  for (const RobotSummary& r : result.metrics.robots) total += r.constraints_added;
  CHECK(total > 0);
}
