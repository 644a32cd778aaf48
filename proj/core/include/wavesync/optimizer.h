#pragma once

#include <cstdint>
#include <vector>

#include "wavesync/pose_graph.h"

namespace wavesync {

struct OptimizerSettings {
  int max_iterations = 50;
  // Converged when an accepted step decreases the cost by less than this,
  // relatively.
  double cost_decrease_tolerance = 1e-12;
  double initial_lambda = 1e-4;
  double lambda_scale = 10.0;
  double max_lambda = 1e12;
  // Dense normal equations below this node count, sparse Cholesky above.
  int dense_fallback_nodes = 200;
  // Optional Huber kernel on loop-closure edges.
  bool huber_on_loop_closures = false;
  double huber_delta = 1.0;
};

struct OptimizationProblem {
  PoseGraph graph;
  std::int64_t gauge_id = 0;
  OptimizerSettings settings;
};

struct OptimizationReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_ms = 0.0;
};

// Total weighted squared residual sum over all constraints, with the residual
// log(measurement^-1 * (pose_from^-1 * pose_to)) in the tangent space.
double chi2(const PoseGraph& graph);

// Levenberg-Marquardt over SE(3) with right-perturbation local
// parameterization; the gauge pose is held fixed. Throws Disconnected when
// nodes are unreachable from the gauge and NumericalFailure when damping
// maxes out without a cost decrease.
std::pair<PoseGraph, OptimizationReport> optimize(const OptimizationProblem& problem);

// Residual and its Jacobians for one constraint, exposed for testing against
// finite differences.
Vector6d constraint_residual(const Pose& from, const Pose& to, const Pose& measurement);
void constraint_jacobians(const Pose& from, const Pose& to, const Pose& measurement,
                          Matrix6d* j_from, Matrix6d* j_to);

}  // namespace wavesync
