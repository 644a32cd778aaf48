#include "wavesync/optimizer.h"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "wavesync/error.h"
#include "wavesync/lie.h"

namespace wavesync {
namespace {

double edge_cost(const RelativeConstraint& edge, const Pose& from, const Pose& to) {
  const Vector6d r = constraint_residual(from, to, edge.measurement);
  return r.dot(edge.information * r);
}

// sqrt of the IRLS weight for a Huber kernel on the whitened residual norm.
double robust_weight(double cost, double delta) {
  const double norm = std::sqrt(cost);
  if (norm <= delta) return 1.0;
  return std::sqrt(delta / norm);
}

}  // namespace

Vector6d constraint_residual(const Pose& from, const Pose& to, const Pose& measurement) {
  return se3_log(measurement.inverse() * from.inverse() * to);
}

void constraint_jacobians(const Pose& from, const Pose& to, const Pose& measurement,
                          Matrix6d* j_from, Matrix6d* j_to) {
  const Pose between = from.inverse() * to;
  const Vector6d r = se3_log(measurement.inverse() * between);
  const Matrix6d jr_inv = se3_right_jacobian_inverse(r);
  if (j_to) *j_to = jr_inv;
  if (j_from) *j_from = -jr_inv * se3_adjoint(between.inverse());
}

double chi2(const PoseGraph& graph) {
  double total = 0.0;
  for (const RelativeConstraint& e : graph.edges()) {
    total += edge_cost(e, graph.node(e.from_id).pose, graph.node(e.to_id).pose);
  }
  return total;
}

std::pair<PoseGraph, OptimizationReport> optimize(const OptimizationProblem& problem) {
  const auto t_start = std::chrono::steady_clock::now();
  PoseGraph graph = problem.graph;
  const OptimizerSettings& settings = problem.settings;

  if (!graph.has_node(problem.gauge_id)) {
    throw InvalidGraph("optimize: gauge node missing");
  }

  const int n = static_cast<int>(graph.size());
  const int gauge_index = graph.index_of(problem.gauge_id);

  // Connectivity check from the gauge over the constraint graph.
  {
    std::vector<std::vector<int>> adj(n);
    for (const RelativeConstraint& e : graph.edges()) {
      const int a = graph.index_of(e.from_id);
      const int b = graph.index_of(e.to_id);
      if (a < 0 || b < 0) throw InvalidGraph("optimize: dangling edge");
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<bool> seen(n, false);
    std::queue<int> queue;
    queue.push(gauge_index);
    seen[gauge_index] = true;
    int reached = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      ++reached;
      for (int w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          queue.push(w);
        }
      }
    }
    if (reached != n) {
      throw Disconnected("optimize: " + std::to_string(n - reached) +
                         " nodes unreachable from the gauge");
    }
  }

  // State indexing skips the gauge node.
  std::vector<int> state_of_node(n, -1);
  {
    int next = 0;
    for (int i = 0; i < n; ++i) {
      if (i != gauge_index) state_of_node[i] = next++;
    }
  }
  const int num_states = n - 1;

  std::vector<Pose> poses(n);
  for (int i = 0; i < n; ++i) poses[i] = graph.nodes()[i].pose;

  struct EdgeRef {
    int from_index;
    int to_index;
    const RelativeConstraint* edge;
  };
  std::vector<EdgeRef> edges;
  edges.reserve(graph.edges().size());
  for (const RelativeConstraint& e : graph.edges()) {
    edges.push_back({graph.index_of(e.from_id), graph.index_of(e.to_id), &e});
  }

  auto total_cost = [&](const std::vector<Pose>& p) {
    double cost = 0.0;
    for (const EdgeRef& er : edges) {
      double c = edge_cost(*er.edge, p[er.from_index], p[er.to_index]);
      if (settings.huber_on_loop_closures &&
          er.edge->kind == ConstraintKind::kLoopClosure) {
        const double w = robust_weight(c, settings.huber_delta);
        c *= w * w;
      }
      cost += c;
    }
    return cost;
  };

  OptimizationReport report;
  report.initial_cost = total_cost(poses);
  double cost = report.initial_cost;
  double lambda = settings.initial_lambda;
  const bool dense = n <= settings.dense_fallback_nodes;

  if (num_states == 0) {
    report.converged = true;
  }

  for (int iteration = 0; iteration < settings.max_iterations && num_states > 0;
       ++iteration) {
    report.iterations = iteration + 1;

    // Assemble the normal equations H dx = -b in the tangent space.
    Eigen::VectorXd b = Eigen::VectorXd::Zero(6 * num_states);
    Eigen::MatrixXd h_dense;
    std::vector<Eigen::Triplet<double>> h_triplets;
    if (dense) h_dense = Eigen::MatrixXd::Zero(6 * num_states, 6 * num_states);

    auto add_block = [&](int si, int sj, const Matrix6d& m) {
      if (dense) {
        h_dense.block<6, 6>(6 * si, 6 * sj) += m;
        return;
      }
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
          if (m(r, c) != 0.0) h_triplets.emplace_back(6 * si + r, 6 * sj + c, m(r, c));
        }
      }
    };

    for (const EdgeRef& er : edges) {
      const Pose& from = poses[er.from_index];
      const Pose& to = poses[er.to_index];
      const Vector6d r = constraint_residual(from, to, er.edge->measurement);
      Matrix6d j_from, j_to;
      constraint_jacobians(from, to, er.edge->measurement, &j_from, &j_to);

      Matrix6d info = er.edge->information;
      if (settings.huber_on_loop_closures &&
          er.edge->kind == ConstraintKind::kLoopClosure) {
        const double w = robust_weight(r.dot(info * r), settings.huber_delta);
        info *= w * w;
      }

      const int sf = state_of_node[er.from_index];
      const int st = state_of_node[er.to_index];
      if (sf >= 0) {
        add_block(sf, sf, j_from.transpose() * info * j_from);
        b.segment<6>(6 * sf) += j_from.transpose() * info * r;
      }
      if (st >= 0) {
        add_block(st, st, j_to.transpose() * info * j_to);
        b.segment<6>(6 * st) += j_to.transpose() * info * r;
      }
      if (sf >= 0 && st >= 0) {
        add_block(sf, st, j_from.transpose() * info * j_to);
        add_block(st, sf, j_to.transpose() * info * j_from);
      }
    }

    const double gradient_norm = b.lpNorm<Eigen::Infinity>();
    if (gradient_norm < 1e-14) {
      report.converged = true;
      break;
    }

    Eigen::SparseMatrix<double> h_sparse;
    if (!dense) {
      h_sparse.resize(6 * num_states, 6 * num_states);
      h_sparse.setFromTriplets(h_triplets.begin(), h_triplets.end());
    }

    // Marquardt damping with a x10 / /10 schedule.
    bool accepted = false;
    while (!accepted) {
      Eigen::VectorXd dx;
      bool solved = false;
      if (dense) {
        Eigen::MatrixXd damped = h_dense;
        damped.diagonal() += lambda * h_dense.diagonal().cwiseMax(1e-12);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
        if (ldlt.info() == Eigen::Success) {
          dx = ldlt.solve(-b);
          solved = dx.allFinite();
        }
      } else {
        Eigen::SparseMatrix<double> damped = h_sparse;
        Eigen::VectorXd diag(6 * num_states);
        for (int i = 0; i < 6 * num_states; ++i) {
          diag[i] = lambda * std::max(h_sparse.coeff(i, i), 1e-12);
        }
        for (int i = 0; i < 6 * num_states; ++i) damped.coeffRef(i, i) += diag[i];
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(damped);
        if (ldlt.info() == Eigen::Success) {
          dx = ldlt.solve(-b);
          solved = dx.allFinite();
        }
      }

      if (solved) {
        std::vector<Pose> candidate = poses;
        for (int i = 0; i < n; ++i) {
          const int s = state_of_node[i];
          if (s < 0) continue;
          candidate[i] = candidate[i] * se3_exp(dx.segment<6>(6 * s));
        }
        const double candidate_cost = total_cost(candidate);
        if (candidate_cost < cost) {
          poses = std::move(candidate);
          const double decrease = cost - candidate_cost;
          cost = candidate_cost;
          lambda = std::max(lambda / settings.lambda_scale, 1e-12);
          accepted = true;
          if (decrease < settings.cost_decrease_tolerance * std::max(1.0, cost) ||
              cost < 1e-16) {
            report.converged = true;
          }
          break;
        }
      }

      lambda *= settings.lambda_scale;
      if (lambda > settings.max_lambda) {
        if (cost <= report.initial_cost) {
          // No descent direction left; treat the current iterate as final.
          report.converged = true;
          accepted = true;
          break;
        }
        throw NumericalFailure("optimize: cost not decreasing at max damping");
      }
    }
    if (report.converged) break;
  }

  for (int i = 0; i < n; ++i) {
    graph.set_pose(graph.nodes()[i].node_id, poses[i]);
  }
  report.final_cost = cost;
  report.wall_time_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
  return {std::move(graph), report};
}

}  // namespace wavesync
