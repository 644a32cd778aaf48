#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "wavesync/pose_graph.h"

namespace wavesync {

struct ProxyNode {
  int index = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::int64_t source_node_id = 0;
  std::int64_t timestamp_ns = 0;
  int submap_id = 0;
};

// Positional-only weighted undirected graph. Edge weights follow the
// squared-exponential distance kernel; by default the exponent uses the plain
// (unsquared) distance, exp(-||v_n - v_m|| / (2 sigma^2)). Setting
// `squared_distance` switches to the conventional exp(-d^2 / (2 sigma^2)).
struct ProxyGraph {
  std::vector<ProxyNode> nodes;
  Eigen::MatrixXd adjacency;  // N x N, symmetric, zero diagonal
  Eigen::VectorXd degree;     // row sums of adjacency
  double radius = 7.0;        // m
  double sigma = 7.0 / 3.0;   // m

  int size() const { return static_cast<int>(nodes.size()); }
};

struct Laplacian {
  Eigen::MatrixXd matrix;

  int size() const { return static_cast<int>(matrix.rows()); }
};

struct ProxyBuildOptions {
  double radius = 7.0;
  double sigma = 7.0 / 3.0;
  bool squared_distance = false;
  // Consecutive same-robot trajectory nodes stay connected beyond the radius
  // so a single trajectory cannot disconnect.
  bool connect_consecutive = true;
  // Brute-force pair search below this node count, grid bucketing above.
  int grid_search_threshold = 2000;
};

// One proxy node per pose node, in graph order. Throws EmptyGraph.
ProxyGraph build_proxy(const PoseGraph& graph, const ProxyBuildOptions& options);
ProxyGraph build_proxy(const PoseGraph& graph, double radius, double sigma);

Laplacian laplacian(const ProxyGraph& graph);

// Node indices to keep through Kron reduction: entries where the top
// Laplacian eigenvector is >= 0, with the eigenvector sign canonicalized.
// When the top eigenvalue is degenerate (gap below 1e-9 relative) the
// selection falls back to every other node in trajectory order.
std::vector<int> kron_select(const Laplacian& lap);

// Schur-complement elimination of everything outside `keep`. Preserves
// Laplacian structure and the effective resistance between kept nodes.
// Throws SingularElimination when the eliminated block is singular.
ProxyGraph kron_reduce(const ProxyGraph& graph, const std::vector<int>& keep);

// Drops edges with weight below `floor` (in place). Intended for transmitted
// graphs where far-field Schur fill-in carries no information.
void prune_edges_below(ProxyGraph& graph, double floor);

// Compact little-endian binary record: node count, per-node position triple,
// timestamp and ids, then the upper-triangular adjacency in CSR form.
std::string encode_proxy(const ProxyGraph& graph);
ProxyGraph decode_proxy(const std::string& bytes);
// Decodes starting at `pos`, advancing it past the record.
ProxyGraph decode_proxy(const std::string& bytes, std::size_t& pos);

// Human-readable dump for debugging.
std::string proxy_to_text(const ProxyGraph& graph);

}  // namespace wavesync
