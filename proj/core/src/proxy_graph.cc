#include "wavesync/proxy_graph.h"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "wavesync/error.h"

namespace wavesync {
namespace {

double edge_weight(double distance, double sigma, bool squared) {
  const double num = squared ? distance * distance : distance;
  return std::exp(-num / (2.0 * sigma * sigma));
}

std::int64_t cell_key(const Eigen::Vector3d& p, double cell) {
  const auto ix = static_cast<std::int64_t>(std::floor(p.x() / cell)) + (1 << 20);
  const auto iy = static_cast<std::int64_t>(std::floor(p.y() / cell)) + (1 << 20);
  const auto iz = static_cast<std::int64_t>(std::floor(p.z() / cell)) + (1 << 20);
  return (ix << 42) | (iy << 21) | iz;
}

// Index pairs within `radius` of each other, grid-bucketed for large N.
std::vector<std::pair<int, int>> pairs_within_radius(
    const std::vector<ProxyNode>& nodes, double radius, int brute_force_limit) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::pair<int, int>> out;
  if (n <= brute_force_limit) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if ((nodes[i].position - nodes[j].position).norm() <= radius) {
          out.emplace_back(i, j);
        }
      }
    }
    return out;
  }

  std::unordered_map<std::int64_t, std::vector<int>> grid;
  for (int i = 0; i < n; ++i) {
    grid[cell_key(nodes[i].position, radius)].push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d& p = nodes[i].position;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const Eigen::Vector3d q = p + radius * Eigen::Vector3d(dx, dy, dz);
          const auto it = grid.find(cell_key(q, radius));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j <= i) continue;
            if ((p - nodes[j].position).norm() <= radius) out.emplace_back(i, j);
          }
        }
      }
    }
  }
  return out;
}

void canonicalize_sign(Eigen::VectorXd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

std::vector<int> every_other(int n) {
  std::vector<int> keep;
  for (int i = 0; i < n; i += 2) keep.push_back(i);
  return keep;
}

// Top two eigenvalues and the top eigenvector of a symmetric PSD matrix via
// power iteration (sparse matvec) with one deflation step. Used above the
// dense cutoff.
void top_two_eigen(const Eigen::MatrixXd& m, double* lambda1, double* lambda2,
                   Eigen::VectorXd* v1) {
  const int n = static_cast<int>(m.rows());
  Eigen::SparseMatrix<double> sparse(n, n);
  {
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (m(i, j) != 0.0) triplets.emplace_back(i, j, m(i, j));
      }
    }
    sparse.setFromTriplets(triplets.begin(), triplets.end());
  }

  std::mt19937 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vector = [&]() {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v.normalized().eval();
  };

  auto iterate = [&](Eigen::VectorXd v, const Eigen::VectorXd* deflate, double* lambda) {
    double prev = 0.0;
    for (int it = 0; it < 10000; ++it) {
      Eigen::VectorXd w = sparse * v;
      if (deflate) w -= deflate->dot(w) * (*deflate);
      const double norm = w.norm();
      if (norm == 0.0) {
        *lambda = 0.0;
        return v;
      }
      v = w / norm;
      const double cur = v.dot(sparse * v);
      if (it > 32 && std::abs(cur - prev) <= 1e-12 * std::max(1.0, std::abs(cur))) {
        prev = cur;
        break;
      }
      prev = cur;
    }
    *lambda = prev;
    return v;
  };

  Eigen::VectorXd u1 = iterate(random_vector(), nullptr, lambda1);
  Eigen::VectorXd u2 = iterate(random_vector(), &u1, lambda2);
  (void)u2;
  *v1 = u1;
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("truncated proxy record");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

ProxyGraph build_proxy(const PoseGraph& graph, const ProxyBuildOptions& options) {
  if (graph.empty()) throw EmptyGraph("build_proxy: empty pose graph");
  if (options.radius <= 0.0 || options.sigma <= 0.0) {
    throw Error("build_proxy: radius and sigma must be > 0");
  }

  ProxyGraph proxy;
  proxy.radius = options.radius;
  proxy.sigma = options.sigma;

  const auto& nodes = graph.nodes();
  const int n = static_cast<int>(nodes.size());
  proxy.nodes.reserve(n);
  for (int i = 0; i < n; ++i) {
    ProxyNode p;
    p.index = i;
    p.position = nodes[i].pose.translation();
    p.source_node_id = nodes[i].node_id;
    p.timestamp_ns = nodes[i].timestamp_ns;
    p.submap_id = nodes[i].submap_id;
    proxy.nodes.push_back(p);
  }

  proxy.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] :
       pairs_within_radius(proxy.nodes, options.radius, options.grid_search_threshold)) {
    const double d = (proxy.nodes[i].position - proxy.nodes[j].position).norm();
    const double w = edge_weight(d, options.sigma, options.squared_distance);
    proxy.adjacency(i, j) = w;
    proxy.adjacency(j, i) = w;
  }

  if (options.connect_consecutive) {
    for (int i = 0; i + 1 < n; ++i) {
      if (nodes[i].robot_id != nodes[i + 1].robot_id) continue;
      if (proxy.adjacency(i, i + 1) > 0.0) continue;
      const double d = (proxy.nodes[i].position - proxy.nodes[i + 1].position).norm();
      const double w = edge_weight(d, options.sigma, options.squared_distance);
      proxy.adjacency(i, i + 1) = w;
      proxy.adjacency(i + 1, i) = w;
    }
  }

  proxy.degree = proxy.adjacency.rowwise().sum();
  return proxy;
}

ProxyGraph build_proxy(const PoseGraph& graph, double radius, double sigma) {
  ProxyBuildOptions options;
  options.radius = radius;
  options.sigma = sigma;
  return build_proxy(graph, options);
}

Laplacian laplacian(const ProxyGraph& graph) {
  Laplacian lap;
  lap.matrix = Eigen::MatrixXd(graph.degree.asDiagonal());
  lap.matrix -= graph.adjacency;
  return lap;
}

std::vector<int> kron_select(const Laplacian& lap) {
  const int n = lap.size();
  if (n < 2) throw Error("kron_select: need at least 2 nodes");

  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Eigen::VectorXd top;

  constexpr int kDenseCutoff = 600;
  if (n <= kDenseCutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.matrix);
    if (solver.info() != Eigen::Success) {
      throw ConvergenceFailure("kron_select: eigensolver failed");
    }
    lambda1 = solver.eigenvalues()[n - 1];
    lambda2 = solver.eigenvalues()[n - 2];
    top = solver.eigenvectors().col(n - 1);
  } else {
    top_two_eigen(lap.matrix, &lambda1, &lambda2, &top);
  }

  // Degenerate top eigenvalue: polarity is meaningless, keep every other node.
  if (lambda1 - lambda2 <= 1e-9 * std::max(1.0, lambda1)) {
    return every_other(n);
  }

  canonicalize_sign(top);
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (top[i] >= 0.0) keep.push_back(i);
  }
  if (keep.empty() || static_cast<int>(keep.size()) == n) {
    return every_other(n);
  }
  return keep;
}

ProxyGraph kron_reduce(const ProxyGraph& graph, const std::vector<int>& keep) {
  const int n = graph.size();
  std::set<int> keep_set(keep.begin(), keep.end());
  if (keep_set.empty()) throw Error("kron_reduce: keep set is empty");
  if (*keep_set.begin() < 0 || *keep_set.rbegin() >= n) {
    throw Error("kron_reduce: keep index out of range");
  }

  std::vector<int> kept(keep_set.begin(), keep_set.end());
  std::vector<int> elim;
  for (int i = 0; i < n; ++i) {
    if (!keep_set.count(i)) elim.push_back(i);
  }

  const int k = static_cast<int>(kept.size());
  ProxyGraph out;
  out.radius = graph.radius;
  out.sigma = graph.sigma;
  out.nodes.reserve(k);
  for (int i = 0; i < k; ++i) {
    ProxyNode p = graph.nodes[kept[i]];
    p.index = i;
    out.nodes.push_back(p);
  }

  const Eigen::MatrixXd lap = Eigen::MatrixXd(graph.degree.asDiagonal()) - graph.adjacency;

  Eigen::MatrixXd reduced;
  if (elim.empty()) {
    reduced = lap;
  } else {
    const int e = static_cast<int>(elim.size());
    Eigen::MatrixXd l_ke(k, e);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < e; ++j) l_ke(i, j) = lap(kept[i], elim[j]);
    }

    Eigen::SparseMatrix<double> l_ee(e, e);
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < e; ++i) {
      for (int j = 0; j < e; ++j) {
        const double v = lap(elim[i], elim[j]);
        if (v != 0.0) triplets.emplace_back(i, j, v);
      }
    }
    l_ee.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(l_ee);
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().cwiseAbs().minCoeff() < 1e-10) {
      throw SingularElimination();
    }

    const Eigen::MatrixXd x = ldlt.solve(l_ke.transpose());
    Eigen::MatrixXd l_kk(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) l_kk(i, j) = lap(kept[i], kept[j]);
    }
    reduced = l_kk - l_ke * x;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
  }

  out.adjacency = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      // Fill-in is nonnegative in exact arithmetic; clip round-off negatives.
      const double w = std::max(-reduced(i, j), 0.0);
      out.adjacency(i, j) = w;
      out.adjacency(j, i) = w;
    }
  }
  out.degree = out.adjacency.rowwise().sum();
  return out;
}

void prune_edges_below(ProxyGraph& graph, double floor) {
  const int n = graph.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && graph.adjacency(i, j) < floor) graph.adjacency(i, j) = 0.0;
    }
  }
  graph.degree = graph.adjacency.rowwise().sum();
}

std::string encode_proxy(const ProxyGraph& graph) {
  std::string out;
  const int n = graph.size();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  for (const ProxyNode& p : graph.nodes) {
    put<double>(out, p.position.x());
    put<double>(out, p.position.y());
    put<double>(out, p.position.z());
    put<std::int64_t>(out, p.timestamp_ns);
    put<std::int64_t>(out, p.source_node_id);
    put<std::int32_t>(out, p.submap_id);
  }
  put<double>(out, graph.radius);
  put<double>(out, graph.sigma);

  // Strict upper triangle in CSR form; the graph is symmetric.
  std::vector<std::uint32_t> row_ptr(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  for (int i = 0; i < n; ++i) {
    row_ptr[i] = static_cast<std::uint32_t>(cols.size());
    for (int j = i + 1; j < n; ++j) {
      const double w = graph.adjacency(i, j);
      if (w > 0.0) {
        cols.push_back(static_cast<std::uint32_t>(j));
        weights.push_back(w);
      }
    }
  }
  row_ptr[n] = static_cast<std::uint32_t>(cols.size());
  for (std::uint32_t v : row_ptr) put<std::uint32_t>(out, v);
  for (std::uint32_t v : cols) put<std::uint32_t>(out, v);
  for (double v : weights) put<double>(out, v);
  return out;
}

ProxyGraph decode_proxy(const std::string& bytes) {
  std::size_t pos = 0;
  return decode_proxy(bytes, pos);
}

ProxyGraph decode_proxy(const std::string& bytes, std::size_t& pos) {
  ProxyGraph graph;
  const auto n = static_cast<int>(take<std::uint32_t>(bytes, pos));
  graph.nodes.reserve(n);
  for (int i = 0; i < n; ++i) {
    ProxyNode p;
    p.index = i;
    const double x = take<double>(bytes, pos);
    const double y = take<double>(bytes, pos);
    const double z = take<double>(bytes, pos);
    p.position = Eigen::Vector3d(x, y, z);
    p.timestamp_ns = take<std::int64_t>(bytes, pos);
    p.source_node_id = take<std::int64_t>(bytes, pos);
    p.submap_id = take<std::int32_t>(bytes, pos);
    graph.nodes.push_back(p);
  }
  graph.radius = take<double>(bytes, pos);
  graph.sigma = take<double>(bytes, pos);

  std::vector<std::uint32_t> row_ptr(n + 1);
  for (int i = 0; i <= n; ++i) row_ptr[i] = take<std::uint32_t>(bytes, pos);
  const std::uint32_t nnz = row_ptr[n];
  std::vector<std::uint32_t> cols(nnz);
  for (std::uint32_t i = 0; i < nnz; ++i) cols[i] = take<std::uint32_t>(bytes, pos);

  graph.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (std::uint32_t c = row_ptr[i]; c < row_ptr[i + 1]; ++c) {
      const int j = static_cast<int>(cols[c]);
      const double w = take<double>(bytes, pos);
      graph.adjacency(i, j) = w;
      graph.adjacency(j, i) = w;
    }
  }
  graph.degree = graph.adjacency.rowwise().sum();
  return graph;
}

std::string proxy_to_text(const ProxyGraph& graph) {
  std::ostringstream out;
  out << "proxy_graph nodes=" << graph.size() << " radius=" << graph.radius
      << " sigma=" << graph.sigma << "\n";
  for (const ProxyNode& p : graph.nodes) {
    out << "node " << p.index << " pos " << p.position.transpose() << " t "
        << p.timestamp_ns << " src " << p.source_node_id << " submap " << p.submap_id
        << "\n";
  }
  const int n = graph.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (graph.adjacency(i, j) > 0.0) {
        out << "edge " << i << " " << j << " " << graph.adjacency(i, j) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace wavesync
