#include "wavesync/discrepancy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "wavesync/error.h"

namespace wavesync {
namespace {

// Stats below this are numerical noise, never a discrepancy.
constexpr double kThresholdFloor = 1e-9;

struct SubmapInfo {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  int anchor_pair = -1;
  std::vector<int> pair_indices;
};

// Groups pairs by the robot-side submap id; centroids and anchors use
// server-frame positions.
std::map<int, SubmapInfo> submap_table(const ProxyGraph& robot,
                                       const BroadcastPayload& payload,
                                       const Correspondence& corr) {
  std::map<int, SubmapInfo> table;
  for (int k = 0; k < corr.size(); ++k) {
    const int submap = robot.nodes[corr.pairs[k].robot_index].submap_id;
    SubmapInfo& info = table[submap];
    info.pair_indices.push_back(k);
    info.centroid += payload.proxy.nodes[corr.pairs[k].server_index].position;
  }
  for (auto& [submap, info] : table) {
    info.centroid /= static_cast<double>(info.pair_indices.size());
    double best = std::numeric_limits<double>::infinity();
    for (int k : info.pair_indices) {
      const double d =
          (payload.proxy.nodes[corr.pairs[k].server_index].position - info.centroid)
              .norm();
      if (d < best) {
        best = d;
        info.anchor_pair = k;
      }
    }
  }
  return table;
}

}  // namespace

BandPartition BandPartition::for_scales(int num_scales) {
  BandPartition p;
  p.large_count = std::max(1, 2 * num_scales / 7);
  p.small_count = p.large_count;
  p.mid_count = std::max(0, num_scales - p.large_count - p.small_count);
  return p;
}

ScaleBand BandPartition::band_of(int scale_index) const {
  if (scale_index < large_count) return ScaleBand::kLarge;
  if (scale_index < large_count + mid_count) return ScaleBand::kMid;
  return ScaleBand::kSmall;
}

int origin_pair(const BroadcastPayload& payload, const Correspondence& corr) {
  int best = 0;
  std::int64_t best_ts = std::numeric_limits<std::int64_t>::max();
  for (int k = 0; k < corr.size(); ++k) {
    const std::int64_t ts = payload.proxy.nodes[corr.pairs[k].server_index].timestamp_ns;
    if (ts < best_ts) {
      best_ts = ts;
      best = k;
    }
  }
  return best;
}

Eigen::VectorXd distance_to_origin_signal(const ProxyGraph& graph, int origin_index) {
  const Eigen::Vector3d origin = graph.nodes[origin_index].position;
  Eigen::VectorXd values(graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    values[i] = (graph.nodes[i].position - origin).norm();
  }
  return values;
}

ComparisonSignal comparison_signal(const BroadcastPayload& payload,
                                   const ProxyGraph& robot, const Correspondence& corr,
                                   ComparisonSide side) {
  const int origin = origin_pair(payload, corr);
  ComparisonSignal signal;
  signal.values.resize(corr.size());
  if (side == ComparisonSide::kServer) {
    const Eigen::Vector3d o =
        payload.proxy.nodes[corr.pairs[origin].server_index].position;
    for (int k = 0; k < corr.size(); ++k) {
      signal.values[k] =
          (payload.proxy.nodes[corr.pairs[k].server_index].position - o).norm();
    }
  } else {
    const Eigen::Vector3d o = robot.nodes[corr.pairs[origin].robot_index].position;
    for (int k = 0; k < corr.size(); ++k) {
      signal.values[k] = (robot.nodes[corr.pairs[k].robot_index].position - o).norm();
    }
  }
  return signal;
}

ComparisonGraphs build_comparison_graphs(const BroadcastPayload& payload,
                                         const ProxyGraph& robot,
                                         const Correspondence& corr,
                                         const PipelineConfig& config) {
  PoseGraph server_nodes, robot_nodes;
  for (int k = 0; k < corr.size(); ++k) {
    const ProxyNode& s = payload.proxy.nodes[corr.pairs[k].server_index];
    const ProxyNode& r = robot.nodes[corr.pairs[k].robot_index];
    PoseNode sn;
    sn.node_id = k;
    sn.timestamp_ns = s.timestamp_ns;
    sn.submap_id = s.submap_id;
    sn.pose = Pose::from_translation(s.position);
    server_nodes.add_node(sn);
    PoseNode rn;
    rn.node_id = k;
    rn.timestamp_ns = r.timestamp_ns;
    rn.submap_id = r.submap_id;
    rn.pose = Pose::from_translation(r.position);
    robot_nodes.add_node(rn);
  }
  ComparisonGraphs graphs;
  graphs.server = build_proxy(server_nodes, config.proxy);
  graphs.robot = build_proxy(robot_nodes, config.proxy);

  // Same edge support on both sides (union of the radius searches), weights
  // evaluated per side. Without this, an edge sitting numerically on the
  // radius cutoff appears on one side only and its full kernel weight
  // registers as a spurious structural difference.
  const int m = corr.size();
  const double denom = 2.0 * config.proxy.sigma * config.proxy.sigma;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const bool in_server = graphs.server.adjacency(i, j) > 0.0;
      const bool in_robot = graphs.robot.adjacency(i, j) > 0.0;
      if (in_server == in_robot) continue;
      ProxyGraph& missing = in_server ? graphs.robot : graphs.server;
      const double d =
          (missing.nodes[i].position - missing.nodes[j].position).norm();
      const double num = config.proxy.squared_distance ? d * d : d;
      const double w = std::exp(-num / denom);
      missing.adjacency(i, j) = w;
      missing.adjacency(j, i) = w;
    }
  }
  graphs.server.degree = graphs.server.adjacency.rowwise().sum();
  graphs.robot.degree = graphs.robot.adjacency.rowwise().sum();

  // Carry the original proxy indices through for traceability.
  for (int k = 0; k < m; ++k) {
    graphs.server.nodes[k].source_node_id = corr.pairs[k].server_index;
    graphs.robot.nodes[k].source_node_id = corr.pairs[k].robot_index;
  }
  return graphs;
}

std::vector<ScaleDistance> scale_distances(const std::vector<WaveletFeature>& server_feats,
                                           const std::vector<WaveletFeature>& robot_feats,
                                           const Correspondence& corr) {
  const int m = corr.size();
  const bool aligned = static_cast<int>(server_feats.size()) == m &&
                       static_cast<int>(robot_feats.size()) == m;

  std::vector<ScaleDistance> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k) {
    const int si = aligned ? k : corr.pairs[k].server_index;
    const int ri = aligned ? k : corr.pairs[k].robot_index;
    if (si >= static_cast<int>(server_feats.size()) ||
        ri >= static_cast<int>(robot_feats.size())) {
      throw DimensionMismatch("scale_distances: feature list too short");
    }
    const Eigen::VectorXd& ws = server_feats[si].coefficients;
    const Eigen::VectorXd& wr = robot_feats[ri].coefficients;
    if (ws.size() != wr.size()) {
      throw DimensionMismatch("scale_distances: channel counts differ");
    }
    ScaleDistance d;
    d.server_index = corr.pairs[k].server_index;
    d.robot_index = corr.pairs[k].robot_index;
    d.per_scale = (ws - wr).cwiseAbs();
    out.push_back(std::move(d));
  }
  return out;
}

DiscrepancyVerdict classify(const ScaleDistance& distance, int pair_index,
                            const BandThresholds& thresholds,
                            const BandPartition& partition) {
  DiscrepancyVerdict verdict;
  verdict.pair_index = pair_index;
  verdict.server_index = distance.server_index;
  verdict.robot_index = distance.robot_index;

  const int n = std::min<int>(partition.num_scales(),
                              static_cast<int>(distance.per_scale.size()));
  for (int j = 0; j < n; ++j) {
    const double d = distance.per_scale[j];
    switch (partition.band_of(j)) {
      case ScaleBand::kLarge:
        verdict.large_stat = std::max(verdict.large_stat, d);
        break;
      case ScaleBand::kMid:
        verdict.mid_stat = std::max(verdict.mid_stat, d);
        break;
      case ScaleBand::kSmall:
        verdict.small_stat = std::max(verdict.small_stat, d);
        break;
    }
  }
  verdict.small = verdict.small_stat > std::max(thresholds.small, kThresholdFloor);
  verdict.mid = verdict.mid_stat > std::max(thresholds.mid, kThresholdFloor);
  verdict.large = verdict.large_stat > std::max(thresholds.large, kThresholdFloor);
  return verdict;
}

std::vector<RelativeConstraint> generate_constraints(
    const std::vector<DiscrepancyVerdict>& verdicts, const ProxyGraph& robot,
    const BroadcastPayload& payload, const Correspondence& corr,
    const PipelineConfig& config, RegionMemory* memory) {
  if (static_cast<int>(payload.orientations.size()) != payload.proxy.size()) {
    throw MissingAuxiliary("generate_constraints: server orientations absent");
  }
  const int m = corr.size();
  const Matrix6d info = isotropic_information(config.correction_sigma_translation_m,
                                              config.correction_sigma_rotation_rad);

  auto robot_node_id = [&](int pair) {
    return robot.nodes[corr.pairs[pair].robot_index].source_node_id;
  };
  auto server_pose = [&](int pair) {
    return payload.node_pose(corr.pairs[pair].server_index);
  };
  auto submap_of_pair = [&](int pair) {
    return robot.nodes[corr.pairs[pair].robot_index].submap_id;
  };
  std::map<std::int64_t, int> pair_of_node;
  for (int k = 0; k < m; ++k) pair_of_node[robot_node_id(k)] = k;

  std::vector<RelativeConstraint> out;
  std::set<std::tuple<std::int64_t, std::int64_t, int>> seen;
  auto emit = [&](int pair_a, int pair_b, ConstraintKind kind, int region_a,
                  int region_b) {
    if (pair_a == pair_b) return;

    if (memory) {
      // A region that already carries a same-kind constraint re-measures at
      // the registered endpoints; if those nodes are not matched this epoch
      // the constraint simply remains unchanged.
      if (region_a > region_b) std::swap(region_a, region_b);
      const auto key = std::make_tuple(static_cast<int>(kind), region_a, region_b);
      const auto it = memory->regions.find(key);
      if (it != memory->regions.end()) {
        const auto fit = pair_of_node.find(it->second.first);
        const auto tit = pair_of_node.find(it->second.second);
        if (fit == pair_of_node.end() || tit == pair_of_node.end()) return;
        pair_a = fit->second;
        pair_b = tit->second;
      } else {
        memory->regions[key] = {robot_node_id(pair_a), robot_node_id(pair_b)};
      }
    }

    const std::int64_t from = robot_node_id(pair_a);
    const std::int64_t to = robot_node_id(pair_b);
    if (from == to) return;
    if (!seen.insert({from, to, static_cast<int>(kind)}).second) return;
    RelativeConstraint c;
    c.from_id = from;
    c.to_id = to;
    c.measurement = relative_pose(server_pose(pair_a), server_pose(pair_b));
    c.information = info;
    c.kind = kind;
    out.push_back(c);
  };

  std::optional<std::map<int, SubmapInfo>> submaps;

  for (const DiscrepancyVerdict& v : verdicts) {
    if (!v.any()) continue;
    const int k = v.pair_index;
    const int own = submap_of_pair(k);

    if (v.small && m >= 2) {
      // Between the chronological neighbors of n'; single-sided at the ends.
      const int a = std::max(0, k - 1);
      const int b = std::min(m - 1, k + 1);
      emit(a, b, ConstraintKind::kCorrectionAdjacent, own, own);
    }

    if (v.mid && m >= 2) {
      const int a = std::max(0, k - config.mid_hops);
      const int b = std::min(m - 1, k + config.mid_hops);
      emit(a, b, ConstraintKind::kCorrectionMidscale, own, own);
    }

    if (v.large) {
      if (!submaps) submaps = submap_table(robot, payload, corr);
      const auto it = submaps->find(own);
      if (it == submaps->end()) continue;
      const Eigen::Vector3d own_centroid = it->second.centroid;
      std::vector<std::pair<double, int>> near;
      for (const auto& [submap, sinfo] : *submaps) {
        if (submap == own) continue;
        near.emplace_back((sinfo.centroid - own_centroid).norm(), submap);
      }
      std::sort(near.begin(), near.end());
      const int count = std::min<int>(config.submap_k, static_cast<int>(near.size()));
      for (int i = 0; i < count; ++i) {
        const SubmapInfo& other = submaps->at(near[i].second);
        int pa = it->second.anchor_pair;
        int pb = other.anchor_pair;
        if (pa > pb) std::swap(pa, pb);
        emit(pa, pb, ConstraintKind::kCorrectionSubmap, own, near[i].second);
      }
    }
  }
  return out;
}

UpsertReport upsert_constraints(std::vector<RelativeConstraint>& existing,
                                const std::vector<RelativeConstraint>& fresh,
                                double translation_gate_m, double rotation_gate_rad) {
  std::map<std::tuple<std::int64_t, std::int64_t, int>, int> index;
  for (int i = 0; i < static_cast<int>(existing.size()); ++i) {
    index[{existing[i].from_id, existing[i].to_id,
           static_cast<int>(existing[i].kind)}] = i;
  }

  UpsertReport report;
  for (const RelativeConstraint& c : fresh) {
    const auto key =
        std::make_tuple(c.from_id, c.to_id, static_cast<int>(c.kind));
    const auto it = index.find(key);
    if (it == index.end()) {
      index[key] = static_cast<int>(existing.size());
      existing.push_back(c);
      ++report.added;
      continue;
    }
    const RelativeConstraint& old = existing[it->second];
    const double dt =
        (old.measurement.translation() - c.measurement.translation()).norm();
    const double dr = rotation_angle(old.measurement.rotation(), c.measurement.rotation());
    if (dt > translation_gate_m || dr > rotation_gate_rad) {
      existing[it->second] = c;
      ++report.updated;
    } else {
      ++report.skipped;
    }
  }
  return report;
}

DiscrepancyResult run_discrepancy(const BroadcastPayload& payload,
                                  const ProxyGraph& robot, int robot_id,
                                  const PipelineConfig& config,
                                  const std::optional<BandThresholds>& thresholds,
                                  RegionMemory* memory) {
  DiscrepancyResult result;
  result.corr = synchronize(payload, robot, robot_id, config.sync_tolerance_s);

  const ComparisonGraphs graphs =
      build_comparison_graphs(payload, robot, result.corr, config);
  const int origin = origin_pair(payload, result.corr);
  const Eigen::VectorXd f = distance_to_origin_signal(graphs.server, origin);
  const Eigen::VectorXd h = distance_to_origin_signal(graphs.robot, origin);

  const SpectralBasis server_basis = eigendecompose(laplacian(graphs.server));
  const SpectralBasis robot_basis = eigendecompose(laplacian(graphs.robot));

  // One shared bank keeps the scale grid identical on both sides.
  const double lambda_max =
      std::max({server_basis.lambda_max(), robot_basis.lambda_max(), 1e-12});
  const FilterBank bank = FilterBank::meyer(lambda_max, config.num_scales,
                                            config.include_lowpass, config.scale_span);

  const auto server_feats = wavelet_features(server_basis, bank, f);
  const auto robot_feats = wavelet_features(robot_basis, bank, h);
  result.distances = scale_distances(server_feats, robot_feats, result.corr);

  if (!thresholds) return result;

  const BandPartition partition = BandPartition::for_scales(config.num_scales);
  const int m = result.corr.size();
  std::vector<DiscrepancyVerdict> all(m);
  for (int k = 0; k < m; ++k) {
    all[k] = classify(result.distances[k], k, *thresholds, partition);
  }

  // One correction per contiguous discrepancy region and band, placed at the
  // region's peak: a drifting stretch trips its whole neighborhood, but only
  // the worst node needs the constraint.
  std::vector<DiscrepancyVerdict> kept(m);
  for (int k = 0; k < m; ++k) {
    kept[k] = all[k];
    kept[k].small = kept[k].mid = kept[k].large = false;
  }
  // Runs separated by fewer than `gap` quiet pairs are one region; the gap
  // scales with the band's spatial support.
  auto suppress = [&](int gap, auto triggered, auto stat_of, auto set_band) {
    int k = 0;
    while (k < m) {
      if (!triggered(all[k])) {
        ++k;
        continue;
      }
      int best = k;
      int end = k;
      int quiet = 0;
      for (int j = k; j < m; ++j) {
        if (triggered(all[j])) {
          quiet = 0;
          end = j;
          if (stat_of(all[j]) > stat_of(all[best])) best = j;
        } else if (++quiet > gap) {
          break;
        }
      }
      set_band(kept[best]);
      k = end + 1;
    }
  };
  suppress(2,
           [](const DiscrepancyVerdict& v) { return v.small; },
           [](const DiscrepancyVerdict& v) { return v.small_stat; },
           [](DiscrepancyVerdict& v) { v.small = true; });
  suppress(std::max(1, config.mid_hops),
           [](const DiscrepancyVerdict& v) { return v.mid; },
           [](const DiscrepancyVerdict& v) { return v.mid_stat; },
           [](DiscrepancyVerdict& v) { v.mid = true; });
  suppress(3 * std::max(1, config.mid_hops),
           [](const DiscrepancyVerdict& v) { return v.large; },
           [](const DiscrepancyVerdict& v) { return v.large_stat; },
           [](DiscrepancyVerdict& v) { v.large = true; });

  for (int k = 0; k < m; ++k) {
    if (kept[k].any()) result.verdicts.push_back(kept[k]);
  }
  result.constraints = generate_constraints(result.verdicts, robot, payload,
                                            result.corr, config, memory);
  return result;
}

std::string verdict_record(std::int64_t epoch, int robot_id,
                           const DiscrepancyVerdict& verdict) {
  std::ostringstream out;
  out << "verdict epoch=" << epoch << " robot=" << robot_id
      << " pair=" << verdict.server_index << ":" << verdict.robot_index << " bands=";
  bool first = true;
  auto append = [&](bool on, const char* name) {
    if (!on) return;
    if (!first) out << ",";
    out << name;
    first = false;
  };
  append(verdict.small, "small");
  append(verdict.mid, "mid");
  append(verdict.large, "large");
  if (first) out << "none";
  out << " small_stat=" << verdict.small_stat << " mid_stat=" << verdict.mid_stat
      << " large_stat=" << verdict.large_stat;
  return out.str();
}

std::string upsert_record(std::int64_t epoch, int robot_id, const UpsertReport& report) {
  std::ostringstream out;
  out << "constraints epoch=" << epoch << " robot=" << robot_id
      << " added=" << report.added << " updated=" << report.updated
      << " skipped=" << report.skipped;
  return out.str();
}

}  // namespace wavesync
