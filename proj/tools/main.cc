#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "wavesync/discrepancy.h"
#include "wavesync/error.h"
#include "wavesync/graph_monitor.h"
#include "wavesync/posegraph_io.h"
#include "wavesync/proxy_graph.h"
#include "wavesync/sim/harness.h"
#include "wavesync/sim/scenario.h"
#include "wavesync/spectral.h"

namespace {

namespace fs = std::filesystem;
using namespace wavesync;
using namespace wavesync::sim;

struct SimRunArgs {
  std::string scenario = "tunnel";
  std::uint64_t seed = 1;
  int epochs = 0;
  std::string out_dir = "out";
  bool squared_distance = false;
  int mid_hops = 5;
  std::string thresholds_file;
  std::string strategy = "proposed";
  std::string oracle = "gt-noisy";
  double server_noise = 0.05;
  bool no_kron = false;
};

Scenario resolve_scenario(const std::string& name_or_file, std::uint64_t seed) {
  if (fs::exists(name_or_file)) {
    Scenario s = load_scenario(name_or_file);
    s.seed = seed;
    return s;
  }
  return scenario_preset(name_or_file, seed);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

int run_sim(const SimRunArgs& args) {
  const Scenario scenario = resolve_scenario(args.scenario, args.seed);

  RunOptions options;
  options.pipeline.proxy.squared_distance = args.squared_distance;
  options.pipeline.mid_hops = args.mid_hops;
  options.disable_kron = args.no_kron;
  options.max_epochs = args.epochs;
  if (args.strategy == "proposed") {
    options.strategy = CorrectionStrategy::kProposed;
  } else if (args.strategy == "baseline") {
    options.strategy = CorrectionStrategy::kBaseline;
  } else if (args.strategy == "none") {
    options.strategy = CorrectionStrategy::kNone;
  } else {
    throw InvalidSpec("unknown strategy '" + args.strategy + "'");
  }
  if (args.oracle == "gt-noisy") {
    options.oracle.mode = ServerMode::kGroundTruthNoisy;
  } else if (args.oracle == "loop-closed") {
    options.oracle.mode = ServerMode::kLoopClosed;
  } else {
    throw InvalidSpec("unknown oracle '" + args.oracle + "'");
  }
  options.oracle.noise_sigma_m = args.server_noise;

  if (!args.thresholds_file.empty()) {
    std::ifstream in(args.thresholds_file);
    if (!in) throw InvalidSpec("cannot open thresholds file " + args.thresholds_file);
    nlohmann::json j;
    in >> j;
    BandThresholds t;
    t.small = j.at("small").get<double>();
    t.mid = j.at("mid").get<double>();
    t.large = j.at("large").get<double>();
    options.thresholds = t;
  }

  const RunResult result = run_epochs(scenario, options);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_file(out / "metrics.csv", metrics_csv(result.metrics));
  write_file(out / "summary.txt", metrics_summary(result.metrics));
  {
    std::string audit;
    for (const std::string& line : result.audit) audit += line + "\n";
    write_file(out / "audit.log", audit);
  }
  {
    nlohmann::json t;
    t["small"] = result.metrics.thresholds.small;
    t["mid"] = result.metrics.thresholds.mid;
    t["large"] = result.metrics.thresholds.large;
    write_file(out / "thresholds.json", t.dump(2) + "\n");
  }
  for (std::size_t r = 0; r < result.corrected.size(); ++r) {
    save_graph(result.corrected[r], (out / ("corrected_" + std::to_string(r) +
                                            ".posegraph")).string());
    save_graph(result.odometry[r],
               (out / ("odometry_" + std::to_string(r) + ".posegraph")).string());
    save_graph(result.ground_truth[r],
               (out / ("ground_truth_" + std::to_string(r) + ".posegraph")).string());
  }
  save_graph(result.server, (out / "server.posegraph").string());

  std::printf("%s", metrics_summary(result.metrics).c_str());
  std::printf("wrote %s\n", args.out_dir.c_str());
  return 0;
}

int run_eval(const std::string& estimate_path, const std::string& truth_path) {
  const PoseGraph estimate = load_graph(estimate_path);
  const PoseGraph truth = load_graph(truth_path);
  std::printf("rmse_ate %.6f m over %zu/%zu nodes\n", rmse_ate(estimate, truth),
              estimate.size(), truth.size());
  return 0;
}

ProxyGraph proxy_from_file(const std::string& path, double radius, double sigma,
                           bool squared) {
  const PoseGraph graph = load_graph(path);
  ProxyBuildOptions options;
  options.radius = radius;
  options.sigma = sigma;
  options.squared_distance = squared;
  return build_proxy(graph, options);
}

int run_reduce(const std::string& in, double radius, double sigma, bool squared,
               const std::string& out_prefix) {
  const ProxyGraph proxy = proxy_from_file(in, radius, sigma, squared);
  const std::vector<int> keep = kron_select(laplacian(proxy));
  const ProxyGraph reduced = kron_reduce(proxy, keep);

  std::string csv = "kept_index,source_node_id,x,y,z\n";
  char buf[160];
  for (const ProxyNode& n : reduced.nodes) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g,%.17g\n", n.index,
                  static_cast<long long>(n.source_node_id), n.position.x(),
                  n.position.y(), n.position.z());
    csv += buf;
  }
  write_file(out_prefix + "_kept.csv", csv);
  write_file(out_prefix + "_full.txt", proxy_to_text(proxy));
  write_file(out_prefix + "_reduced.txt", proxy_to_text(reduced));
  std::printf("reduced %d -> %d nodes; wrote %s_{kept.csv,full.txt,reduced.txt}\n",
              proxy.size(), reduced.size(), out_prefix.c_str());
  return 0;
}

int run_spectrum(const std::string& in, double radius, double sigma, bool squared,
                 const std::string& out) {
  const ProxyGraph proxy = proxy_from_file(in, radius, sigma, squared);
  const SpectralBasis basis = eigendecompose(laplacian(proxy));
  const FilterBank bank = FilterBank::meyer(std::max(basis.lambda_max(), 1e-12));
  const std::string csv = spectrum_csv(basis, bank);
  if (out.empty()) {
    std::printf("%s", csv.c_str());
  } else {
    write_file(out, csv);
    std::printf("wrote %s (%d eigenvalues, %zu scales)\n", out.c_str(), basis.size(),
                bank.scales.size());
  }
  return 0;
}

int run_wavelets(const std::string& in, double radius, double sigma, bool squared,
                 int num_scales, const std::string& out) {
  const ProxyGraph proxy = proxy_from_file(in, radius, sigma, squared);
  const SpectralBasis basis = eigendecompose(laplacian(proxy));
  const FilterBank bank =
      FilterBank::meyer(std::max(basis.lambda_max(), 1e-12), num_scales);
  const Eigen::VectorXd signal = distance_to_origin_signal(proxy, 0);
  const auto features = wavelet_features(basis, bank, signal);

  std::string csv = "node,source_node_id";
  for (int j = 0; j < static_cast<int>(bank.scales.size()); ++j) {
    csv += ",w_scale" + std::to_string(j);
  }
  csv += "\n";
  char buf[64];
  for (const WaveletFeature& f : features) {
    csv += std::to_string(f.node_index) + "," +
           std::to_string(proxy.nodes[f.node_index].source_node_id);
    for (int j = 0; j < f.coefficients.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", f.coefficients[j]);
      csv += buf;
    }
    csv += "\n";
  }
  if (out.empty()) {
    std::printf("%s", csv.c_str());
  } else {
    write_file(out, csv);
    std::printf("wrote %s (%d nodes)\n", out.c_str(), proxy.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral graph-wavelet consistency for multi-robot pose graphs"};
  app.require_subcommand(1);

  CLI::App* sim = app.add_subcommand("sim", "Closed-loop simulation");
  sim->require_subcommand(1);

  SimRunArgs run_args;
  CLI::App* sim_run = sim->add_subcommand("run", "Run a multi-robot scenario");
  sim_run->add_option("--scenario", run_args.scenario,
                      "Preset name (tunnel, euroc-like, indoor-outdoor) or JSON file");
  sim_run->add_option("--seed", run_args.seed, "Scenario seed");
  sim_run->add_option("--epochs", run_args.epochs, "Cap on epochs (0 = full horizon)");
  sim_run->add_option("--out", run_args.out_dir, "Output directory");
  sim_run->add_flag("--squared-distance", run_args.squared_distance,
                    "Square the distance in the edge-weight exponent");
  sim_run->add_option("--mid-hops", run_args.mid_hops, "Midscale constraint hop count");
  sim_run->add_option("--thresholds", run_args.thresholds_file,
                      "JSON file pinning band thresholds");
  sim_run->add_option("--strategy", run_args.strategy, "proposed | baseline | none");
  sim_run->add_option("--oracle", run_args.oracle, "gt-noisy | loop-closed");
  sim_run->add_option("--server-noise", run_args.server_noise,
                      "Server oracle position noise sigma, meters");
  sim_run->add_flag("--no-kron", run_args.no_kron, "Disable Kron reduction");

  std::string eval_estimate, eval_truth;
  CLI::App* sim_eval = sim->add_subcommand("eval", "RMSE of ATE between two graphs");
  sim_eval->add_option("--estimate", eval_estimate, ".posegraph estimate")->required();
  sim_eval->add_option("--truth", eval_truth, ".posegraph ground truth")->required();

  CLI::App* graph = app.add_subcommand("graph", "Proxy-graph debug tools");
  graph->require_subcommand(1);

  std::string g_in, g_out, g_prefix = "proxy";
  double g_radius = 7.0, g_sigma = 7.0 / 3.0;
  bool g_squared = false;
  int g_scales = 7;

  CLI::App* g_reduce = graph->add_subcommand("reduce", "Kron-reduce a pose graph");
  g_reduce->add_option("--in", g_in, ".posegraph input")->required();
  g_reduce->add_option("--radius", g_radius, "Proxy radius, meters");
  g_reduce->add_option("--sigma", g_sigma, "Kernel sigma, meters");
  g_reduce->add_flag("--squared-distance", g_squared);
  g_reduce->add_option("--out-prefix", g_prefix, "Output file prefix");

  CLI::App* g_spectrum =
      graph->add_subcommand("spectrum", "Eigenvalues and filter responses as CSV");
  g_spectrum->add_option("--in", g_in, ".posegraph input")->required();
  g_spectrum->add_option("--radius", g_radius, "Proxy radius, meters");
  g_spectrum->add_option("--sigma", g_sigma, "Kernel sigma, meters");
  g_spectrum->add_flag("--squared-distance", g_squared);
  g_spectrum->add_option("--out", g_out, "CSV path (stdout when omitted)");

  CLI::App* g_wavelets =
      graph->add_subcommand("wavelets", "Per-node wavelet coefficients as CSV");
  g_wavelets->add_option("--in", g_in, ".posegraph input")->required();
  g_wavelets->add_option("--radius", g_radius, "Proxy radius, meters");
  g_wavelets->add_option("--sigma", g_sigma, "Kernel sigma, meters");
  g_wavelets->add_flag("--squared-distance", g_squared);
  g_wavelets->add_option("--scales", g_scales, "Number of wavelet scales");
  g_wavelets->add_option("--out", g_out, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_run->parsed()) return run_sim(run_args);
    if (sim_eval->parsed()) return run_eval(eval_estimate, eval_truth);
    if (g_reduce->parsed())
      return run_reduce(g_in, g_radius, g_sigma, g_squared, g_prefix);
    if (g_spectrum->parsed())
      return run_spectrum(g_in, g_radius, g_sigma, g_squared, g_out);
    if (g_wavelets->parsed())
      return run_wavelets(g_in, g_radius, g_sigma, g_squared, g_scales, g_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
