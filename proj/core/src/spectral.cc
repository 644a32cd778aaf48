#include "wavesync/spectral.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wavesync/error.h"

namespace wavesync {
namespace {

// Standard Meyer auxiliary polynomial, nu(0) = 0, nu(1) = 1, C^3 transitions.
double meyer_nu(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double t4 = t * t * t * t;
  return t4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
}

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

double meyer_kernel(double x) {
  constexpr double lo = 2.0 / 3.0;
  constexpr double mid = 4.0 / 3.0;
  constexpr double hi = 8.0 / 3.0;
  if (x <= lo || x >= hi) return 0.0;
  if (x <= mid) return std::sin(kHalfPi * meyer_nu(3.0 * x / 2.0 - 1.0));
  return std::cos(kHalfPi * meyer_nu(3.0 * x / 4.0 - 1.0));
}

double meyer_scaling_kernel(double x) {
  constexpr double lo = 2.0 / 3.0;
  constexpr double mid = 4.0 / 3.0;
  if (x <= lo) return 1.0;
  if (x >= mid) return 0.0;
  return std::cos(kHalfPi * meyer_nu(3.0 * x / 2.0 - 1.0));
}

std::vector<double> scale_grid(double lambda_max, int num_scales, double span) {
  if (lambda_max <= 0.0) throw NonpositiveLambdaMax();
  if (num_scales < 2) throw Error("scale_grid: need at least 2 scales");
  const double s_min = 2.0 / (3.0 * lambda_max);
  const double s_max = 2.0 * span / (3.0 * lambda_max);
  std::vector<double> scales(num_scales);
  for (int j = 0; j < num_scales; ++j) {
    const double frac = 1.0 - static_cast<double>(j) / (num_scales - 1);
    scales[j] = s_min * std::pow(s_max / s_min, frac);
  }
  return scales;
}

FilterBank FilterBank::meyer(double lambda_max, int num_scales, bool include_lowpass,
                             double span) {
  FilterBank bank;
  bank.kernel = meyer_kernel;
  bank.scales = scale_grid(lambda_max, num_scales, span);
  bank.include_lowpass = include_lowpass;
  if (include_lowpass) {
    const double s0 = bank.scales.front();
    bank.lowpass = [s0](double lambda) { return meyer_scaling_kernel(s0 * lambda); };
  }
  return bank;
}

SpectralBasis eigendecompose(const Laplacian& lap, const EigendecomposeOptions& options) {
  const int n = lap.size();
  if (n > options.max_nodes) {
    throw TooLarge("eigendecompose: " + std::to_string(n) + " nodes exceeds cap of " +
                   std::to_string(options.max_nodes));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.matrix);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("eigendecompose: solver did not converge");
  }
  SpectralBasis basis;
  basis.eigenvalues = solver.eigenvalues();
  basis.eigenvectors = solver.eigenvectors();
  for (int i = 0; i < n; ++i) {
    if (basis.eigenvalues[i] < 0.0 && basis.eigenvalues[i] >= -1e-10) {
      basis.eigenvalues[i] = 0.0;
    }
  }
  return basis;
}

Eigen::VectorXd gft(const SpectralBasis& basis, const Eigen::VectorXd& signal) {
  if (signal.size() != basis.size()) {
    throw DimensionMismatch("gft: signal length " + std::to_string(signal.size()) +
                            " != basis size " + std::to_string(basis.size()));
  }
  return basis.eigenvectors.transpose() * signal;
}

Eigen::VectorXd wavelet_atom(const SpectralBasis& basis, const FilterBank& bank,
                             double scale, int node) {
  const int n = basis.size();
  if (node < 0 || node >= n) {
    throw IndexOutOfRange("wavelet_atom: node " + std::to_string(node));
  }
  Eigen::VectorXd response(n);
  for (int l = 0; l < n; ++l) response[l] = bank.kernel(scale * basis.eigenvalues[l]);
  // U G_s U^T delta_n: scale the n-th row of U by the response.
  return basis.eigenvectors *
         (response.asDiagonal() * basis.eigenvectors.row(node).transpose());
}

std::vector<WaveletFeature> wavelet_features(const SpectralBasis& basis,
                                             const FilterBank& bank,
                                             const Eigen::VectorXd& signal) {
  const int n = basis.size();
  if (signal.size() != n) {
    throw DimensionMismatch("wavelet_features: signal length " +
                            std::to_string(signal.size()) + " != basis size " +
                            std::to_string(n));
  }
  const int channels = bank.channels();
  std::vector<WaveletFeature> features(n);
  for (int i = 0; i < n; ++i) {
    features[i].node_index = i;
    features[i].coefficients = Eigen::VectorXd::Zero(channels);
  }

  const Eigen::VectorXd spectrum = basis.eigenvectors.transpose() * signal;
  auto apply_channel = [&](const SpectralKernel& kernel, double scale, int channel) {
    Eigen::VectorXd filtered(n);
    for (int l = 0; l < n; ++l) {
      filtered[l] = kernel(scale * basis.eigenvalues[l]) * spectrum[l];
    }
    const Eigen::VectorXd coeffs = basis.eigenvectors * filtered;
    for (int i = 0; i < n; ++i) features[i].coefficients[channel] = coeffs[i];
  };

  for (std::size_t j = 0; j < bank.scales.size(); ++j) {
    apply_channel(bank.kernel, bank.scales[j], static_cast<int>(j));
  }
  if (bank.include_lowpass) {
    apply_channel(bank.lowpass, 1.0, channels - 1);
  }
  return features;
}

std::string spectrum_csv(const SpectralBasis& basis, const FilterBank& bank) {
  std::string out = "eigenvalue";
  for (std::size_t j = 0; j < bank.scales.size(); ++j) {
    out += ",g_scale" + std::to_string(j);
  }
  out += "\n";
  char buf[64];
  for (int l = 0; l < basis.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%.17g", basis.eigenvalues[l]);
    out += buf;
    for (double s : bank.scales) {
      std::snprintf(buf, sizeof(buf), ",%.17g", bank.kernel(s * basis.eigenvalues[l]));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace wavesync
