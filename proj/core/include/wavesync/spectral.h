#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavesync/proxy_graph.h"

namespace wavesync {

// Eigendecomposition of a graph Laplacian, L = U diag(lambda) U^T, with
// eigenvalues nondecreasing and clamped at zero.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
};

using SpectralKernel = std::function<double(double)>;

// Band-pass Meyer wavelet kernel on [0, inf): zero at DC, unit peak at
// x = 4/3, compactly supported on (2/3, 8/3).
double meyer_kernel(double x);
// Complementary low-pass Meyer scaling kernel (optional extra channel).
double meyer_scaling_kernel(double x);

// Logarithmic scale grid, largest scale first, sweeping kernel support
// across [lambda_max / span, lambda_max]. Throws NonpositiveLambdaMax.
std::vector<double> scale_grid(double lambda_max, int num_scales, double span = 20.0);

struct FilterBank {
  SpectralKernel kernel;
  std::vector<double> scales;  // strictly decreasing
  bool include_lowpass = false;
  SpectralKernel lowpass;

  // Number of coefficient channels per node.
  int channels() const {
    return static_cast<int>(scales.size()) + (include_lowpass ? 1 : 0);
  }

  static FilterBank meyer(double lambda_max, int num_scales = 7,
                          bool include_lowpass = false, double span = 20.0);
};

struct WaveletFeature {
  int node_index = 0;
  Eigen::VectorXd coefficients;
};

struct EigendecomposeOptions {
  int max_nodes = 3000;
};

// Dense symmetric eigendecomposition. Throws TooLarge beyond the cap and
// ConvergenceFailure if the solver fails.
SpectralBasis eigendecompose(const Laplacian& lap,
                             const EigendecomposeOptions& options = {});

// Graph Fourier transform U^T f. Parseval: ||gft(f)|| == ||f||.
Eigen::VectorXd gft(const SpectralBasis& basis, const Eigen::VectorXd& signal);

// Localized wavelet atom psi_{s,n} = U diag(g(s lambda)) U^T delta_n.
Eigen::VectorXd wavelet_atom(const SpectralBasis& basis, const FilterBank& bank,
                             double scale, int node);

// Coefficients W_{s,n} = psi_{s,n}^T f for every node, computed with one
// dense operator apply per scale.
std::vector<WaveletFeature> wavelet_features(const SpectralBasis& basis,
                                             const FilterBank& bank,
                                             const Eigen::VectorXd& signal);

// CSV dump of eigenvalues and per-scale filter responses, for plotting.
std::string spectrum_csv(const SpectralBasis& basis, const FilterBank& bank);

}  // namespace wavesync
