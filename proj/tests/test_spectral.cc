#include "wavesync/spectral.h"

#include <random>

#include "doctest.h"
#include "test_util.h"
#include "wavesync/error.h"

using namespace wavesync;
using testing::random_connected_proxy;

namespace {

Laplacian path_laplacian(int n) {
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    adj(i, i + 1) = 1.0;
    adj(i + 1, i) = 1.0;
  }
  Laplacian lap;
  lap.matrix = Eigen::MatrixXd(adj.rowwise().sum().asDiagonal()) - adj;
  return lap;
}

}  // namespace

TEST_CASE("eigendecompose basics") {
  SUBCASE("1x1 zero laplacian") {
    Laplacian lap;
    lap.matrix = Eigen::MatrixXd::Zero(1, 1);
    const SpectralBasis basis = eigendecompose(lap);
    CHECK(basis.eigenvalues[0] == 0.0);
    CHECK(std::abs(basis.eigenvectors(0, 0)) == doctest::Approx(1.0));
  }
  SUBCASE("path-3 spectrum") {
    const SpectralBasis basis = eigendecompose(path_laplacian(3));
    CHECK(basis.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(basis.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(basis.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("reconstruction and orthonormality on random graphs") {
    std::mt19937 rng(59);
    for (int trial = 0; trial < 5; ++trial) {
      const ProxyGraph p = random_connected_proxy(rng, 50);
      const Laplacian lap = laplacian(p);
      const SpectralBasis basis = eigendecompose(lap);
      const Eigen::MatrixXd rebuilt = basis.eigenvectors *
                                      basis.eigenvalues.asDiagonal() *
                                      basis.eigenvectors.transpose();
      CHECK((rebuilt - lap.matrix).cwiseAbs().maxCoeff() < 1e-8);
      const Eigen::MatrixXd gram =
          basis.eigenvectors * basis.eigenvectors.transpose();
      CHECK((gram - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(basis.eigenvalues[0] >= 0.0);
      CHECK(basis.eigenvalues[0] <= 1e-10);
    }
  }
  SUBCASE("cap enforced") {
    Laplacian lap;
    lap.matrix = Eigen::MatrixXd::Zero(5, 5);
    EigendecomposeOptions options;
    options.max_nodes = 4;
    CHECK_THROWS_AS(eigendecompose(lap, options), TooLarge);
  }
}

TEST_CASE("gft") {
  std::mt19937 rng(61);
  const ProxyGraph p = random_connected_proxy(rng, 24);
  const SpectralBasis basis = eigendecompose(laplacian(p));

  SUBCASE("constant signal concentrates at the zero eigenvalue") {
    const Eigen::VectorXd f = Eigen::VectorXd::Constant(24, 2.5);
    const Eigen::VectorXd spectrum = gft(basis, f);
    for (int l = 1; l < 24; ++l) {
      CHECK(std::abs(spectrum[l]) < 1e-9);
    }
    CHECK(std::abs(spectrum[0]) == doctest::Approx(2.5 * std::sqrt(24.0)).epsilon(1e-9));
  }
  SUBCASE("an eigenvector maps to a unit impulse") {
    const Eigen::VectorXd f = basis.eigenvectors.col(3);
    const Eigen::VectorXd spectrum = gft(basis, f);
    for (int l = 0; l < 24; ++l) {
      CHECK(std::abs(spectrum[l] - (l == 3 ? 1.0 : 0.0)) < 1e-9);
    }
  }
  SUBCASE("parseval") {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd f(24);
      for (int i = 0; i < 24; ++i) f[i] = gauss(rng);
      CHECK(gft(basis, f).norm() == doctest::Approx(f.norm()).epsilon(1e-9));
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(gft(basis, Eigen::VectorXd::Zero(5)), DimensionMismatch);
  }
}

TEST_CASE("meyer kernel shape") {
  CHECK(meyer_kernel(0.0) == 0.0);
  CHECK(meyer_kernel(0.5) == 0.0);
  CHECK(meyer_kernel(8.0 / 3.0) == 0.0);
  CHECK(meyer_kernel(3.0) == 0.0);
  CHECK(meyer_kernel(4.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x = 0.0; x <= 3.0; x += 0.01) {
    CHECK(meyer_kernel(x) >= 0.0);
    CHECK(meyer_kernel(x) <= 1.0 + 1e-12);
  }
  // Continuity at the band edges.
  CHECK(meyer_kernel(2.0 / 3.0 + 1e-9) < 1e-6);
  CHECK(meyer_kernel(8.0 / 3.0 - 1e-9) < 1e-6);
  // The scaling kernel complements the band edge.
  CHECK(meyer_scaling_kernel(0.0) == 1.0);
  CHECK(meyer_scaling_kernel(2.0 / 3.0) == 1.0);
  CHECK(meyer_scaling_kernel(4.0 / 3.0) == 0.0);
}

TEST_CASE("scale grid") {
  SUBCASE("seven strictly decreasing scales") {
    const std::vector<double> scales = scale_grid(5.0, 7);
    REQUIRE(scales.size() == 7);
    for (std::size_t j = 0; j + 1 < scales.size(); ++j) {
      CHECK(scales[j] > scales[j + 1]);
      CHECK(scales[j + 1] > 0.0);
    }
  }
  SUBCASE("kernel support covers the designed band") {
    const double lambda_max = 3.7;
    const std::vector<double> scales = scale_grid(lambda_max, 7);
    const double lambda_min = lambda_max / 20.0;
    for (int i = 1; i <= 200; ++i) {
      const double lambda =
          lambda_min * std::pow(lambda_max / lambda_min, i / 200.0);
      double energy = 0.0;
      for (double s : scales) energy += std::pow(meyer_kernel(s * lambda), 2);
      CHECK(energy > 0.0);
    }
  }
  SUBCASE("scales are homogeneous of degree -1 in lambda_max") {
    const std::vector<double> a = scale_grid(2.0, 7);
    const std::vector<double> b = scale_grid(4.0, 7);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(b[j] == doctest::Approx(a[j] / 2.0).epsilon(1e-12));
    }
  }
  SUBCASE("nonpositive lambda_max throws") {
    CHECK_THROWS_AS(scale_grid(0.0, 7), NonpositiveLambdaMax);
    CHECK_THROWS_AS(scale_grid(-1.0, 7), NonpositiveLambdaMax);
  }
}

TEST_CASE("wavelet atoms") {
  std::mt19937 rng(67);
  const ProxyGraph p = random_connected_proxy(rng, 20);
  const SpectralBasis basis = eigendecompose(laplacian(p));
  const FilterBank bank = FilterBank::meyer(basis.lambda_max());

  SUBCASE("identity kernel returns the dirac") {
    FilterBank identity;
    identity.kernel = [](double) { return 1.0; };
    identity.scales = {1.0};
    const Eigen::VectorXd atom = wavelet_atom(basis, identity, 1.0, 4);
    for (int m = 0; m < 20; ++m) {
      CHECK(std::abs(atom[m] - (m == 4 ? 1.0 : 0.0)) < 1e-9);
    }
  }
  SUBCASE("atom symmetry psi_sn[m] == psi_sm[n]") {
    const double s = bank.scales[3];
    for (int n = 0; n < 5; ++n) {
      const Eigen::VectorXd atom_n = wavelet_atom(basis, bank, s, n);
      for (int m = 0; m < 20; ++m) {
        const Eigen::VectorXd atom_m = wavelet_atom(basis, bank, s, m);
        CHECK(std::abs(atom_n[m] - atom_m[n]) < 1e-10);
      }
    }
  }
  SUBCASE("atom energy matches the spectral closed form") {
    for (double s : bank.scales) {
      for (int n : {0, 7, 19}) {
        const Eigen::VectorXd atom = wavelet_atom(basis, bank, s, n);
        double expected = 0.0;
        for (int l = 0; l < 20; ++l) {
          expected += std::pow(meyer_kernel(s * basis.eigenvalues[l]), 2) *
                      std::pow(basis.eigenvectors(n, l), 2);
        }
        CHECK(atom.squaredNorm() == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
  SUBCASE("out-of-range node throws") {
    CHECK_THROWS_AS(wavelet_atom(basis, bank, 1.0, 20), IndexOutOfRange);
  }
}

TEST_CASE("wavelet features") {
  std::mt19937 rng(71);
  const ProxyGraph p = random_connected_proxy(rng, 30);
  const SpectralBasis basis = eigendecompose(laplacian(p));
  const FilterBank bank = FilterBank::meyer(basis.lambda_max());

  SUBCASE("zero signal gives zero coefficients") {
    const auto features = wavelet_features(basis, bank, Eigen::VectorXd::Zero(30));
    for (const WaveletFeature& f : features) {
      CHECK(f.coefficients.cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("constant signal is rejected (DC rejection)") {
    const auto features =
        wavelet_features(basis, bank, Eigen::VectorXd::Constant(30, 3.0));
    for (const WaveletFeature& f : features) {
      CHECK(f.coefficients.cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("batched coefficients match per-atom brute force") {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd f(30);
    for (int i = 0; i < 30; ++i) f[i] = gauss(rng);
    const auto features = wavelet_features(basis, bank, f);
    for (int n = 0; n < 30; ++n) {
      for (std::size_t j = 0; j < bank.scales.size(); ++j) {
        const Eigen::VectorXd atom = wavelet_atom(basis, bank, bank.scales[j], n);
        CHECK(std::abs(features[n].coefficients[j] - atom.dot(f)) < 1e-10);
      }
    }
  }
  SUBCASE("eigenvector sign flips leave the operator unchanged") {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd f(30);
    for (int i = 0; i < 30; ++i) f[i] = gauss(rng);
    SpectralBasis flipped = basis;
    for (int l = 0; l < 30; l += 3) flipped.eigenvectors.col(l) *= -1.0;
    const auto a = wavelet_features(basis, bank, f);
    const auto b = wavelet_features(flipped, bank, f);
    for (int n = 0; n < 30; ++n) {
      CHECK((a[n].coefficients - b[n].coefficients).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("optional low-pass channel appends one coefficient") {
    const FilterBank with_lp = FilterBank::meyer(basis.lambda_max(), 7, true);
    const auto features =
        wavelet_features(basis, with_lp, Eigen::VectorXd::Constant(30, 1.0));
    REQUIRE(features[0].coefficients.size() == 8);
    // A constant passes the low-pass channel but no wavelet channel.
    CHECK(std::abs(features[0].coefficients[7]) > 1e-6);
  }
}

TEST_CASE("smallest-scale atoms are localized on a path graph") {
  const int n = 64;
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    adj(i, i + 1) = 1.0;
    adj(i + 1, i) = 1.0;
  }
  Laplacian lap;
  lap.matrix = Eigen::MatrixXd(adj.rowwise().sum().asDiagonal()) - adj;
  const SpectralBasis basis = eigendecompose(lap);
  const FilterBank bank = FilterBank::meyer(basis.lambda_max());

  // The second-smallest scale carries the finest energy inside the spectrum
  // (the smallest scale's band starts at lambda_max); check locality there.
  const double s = bank.scales[bank.scales.size() - 2];
  const int center = n / 2;
  const Eigen::VectorXd atom = wavelet_atom(basis, bank, s, center);
  double near = 0.0, far = 0.0;
  for (int m = 0; m < n; ++m) {
    if (std::abs(m - center) <= 3) {
      near += atom[m] * atom[m];
    } else {
      far += atom[m] * atom[m];
    }
  }
  CHECK(near > far);
}
