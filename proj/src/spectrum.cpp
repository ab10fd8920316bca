#include "rfpca/spectrum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rfpca/eigs.hpp"

namespace rfpca {

KappaResult kappa_scan(const Eigen::VectorXd& spectrum, double moment_gap_ratio,
                       int k, int m) {
  if (k < 1 || m < 1) throw std::invalid_argument("kappa_scan: need k, m >= 1");
  if (moment_gap_ratio < 0.0) {
    throw std::invalid_argument("kappa_scan: negative moment/gap ratio");
  }
  const int len = static_cast<int>(spectrum.size());
  // tail[h] = sum_{j > h} lambda_j, accumulated from the small end so the
  // scan is exact arithmetic reused across h.
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(len + 1);
  for (int j = len - 1; j >= 0; --j) {
    tail[j] = tail[j + 1] + std::max(spectrum[j], 0.0);
  }
  KappaResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int h = 0; h <= len; ++h) {
    const double value =
        moment_gap_ratio * h / static_cast<double>(m) +
        std::sqrt(static_cast<double>(k) / static_cast<double>(m) * tail[h]);
    if (value < best.value) {
      best.value = value;
      best.argmin = h;
    }
  }
  return best;
}

SpectrumDiagnostics fourth_moment_from_features(
    const Eigen::MatrixXd& feature_evals, const Eigen::VectorXd& kernel_spectrum,
    int k, int m) {
  const Eigen::Index probes = feature_evals.rows();
  const Eigen::Index n = feature_evals.cols();
  if (probes < 2 || n < 2) {
    throw std::invalid_argument("fourth_moment: need at least 2 probes and 2 points");
  }
  if (k < 1 || m < 1) throw std::invalid_argument("fourth_moment: need k, m >= 1");

  // Empirical L2 inner products between probe features.
  Eigen::MatrixXd s = (feature_evals * feature_evals.transpose()) /
                      static_cast<double>(n);
  s = (0.5 * (s + s.transpose())).eval();

  // Gram matrix of the rank-1 operators; double-center and rescale to get
  // the covariance spectrum of the operator-valued samples.
  Eigen::MatrixXd h = s.array().square();
  const Eigen::VectorXd row_mean = h.rowwise().mean();
  const double grand_mean = row_mean.mean();
  h.colwise() -= row_mean;
  h.rowwise() -= row_mean.transpose();
  h.array() += grand_mean;

  SpectrumDiagnostics diag;
  diag.probe_features = static_cast<int>(probes);
  diag.target_rank = k;
  diag.feature_budget = m;
  diag.variance_spectrum =
      (symmetric_eigenvalues(h) / static_cast<double>(probes)).cwiseMax(0.0);

  if (kernel_spectrum.size() > k) {
    diag.spectral_gap = kernel_spectrum[k - 1] - kernel_spectrum[k];
  }
  const double gap_floor =
      kernel_spectrum.size() > 0 ? 1e-12 * std::max(kernel_spectrum[0], 0.0) : 0.0;
  if (diag.spectral_gap > gap_floor) {
    // Fourth moment of inner products over fresh (distinct) probe pairs.
    double sum4 = 0.0;
    for (Eigen::Index a = 0; a < probes; ++a) {
      for (Eigen::Index b = a + 1; b < probes; ++b) {
        const double v = s(a, b) * s(a, b);
        sum4 += v * v;
      }
    }
    const double pairs = static_cast<double>(probes) *
                         static_cast<double>(probes - 1) / 2.0;
    diag.moment_gap_ratio = std::sqrt(sum4 / pairs) / diag.spectral_gap;
    const KappaResult scan =
        kappa_scan(diag.variance_spectrum, *diag.moment_gap_ratio, k, m);
    diag.kappa = scan.value;
    diag.kappa_argmin = scan.argmin;
  }
  return diag;
}

SpectrumDiagnostics fourth_moment_spectrum(const KernelSpec& spec,
                                           const Eigen::MatrixXd& data,
                                           int probe_features, int k, int m,
                                           std::uint64_t seed) {
  if (data.rows() < 2) throw std::invalid_argument("fourth_moment: need >= 2 points");
  if (probe_features < 2) {
    throw std::invalid_argument("fourth_moment: need >= 2 probe features");
  }
  // Per-feature functions sqrt(2) cos(w.x + b) without the 1/sqrt(M)
  // aggregation scaling; each probe is one draw from the spectral density.
  const FeatureMap probes = sample_feature_map(spec, probe_features, seed);
  Eigen::MatrixXd evals = probes.frequencies * data.transpose();
  evals.colwise() += probes.phases;
  evals = (std::sqrt(2.0) * evals.array().cos()).matrix();

  const Eigen::VectorXd kernel_spectrum =
      symmetric_eigenvalues(kernel_matrix(spec, data)) /
      static_cast<double>(data.rows());
  return fourth_moment_from_features(evals, kernel_spectrum, k, m);
}

}  // namespace rfpca
