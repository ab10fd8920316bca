#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "rfpca/kernels.hpp"

namespace rfpca {

/// Estimated spectral-decay diagnostics for a kernel/data pair.
///
/// variance_spectrum estimates the eigenvalues of the covariance of the
/// random rank-1 feature operator z_w (x) z_w in the empirical L2 geometry
/// (the operator's fourth-moment structure). moment_gap_ratio is the
/// quantity B_k = sqrt(E <z_w, z_w'>^4) / (lambda_k - lambda_{k+1}) over the
/// empirical kernel spectrum; kappa is
///   min_h { B_k h / m + sqrt((k/m) sum_{j>h} lambda_j) }
/// over the estimated variance spectrum, with kappa_argmin the smallest
/// minimizing h. Small kappa indicates m features suffice.
struct SpectrumDiagnostics {
  Eigen::VectorXd variance_spectrum;  ///< non-increasing, clamped at 0
  double spectral_gap = 0.0;          ///< lambda_k - lambda_{k+1} of the kernel spectrum
  std::optional<double> moment_gap_ratio;  ///< B_k; absent when the gap vanishes
  std::optional<double> kappa;             ///< absent when B_k is
  int kappa_argmin = 0;
  int probe_features = 0;  ///< M
  int target_rank = 0;     ///< k
  int feature_budget = 0;  ///< m
};

struct KappaResult {
  double value = 0.0;
  int argmin = 0;
};

/// Exhaustive scan of kappa over h in {0, ..., len(spectrum)}. The spectrum
/// must be non-increasing and non-negative.
KappaResult kappa_scan(const Eigen::VectorXd& spectrum, double moment_gap_ratio,
                       int k, int m);

/// Core estimator. feature_evals holds M probe-feature rows evaluated on N
/// points; inner products are taken in the empirical L2 geometry
/// s_ab = (1/N) sum_q F_aq F_bq. The M x M Gram matrix of the rank-1
/// operators is H = s .^ 2; double-centering H and scaling its eigenvalues
/// by 1/M estimates the operator covariance spectrum. kernel_spectrum (non-
/// increasing) supplies the eigengap for B_k.
SpectrumDiagnostics fourth_moment_from_features(
    const Eigen::MatrixXd& feature_evals, const Eigen::VectorXd& kernel_spectrum,
    int k, int m);

/// Draws probe_features single-feature functions from the kernel's spectral
/// density, evaluates them on the data (rows of data), and estimates the
/// diagnostics. The kernel spectrum is the eigenvalue list of K/N.
SpectrumDiagnostics fourth_moment_spectrum(const KernelSpec& spec,
                                           const Eigen::MatrixXd& data,
                                           int probe_features, int k, int m,
                                           std::uint64_t seed);

}  // namespace rfpca
