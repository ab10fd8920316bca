#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rfpca/kernels.hpp"
#include "rfpca/model.hpp"

namespace rfpca {

/// Mergeable running sum of z z^T over a feature stream. Single writer;
/// shard the stream into independent accumulators and merge for parallelism.
class CovarianceAccumulator {
 public:
  CovarianceAccumulator() = default;
  explicit CovarianceAccumulator(int dim);

  /// Rank-1 update. Non-finite samples are rejected and counted as skips.
  void accumulate(const Eigen::VectorXd& z);

  int dim() const { return static_cast<int>(sum_.rows()); }
  long count() const { return count_; }
  long skipped() const { return skipped_; }
  const Eigen::MatrixXd& sum() const { return sum_; }
  Eigen::MatrixXd mean() const;

  friend CovarianceAccumulator merge(const CovarianceAccumulator& a,
                                     const CovarianceAccumulator& b);

 private:
  Eigen::MatrixXd sum_;
  long count_ = 0;
  long skipped_ = 0;
};

CovarianceAccumulator merge(const CovarianceAccumulator& a,
                            const CovarianceAccumulator& b);

/// Batch feature-space learner: top-k eigenvectors of the accumulated mean
/// covariance. Directions with eigenvalues below 1e-12 * lambda_max are
/// dropped and the deficiency is flagged in the returned metadata.
SubspaceModel rf_erm(const CovarianceAccumulator& acc, int k);

/// Kernel-matrix learner output: top-k eigenpairs of the (approximate)
/// kernel matrix on the training points, evaluable out of sample through
/// f_i(x) = sigma_i^{-1/2} sum_q a_iq k(x_q, x).
struct GramModel {
  enum class Kind { exact_erm, nystrom };

  KernelSpec spec;
  Eigen::MatrixXd train_points;      ///< n_tr x d
  Eigen::MatrixXd coefficients;      ///< n_tr x k_effective, orthonormal columns
  Eigen::VectorXd gram_eigenvalues;  ///< non-increasing, positive
  Kind kind = Kind::exact_erm;
  std::vector<Eigen::Index> landmarks;  ///< nystrom only
  LearnerMeta meta;

  int effective_rank() const { return static_cast<int>(coefficients.cols()); }
};

/// Dense kernel-matrix ERM. Refuses more than max_points training points
/// (the kernel matrix is n^2).
GramModel exact_erm(const KernelSpec& spec, const Eigen::MatrixXd& train, int k,
                    long max_points = 10000);

/// Nystrom approximation from p uniformly sampled landmarks, eigendecomposed
/// through the p x p inner problem. Singular landmark blocks are handled by
/// a pseudo-inverse with relative threshold 1e-10.
GramModel nystrom_erm(const KernelSpec& spec, const Eigen::MatrixXd& train,
                      int landmark_count, int k, std::uint64_t seed);

}  // namespace rfpca
