#pragma once

#include <Eigen/Core>
#include <optional>

#include "rfpca/batch.hpp"
#include "rfpca/kernels.hpp"
#include "rfpca/model.hpp"

namespace rfpca {

/// Cached held-out evaluation data: the points, their feature images Z, the
/// exact kernel matrix K, and the feature-space covariance Z Z^T / n.
/// Immutable after construction; all evaluation calls are pure.
struct EvalSet {
  Eigen::MatrixXd points;       ///< n x d
  Eigen::MatrixXd features;     ///< m x n
  Eigen::MatrixXd kernel;       ///< n x n
  Eigen::MatrixXd feature_cov;  ///< m x m
  double cov_top_eigenvalue = 0.0;

  long size() const { return points.rows(); }
  int feature_dim() const { return static_cast<int>(features.rows()); }
};

/// Builds the cache. The kernel matrix is n^2, so point counts above
/// max_points are refused.
EvalSet build_eval_set(const FeatureMap& map, const Eigen::MatrixXd& points,
                       long max_points = 4000);

/// Assembles an EvalSet from precomputed pieces (e.g. a finite-dimensional
/// kernel realized exactly by its feature map, or a kernel matrix shared
/// across feature seeds).
EvalSet make_eval_set(Eigen::MatrixXd points, Eigen::MatrixXd features,
                      Eigen::MatrixXd kernel);

struct ObjectiveResult {
  double value = 0.0;
  /// Directions that survived the normalization threshold; less than the
  /// model rank when near-singular directions were dropped.
  int effective_rank = 0;
};

/// Held-out objective of a feature-space subspace against the true kernel:
/// the model's directions are lifted to functions x -> <z(x), u_i>, scaled
/// to unit norm in the empirical L2 geometry of the eval set, and the
/// captured kernel variance (1/n) tr(V^T K V) of the lifted frame V is
/// returned. For the top-k eigenbasis of the eval covariance this equals the
/// top-k eigenvalue mass of K/n.
ObjectiveResult lifted_objective(const SubspaceModel& model, const EvalSet& eval);

/// Same objective for kernel-matrix learners, evaluated out of sample via
/// f_i(x) = sigma_i^{-1/2} sum_q a_iq k(x_q, x):
/// (1/n_e) sum_i |K_cross a_i|^2 / sigma_i.
ObjectiveResult erm_objective(const GramModel& model,
                              const Eigen::MatrixXd& eval_points);

/// erm_objective with the n_e x n_tr cross-kernel matrix already computed.
ObjectiveResult erm_objective_cross(const GramModel& model,
                                    const Eigen::MatrixXd& cross);

/// Frobenius distance from the lifted directions' empirical Gram matrix to
/// the identity: 0 exactly when the lifted functions are orthonormal in the
/// eval set's L2 geometry. Computable surrogate for the distance of the
/// lifted operator from the set of rank-k projections.
double gram_deviation(const SubspaceModel& model, const EvalSet& eval);

/// Same surrogate for kernel-matrix learners.
double gram_deviation_cross(const GramModel& model, const Eigen::MatrixXd& cross);

/// |U - P_ref U|_F^2 = k - |ref^T U|_F^2: squared subspace angle from the
/// model basis to the reference subspace. Depends on ref only through its
/// span.
double subspace_error(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& reference);
double subspace_error(const SubspaceModel& model, const Eigen::MatrixXd& reference);

struct ProcrustesResult {
  Eigen::MatrixXd rotation;  ///< k x k orthogonal
  bool degenerate = false;   ///< basis^T target was rank deficient
};

/// Orthogonal factor minimizing |basis R - target|_F (polar factor of
/// basis^T target). On rank-deficient input any valid completion is returned
/// and the result is flagged.
ProcrustesResult procrustes_align(const Eigen::MatrixXd& basis,
                                  const Eigen::MatrixXd& target);

/// One learner evaluation, as recorded by the experiment harness.
struct EvalReport {
  double objective = 0.0;
  double gram_dev = 0.0;
  std::optional<double> subspace_err;
  double wall_time_s = 0.0;
  int effective_rank = 0;
  LearnerMeta meta;
};

/// Full held-out evaluation of a feature-space model; subspace error is
/// filled when a reference basis is supplied. wall_time_s is left for the
/// caller's clock.
EvalReport evaluate_subspace(const SubspaceModel& model, const EvalSet& eval,
                             const Eigen::MatrixXd* reference = nullptr);

/// Counterpart for kernel-matrix learners, sharing a precomputed
/// eval-by-train cross-kernel block.
EvalReport evaluate_gram(const GramModel& model, const Eigen::MatrixXd& cross);

}  // namespace rfpca
