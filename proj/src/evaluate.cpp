#include "rfpca/evaluate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfpca/common.hpp"
#include "rfpca/eigs.hpp"

namespace rfpca {

namespace {
constexpr double kDropThreshold = 1e-12;  // relative to the top eigenvalue

// Indices of model directions whose empirical second moment clears the
// normalization threshold.
std::vector<int> kept_directions(const Eigen::VectorXd& second_moments,
                                 double top_eigenvalue) {
  const double floor = kDropThreshold * std::max(top_eigenvalue, 0.0);
  std::vector<int> keep;
  for (int i = 0; i < second_moments.size(); ++i) {
    if (second_moments[i] > floor) keep.push_back(i);
  }
  return keep;
}
}  // namespace

EvalSet make_eval_set(Eigen::MatrixXd points, Eigen::MatrixXd features,
                      Eigen::MatrixXd kernel) {
  if (features.cols() != points.rows() || kernel.rows() != points.rows() ||
      kernel.cols() != points.rows()) {
    throw std::invalid_argument("make_eval_set: inconsistent shapes");
  }
  if (points.rows() < 1) throw std::invalid_argument("make_eval_set: empty point set");
  EvalSet eval;
  eval.points = std::move(points);
  eval.features = std::move(features);
  eval.kernel = std::move(kernel);
  eval.feature_cov = (eval.features * eval.features.transpose()) /
                     static_cast<double>(eval.points.rows());
  eval.feature_cov = (0.5 * (eval.feature_cov + eval.feature_cov.transpose())).eval();
  eval.cov_top_eigenvalue = symmetric_eigenvalues(eval.feature_cov)[0];
  return eval;
}

EvalSet build_eval_set(const FeatureMap& map, const Eigen::MatrixXd& points,
                       long max_points) {
  if (points.rows() < 1) throw std::invalid_argument("build_eval_set: empty point set");
  if (points.rows() > max_points) {
    throw ResourceError("build_eval_set: " + std::to_string(points.rows()) +
                        " eval points exceed the configured cap of " +
                        std::to_string(max_points) +
                        " (the kernel matrix would be n^2)");
  }
  return make_eval_set(points, transform_matrix(map, points),
                       kernel_matrix(map.spec, points));
}

ObjectiveResult lifted_objective(const SubspaceModel& model, const EvalSet& eval) {
  if (model.basis.rows() != eval.feature_dim()) {
    throw std::invalid_argument("lifted_objective: feature dimension mismatch");
  }
  const Eigen::MatrixXd cov_block =
      model.basis.transpose() * eval.feature_cov * model.basis;
  const std::vector<int> keep =
      kept_directions(cov_block.diagonal(), eval.cov_top_eigenvalue);

  ObjectiveResult result;
  result.effective_rank = static_cast<int>(keep.size());
  if (keep.empty()) return result;

  Eigen::MatrixXd kept_basis(model.basis.rows(), keep.size());
  Eigen::MatrixXd kept_block(keep.size(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    kept_basis.col(static_cast<Eigen::Index>(j)) = model.basis.col(keep[j]);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      kept_block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cov_block(keep[i], keep[j]);
    }
  }
  // Whiten the lifted frame to an exactly orthonormal one in the empirical
  // L2 inner product <f, g> = (1/n) sum_q f(x_q) g(x_q). This keeps the
  // objective invariant under rotations of the basis and reduces to the
  // per-direction normalization whenever the basis diagonalizes the eval
  // covariance (in particular on eigenbases).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kept_block);
  Eigen::MatrixXd whitener = es.eigenvectors() *
                             es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                             es.eigenvectors().transpose();
  const long n = eval.size();
  const Eigen::MatrixXd lifted =
      (eval.features.transpose() * (kept_basis * whitener)) /
      std::sqrt(static_cast<double>(n));
  result.value =
      (lifted.transpose() * (eval.kernel * lifted)).trace() / static_cast<double>(n);
  return result;
}

ObjectiveResult erm_objective_cross(const GramModel& model,
                                    const Eigen::MatrixXd& cross) {
  if (cross.cols() != model.train_points.rows()) {
    throw std::invalid_argument("erm_objective: cross-kernel shape mismatch");
  }
  const double floor =
      model.gram_eigenvalues.size() > 0
          ? kDropThreshold * std::max(model.gram_eigenvalues[0], 0.0)
          : 0.0;
  ObjectiveResult result;
  const Eigen::MatrixXd f = cross * model.coefficients;
  for (int i = 0; i < model.effective_rank(); ++i) {
    if (model.gram_eigenvalues[i] <= floor) continue;
    result.value += f.col(i).squaredNorm() / model.gram_eigenvalues[i];
    ++result.effective_rank;
  }
  result.value /= static_cast<double>(cross.rows());
  return result;
}

ObjectiveResult erm_objective(const GramModel& model,
                              const Eigen::MatrixXd& eval_points) {
  return erm_objective_cross(
      model, cross_kernel(model.spec, eval_points, model.train_points));
}

double gram_deviation(const SubspaceModel& model, const EvalSet& eval) {
  if (model.basis.rows() != eval.feature_dim()) {
    throw std::invalid_argument("gram_deviation: feature dimension mismatch");
  }
  const Eigen::MatrixXd g =
      model.basis.transpose() * eval.feature_cov * model.basis;
  const std::vector<int> keep =
      kept_directions(g.diagonal(), eval.cov_top_eigenvalue);
  Eigen::MatrixXd normalized(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      normalized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          g(keep[i], keep[j]) / std::sqrt(g(keep[i], keep[i]) * g(keep[j], keep[j]));
    }
  }
  normalized.diagonal().array() -= 1.0;
  return normalized.norm();
}

double gram_deviation_cross(const GramModel& model, const Eigen::MatrixXd& cross) {
  const Eigen::MatrixXd f = cross * model.coefficients;
  const Eigen::MatrixXd g =
      (f.transpose() * f) / static_cast<double>(cross.rows());
  const std::vector<int> keep = kept_directions(
      g.diagonal(), g.diagonal().size() ? g.diagonal().maxCoeff() : 0.0);
  Eigen::MatrixXd normalized(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      normalized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          g(keep[i], keep[j]) / std::sqrt(g(keep[i], keep[i]) * g(keep[j], keep[j]));
    }
  }
  normalized.diagonal().array() -= 1.0;
  return normalized.norm();
}

double subspace_error(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& reference) {
  if (basis.rows() != reference.rows()) {
    throw std::invalid_argument("subspace_error: dimension mismatch");
  }
  const double aligned = (reference.transpose() * basis).squaredNorm();
  return std::max(static_cast<double>(basis.cols()) - aligned, 0.0);
}

double subspace_error(const SubspaceModel& model, const Eigen::MatrixXd& reference) {
  return subspace_error(model.basis, reference);
}

EvalReport evaluate_subspace(const SubspaceModel& model, const EvalSet& eval,
                             const Eigen::MatrixXd* reference) {
  EvalReport report;
  const ObjectiveResult objective = lifted_objective(model, eval);
  report.objective = objective.value;
  report.effective_rank = objective.effective_rank;
  report.gram_dev = gram_deviation(model, eval);
  if (reference) report.subspace_err = subspace_error(model, *reference);
  report.meta = model.meta;
  return report;
}

EvalReport evaluate_gram(const GramModel& model, const Eigen::MatrixXd& cross) {
  EvalReport report;
  const ObjectiveResult objective = erm_objective_cross(model, cross);
  report.objective = objective.value;
  report.effective_rank = objective.effective_rank;
  report.gram_dev = gram_deviation_cross(model, cross);
  report.meta = model.meta;
  return report;
}

ProcrustesResult procrustes_align(const Eigen::MatrixXd& basis,
                                  const Eigen::MatrixXd& target) {
  if (basis.rows() != target.rows() || basis.cols() != target.cols()) {
    throw std::invalid_argument("procrustes_align: shape mismatch");
  }
  const Eigen::MatrixXd m = basis.transpose() * target;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult result;
  result.rotation = svd.matrixU() * svd.matrixV().transpose();
  const Eigen::VectorXd& sv = svd.singularValues();
  result.degenerate =
      sv.size() == 0 || sv[sv.size() - 1] <= 1e-12 * std::max(sv[0], 0.0);
  return result;
}

}  // namespace rfpca
