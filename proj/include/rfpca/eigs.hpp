#pragma once

#include <Eigen/Core>

namespace rfpca {

struct EigPairs {
  Eigen::VectorXd values;   ///< non-increasing
  Eigen::MatrixXd vectors;  ///< matching columns, unit norm, sign-fixed
};

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties). Gives deterministic eigenvector output across runs.
void fix_column_signs(Eigen::MatrixXd& vectors);

/// All eigenpairs of a symmetric matrix, values non-increasing, vectors
/// sign-fixed. Equal eigenvalues are ordered by lexicographic comparison of
/// the sign-fixed vectors. Uses LAPACK above a size threshold.
EigPairs symmetric_eig(const Eigen::MatrixXd& a);

/// Top-k eigenpairs only (k <= n). Cheaper than symmetric_eig for large n.
EigPairs symmetric_eig_topk(const Eigen::MatrixXd& a, int k);

/// Eigenvalues only, non-increasing.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a);

/// Q factor of a thin QR with the R diagonal forced non-negative, so an
/// already-orthonormal input is reproduced (not sign-flipped).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a);

}  // namespace rfpca
