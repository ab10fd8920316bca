#include "rfpca/eigs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rfpca/rng.hpp"

namespace rfpca {

namespace {

// Above this size a full dense solve is wasteful when only the leading
// eigenpairs are needed; symmetric_eig_topk switches to block Lanczos.
constexpr Eigen::Index kKrylovThreshold = 1024;

bool lex_less(const Eigen::MatrixXd& vecs, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index r = 0; r < vecs.rows(); ++r) {
    if (vecs(r, a) != vecs(r, b)) return vecs(r, a) < vecs(r, b);
  }
  return false;
}

// Sorts columns by value descending; exact ties ordered lexicographically by
// the sign-fixed vectors so repeated eigenvalues come out deterministically.
EigPairs sorted_pairs(Eigen::VectorXd values, Eigen::MatrixXd vectors) {
  fix_column_signs(vectors);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return lex_less(vectors, a, b);
  });
  EigPairs out;
  out.values.resize(values.size());
  out.vectors.resize(vectors.rows(), vectors.cols());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out.values[i] = values[order[static_cast<std::size_t>(i)]];
    out.vectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

void check_square(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("symmetric eigensolver: matrix is not square");
  }
}

// Classical block Lanczos with full (twice-applied) reorthogonalization and
// Rayleigh-Ritz extraction. Deterministic: the start block is drawn from a
// fixed-seed generator. The Krylov space grows until the leading k Ritz
// pairs have small relative residuals or the space hits its cap; kernel and
// covariance spectra decay, so a few hundred dimensions are ample for the
// leading pairs.
EigPairs lanczos_topk(const Eigen::MatrixXd& a, int k) {
  const Eigen::Index n = a.rows();
  const Eigen::Index block = std::min<Eigen::Index>(n, k + 8);
  const Eigen::Index cap = std::min<Eigen::Index>(n, std::max<Eigen::Index>(6 * block, 240));

  Rng rng(0x1b0c7a11c0deULL);
  Eigen::MatrixXd start(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < block; ++j) start(i, j) = rng.gaussian();

  Eigen::MatrixXd basis(n, cap);       // orthonormal Krylov basis
  Eigen::MatrixXd products(n, cap);    // a * basis, same column layout
  Eigen::Index built = 0;

  Eigen::MatrixXd current = orthonormalize(start);
  EigPairs ritz;
  while (true) {
    const Eigen::Index width = std::min<Eigen::Index>(current.cols(), cap - built);
    basis.middleCols(built, width) = current.leftCols(width);
    products.middleCols(built, width).noalias() = a * current.leftCols(width);
    built += width;

    // Rayleigh-Ritz on the space built so far.
    const auto b = basis.leftCols(built);
    const auto ab = products.leftCols(built);
    Eigen::MatrixXd projected = b.transpose() * ab;
    projected = (0.5 * (projected + projected.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(projected);
    const int want = static_cast<int>(std::min<Eigen::Index>(k, built));
    Eigen::MatrixXd y = es.eigenvectors().rightCols(want).rowwise().reverse();
    ritz.values = es.eigenvalues().tail(want).reverse();
    ritz.vectors.noalias() = b * y;

    if (built >= cap || built >= n) break;
    // Residuals |a x - theta x| come free from the stored products.
    const Eigen::MatrixXd residual = products.leftCols(built) * y -
                                     ritz.vectors * ritz.values.asDiagonal();
    const double scale = std::max(std::abs(ritz.values[0]), 1e-300);
    if (residual.colwise().norm().maxCoeff() <= 1e-10 * scale) break;

    // Next block: the unexplored part of a * (newest basis block).
    Eigen::MatrixXd next = products.middleCols(built - width, width);
    for (int pass = 0; pass < 2; ++pass) {
      next -= b * (b.transpose() * next).eval();
    }
    current = orthonormalize(next);
  }
  return sorted_pairs(ritz.values, ritz.vectors);
}

}  // namespace

void fix_column_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index at = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&at);
    if (vectors(at, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

EigPairs symmetric_eig(const Eigen::MatrixXd& a) {
  check_square(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver failed to converge");
  }
  return sorted_pairs(es.eigenvalues(), es.eigenvectors());
}

EigPairs symmetric_eig_topk(const Eigen::MatrixXd& a, int k) {
  check_square(a);
  const Eigen::Index n = a.rows();
  if (k < 1 || k > n) throw std::invalid_argument("symmetric_eig_topk: bad k");
  if (n <= kKrylovThreshold) {
    EigPairs all = symmetric_eig(a);
    EigPairs out;
    out.values = all.values.head(k);
    out.vectors = all.vectors.leftCols(k);
    return out;
  }
  return lanczos_topk(a, k);
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  check_square(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
  if (a.rows() < a.cols()) {
    throw std::invalid_argument("orthonormalize: more columns than rows");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace rfpca
