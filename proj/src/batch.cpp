#include "rfpca/batch.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rfpca/common.hpp"
#include "rfpca/eigs.hpp"
#include "rfpca/rng.hpp"

namespace rfpca {

namespace {
constexpr double kRankThreshold = 1e-12;  // relative to the top eigenvalue

// Keep the leading directions whose eigenvalue clears the numerical-rank
// threshold; flags the meta when fewer than k survive.
void truncate_to_rank(EigPairs& eig, int k, LearnerMeta& meta) {
  const double floor =
      eig.values.size() > 0 ? kRankThreshold * std::max(eig.values[0], 0.0) : 0.0;
  int keep = 0;
  while (keep < k && keep < eig.values.size() && eig.values[keep] > floor) ++keep;
  if (keep < k) meta.rank_deficient = true;
  eig.values.conservativeResize(keep);
  eig.vectors.conservativeResize(Eigen::NoChange, keep);
}
}  // namespace

CovarianceAccumulator::CovarianceAccumulator(int dim) {
  if (dim < 1) throw std::invalid_argument("accumulator dimension must be >= 1");
  sum_ = Eigen::MatrixXd::Zero(dim, dim);
}

void CovarianceAccumulator::accumulate(const Eigen::VectorXd& z) {
  if (sum_.size() == 0) sum_ = Eigen::MatrixXd::Zero(z.size(), z.size());
  if (z.size() != sum_.rows()) {
    throw std::invalid_argument("accumulate: sample has dimension " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(sum_.rows()));
  }
  if (!z.allFinite()) {
    ++skipped_;
    return;
  }
  // z z^T computed entrywise is exactly symmetric. Materializing the outer
  // product before the add keeps accumulate bitwise identical to merging
  // single-sample accumulators (a fused multiply-add would round once, the
  // merge path twice).
  sum_ += (z * z.transpose()).eval();
  ++count_;
}

Eigen::MatrixXd CovarianceAccumulator::mean() const {
  if (count_ == 0) throw std::invalid_argument("accumulator is empty");
  return sum_ / static_cast<double>(count_);
}

CovarianceAccumulator merge(const CovarianceAccumulator& a,
                            const CovarianceAccumulator& b) {
  if (a.count_ == 0 && a.sum_.size() == 0) return b;
  if (b.count_ == 0 && b.sum_.size() == 0) return a;
  if (a.sum_.rows() != b.sum_.rows()) {
    throw std::invalid_argument("merge: accumulator dimensions differ");
  }
  CovarianceAccumulator out;
  out.sum_ = a.sum_ + b.sum_;
  out.count_ = a.count_ + b.count_;
  out.skipped_ = a.skipped_ + b.skipped_;
  return out;
}

SubspaceModel rf_erm(const CovarianceAccumulator& acc, int k) {
  if (k < 1) throw std::invalid_argument("rf_erm: k must be >= 1");
  if (k > acc.dim()) throw std::invalid_argument("rf_erm: k exceeds feature dimension");
  if (acc.count() < k) {
    throw std::invalid_argument("rf_erm: needs at least k samples, have " +
                                std::to_string(acc.count()));
  }
  EigPairs eig = symmetric_eig_topk(acc.mean(), k);

  SubspaceModel model;
  model.meta.learner = "rf_erm";
  model.meta.samples = acc.count();
  model.meta.feature_dim = acc.dim();
  model.meta.rank = k;
  model.meta.skipped = acc.skipped();
  truncate_to_rank(eig, k, model.meta);
  model.basis = std::move(eig.vectors);
  model.rayleigh = std::move(eig.values);
  return model;
}

GramModel exact_erm(const KernelSpec& spec, const Eigen::MatrixXd& train, int k,
                    long max_points) {
  const long n = train.rows();
  if (n < k || k < 1) throw std::invalid_argument("exact_erm: need n >= k >= 1");
  if (n > max_points) {
    throw ResourceError("exact_erm: " + std::to_string(n) +
                        " training points exceed the configured cap of " +
                        std::to_string(max_points) +
                        " (the kernel matrix would be n^2)");
  }
  EigPairs eig = symmetric_eig_topk(kernel_matrix(spec, train), k);

  GramModel model;
  model.spec = spec;
  model.train_points = train;
  model.kind = GramModel::Kind::exact_erm;
  model.meta.learner = "exact_erm";
  model.meta.samples = n;
  model.meta.rank = k;
  truncate_to_rank(eig, k, model.meta);
  model.coefficients = std::move(eig.vectors);
  model.gram_eigenvalues = std::move(eig.values);
  return model;
}

GramModel nystrom_erm(const KernelSpec& spec, const Eigen::MatrixXd& train,
                      int landmark_count, int k, std::uint64_t seed) {
  const long n = train.rows();
  if (k < 1 || k > landmark_count || landmark_count > n) {
    throw std::invalid_argument("nystrom_erm: need 1 <= k <= p <= n_tr");
  }

  // Uniform landmarks without replacement.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(static_cast<std::size_t>(landmark_count));
  std::sort(idx.begin(), idx.end());

  Eigen::MatrixXd landmarks(landmark_count, train.cols());
  for (int i = 0; i < landmark_count; ++i) landmarks.row(i) = train.row(idx[i]);

  const Eigen::MatrixXd cross = cross_kernel(spec, train, landmarks);
  const Eigen::MatrixXd inner = kernel_matrix(spec, landmarks);

  // K~ = C W^+ C^T = B B^T with B = C V s^{-1/2}; eigenpairs of K~ come from
  // the SVD of B, so only p x p and n x p factors are ever formed.
  EigPairs w = symmetric_eig(inner);
  const double floor = 1e-10 * std::max(w.values.size() ? w.values[0] : 0.0, 0.0);
  int keep = 0;
  while (keep < w.values.size() && w.values[keep] > floor) ++keep;
  if (keep == 0) throw std::invalid_argument("nystrom_erm: landmark block is zero");
  Eigen::MatrixXd b = cross * w.vectors.leftCols(keep);
  for (int j = 0; j < keep; ++j) b.col(j) /= std::sqrt(w.values[j]);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  Eigen::VectorXd values = svd.singularValues().array().square();
  Eigen::MatrixXd vectors = svd.matrixU();
  fix_column_signs(vectors);

  GramModel model;
  model.spec = spec;
  model.train_points = train;
  model.kind = GramModel::Kind::nystrom;
  model.landmarks = std::move(idx);
  model.meta.learner = "nystrom";
  model.meta.samples = n;
  model.meta.rank = k;
  model.meta.seed = seed;

  EigPairs eig;
  const int avail = static_cast<int>(std::min<Eigen::Index>(values.size(), k));
  eig.values = values.head(avail);
  eig.vectors = vectors.leftCols(avail);
  truncate_to_rank(eig, k, model.meta);
  model.coefficients = std::move(eig.vectors);
  model.gram_eigenvalues = std::move(eig.values);
  return model;
}

}  // namespace rfpca
