#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rfpca/batch.hpp"
#include "rfpca/common.hpp"
#include "rfpca/eigs.hpp"
#include "rfpca/rng.hpp"
#include "support/jacobi.hpp"

using namespace rfpca;

namespace {
Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = spread * rng.gaussian();
  return x;
}
}  // namespace

TEST_CASE("accumulate: single sample, degenerate stream, norm bound, skips") {
  CovarianceAccumulator acc;
  Eigen::VectorXd z(3);
  z << 1.0, -2.0, 0.5;
  acc.accumulate(z);
  CHECK(acc.count() == 1);
  CHECK(acc.sum() == (z * z.transpose()));

  // n copies of z: mean is exactly z z^T.
  for (int i = 0; i < 9; ++i) acc.accumulate(z);
  CHECK(acc.mean() == (z * z.transpose()));

  Eigen::VectorXd bad(3);
  bad << 1.0, std::nan(""), 0.0;
  acc.accumulate(bad);
  CHECK(acc.count() == 10);
  CHECK(acc.skipped() == 1);

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(acc.accumulate(wrong), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceAccumulator().mean(), std::invalid_argument);

  // Feature-norm bound: transforms have |z|^2 <= 2, so trace(mean) <= 2.
  KernelSpec spec{KernelFamily::rbf, std::sqrt(50.0), 16};
  FeatureMap map = sample_feature_map(spec, 24, 5);
  CovarianceAccumulator feat_acc(24);
  const Eigen::MatrixXd pts = random_points(1000, 16, 6);
  for (int i = 0; i < 1000; ++i) {
    feat_acc.accumulate(transform(map, pts.row(i).transpose()));
  }
  const double tr = feat_acc.mean().trace();
  CHECK(tr > 0.0);
  CHECK(tr <= 2.0 + 1e-12);
  // Symmetric to the last bit by construction.
  CHECK(feat_acc.sum() == feat_acc.sum().transpose());
}

TEST_CASE("merge: identity, split-vs-sequential, tree shapes") {
  const Eigen::MatrixXd pts = random_points(100, 6, 77);
  CovarianceAccumulator sequential(6);
  for (int i = 0; i < 100; ++i) sequential.accumulate(pts.row(i).transpose());

  CHECK(merge(sequential, CovarianceAccumulator()).sum() == sequential.sum());
  CHECK(merge(CovarianceAccumulator(), sequential).count() == 100);

  CovarianceAccumulator left(6), right(6);
  for (int i = 0; i < 50; ++i) left.accumulate(pts.row(i).transpose());
  for (int i = 50; i < 100; ++i) right.accumulate(pts.row(i).transpose());
  const CovarianceAccumulator two_way = merge(left, right);
  CHECK(two_way.count() == 100);
  CHECK((two_way.sum() - sequential.sum()).cwiseAbs().maxCoeff() <=
        1e-10 * sequential.sum().norm());

  CovarianceAccumulator quarters[4];
  for (int q = 0; q < 4; ++q) {
    quarters[q] = CovarianceAccumulator(6);
    for (int i = 25 * q; i < 25 * (q + 1); ++i) {
      quarters[q].accumulate(pts.row(i).transpose());
    }
  }
  const CovarianceAccumulator four_way =
      merge(merge(quarters[0], quarters[1]), merge(quarters[2], quarters[3]));
  CHECK((four_way.sum() - two_way.sum()).cwiseAbs().maxCoeff() <=
        1e-10 * sequential.sum().norm());

  // Prefix-merging one sample at a time reproduces sequential accumulation
  // bit for bit (same association order).
  CovarianceAccumulator prefix(6);
  for (int i = 0; i < 100; ++i) {
    CovarianceAccumulator one(6);
    one.accumulate(pts.row(i).transpose());
    prefix = merge(prefix, one);
  }
  CHECK(prefix.sum() == sequential.sum());

  CovarianceAccumulator other_dim(5);
  other_dim.accumulate(Eigen::VectorXd::Ones(5));
  CHECK_THROWS_AS(merge(sequential, other_dim), std::invalid_argument);
}

TEST_CASE("rf_erm: axis-aligned degenerate case") {
  CovarianceAccumulator acc(3);
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  for (int i = 0; i < 5; ++i) acc.accumulate(e1);
  const SubspaceModel model = rf_erm(acc, 1);
  CHECK(model.effective_rank() == 1);
  CHECK(std::abs(model.basis(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.rayleigh[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.meta.learner == "rf_erm");
}

TEST_CASE("rf_erm matches the brute-force Jacobi oracle") {
  // 5 random vectors in R^4, k = 2: dense oracle on the explicit covariance.
  const Eigen::MatrixXd pts = random_points(5, 4, 31);
  CovarianceAccumulator acc(4);
  for (int i = 0; i < 5; ++i) acc.accumulate(pts.row(i).transpose());
  const SubspaceModel model = rf_erm(acc, 2);

  const Eigen::MatrixXd cov = pts.transpose() * pts / 5.0;
  const testsupport::JacobiEig oracle = testsupport::jacobi_eig(cov);
  const Eigen::MatrixXd p_model = model.basis * model.basis.transpose();
  CHECK((p_model - testsupport::topk_projector(oracle, 2)).norm() <= 1e-8);
  for (int i = 0; i < 2; ++i) {
    CHECK(model.rayleigh[i] == doctest::Approx(oracle.values[i]).epsilon(1e-10));
  }
}

TEST_CASE("rf_erm flags rank deficiency and returns available directions") {
  CovarianceAccumulator acc(4);
  Eigen::VectorXd z(4);
  z << 1, 2, 3, 4;
  for (int i = 0; i < 6; ++i) acc.accumulate(z);  // rank-1 covariance
  const SubspaceModel model = rf_erm(acc, 3);
  CHECK(model.effective_rank() == 1);
  CHECK(model.meta.rank_deficient);
  CHECK(model.meta.rank == 3);

  CHECK_THROWS_AS(rf_erm(acc, 5), std::invalid_argument);
  CovarianceAccumulator empty(4);
  CHECK_THROWS_AS(rf_erm(empty, 1), std::invalid_argument);
}

TEST_CASE("covariance concentration improves like 1/sqrt(n)") {
  // Bounded synthetic stream with known covariance diag(c^2): z_j = c_j s_j,
  // s Rademacher. |C_hat - C|_2 at n vs 4n should shrink by [0.3, 0.8] on
  // average over seeds.
  const int d = 12;
  Eigen::VectorXd c(d);
  for (int j = 0; j < d; ++j) c[j] = 1.0 / (1 + j);
  const Eigen::MatrixXd truth = c.cwiseProduct(c).asDiagonal();

  auto spectral_error = [&](long n, std::uint64_t seed) {
    Rng rng(seed);
    CovarianceAccumulator acc(d);
    Eigen::VectorXd z(d);
    for (long i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        z[j] = c[j] * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      }
      acc.accumulate(z);
    }
    const Eigen::VectorXd eigs = symmetric_eigenvalues(acc.mean() - truth);
    return std::max(std::abs(eigs[0]), std::abs(eigs[eigs.size() - 1]));
  };

  double ratio_sum = 0.0;
  const int seeds = 10;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const double at_n = spectral_error(500, 100 + s);
    const double at_4n = spectral_error(2000, 200 + s);
    ratio_sum += at_4n / at_n;
  }
  const double mean_ratio = ratio_sum / seeds;
  CHECK(mean_ratio >= 0.3);
  CHECK(mean_ratio <= 0.8);
}

TEST_CASE("exact_erm: single point, oracle match, duplicates, cap") {
  KernelSpec spec{KernelFamily::rbf, 1.0, 2};

  const Eigen::MatrixXd one = random_points(1, 2, 1);
  const GramModel single = exact_erm(spec, one, 1);
  CHECK(single.gram_eigenvalues[0] == doctest::Approx(1.0));
  CHECK(std::abs(single.coefficients(0, 0)) == doctest::Approx(1.0));

  const Eigen::MatrixXd three = random_points(3, 2, 2);
  const GramModel model = exact_erm(spec, three, 3);
  const testsupport::JacobiEig oracle =
      testsupport::jacobi_eig(kernel_matrix(spec, three));
  for (int i = 0; i < 3; ++i) {
    CHECK(model.gram_eigenvalues[i] ==
          doctest::Approx(oracle.values[i]).epsilon(1e-10));
    const double dot =
        std::abs(model.coefficients.col(i).dot(oracle.vectors.col(i)));
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-10));
  }

  Eigen::MatrixXd dup(2, 2);
  dup.row(0) = three.row(0);
  dup.row(1) = three.row(0);
  const GramModel degenerate = exact_erm(spec, dup, 2);
  CHECK(degenerate.meta.rank_deficient);  // sigma_2 ~ 0 flagged
  CHECK(degenerate.effective_rank() == 1);
  CHECK(degenerate.gram_eigenvalues[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(exact_erm(spec, random_points(20, 2, 3), 2, 10), ResourceError);
}

TEST_CASE("nystrom_erm: full-landmark identity and rank-1 data") {
  KernelSpec spec{KernelFamily::rbf, 1.5, 3};
  const Eigen::MatrixXd train = random_points(40, 3, 8);

  const GramModel exact = exact_erm(spec, train, 4);
  const GramModel full = nystrom_erm(spec, train, 40, 4, 99);
  REQUIRE(full.effective_rank() == exact.effective_rank());
  for (int i = 0; i < exact.effective_rank(); ++i) {
    CHECK(std::abs(full.gram_eigenvalues[i] - exact.gram_eigenvalues[i]) <= 1e-8);
    CHECK(std::abs(full.coefficients.col(i).dot(exact.coefficients.col(i))) ==
          doctest::Approx(1.0).epsilon(1e-7));
  }

  // All points equal: a single nonzero eigenvalue for any p.
  Eigen::MatrixXd constant(30, 3);
  constant.rowwise() = train.row(0);
  for (int p : {1, 5, 30}) {
    const GramModel rank1 = nystrom_erm(spec, constant, p, 1, 7);
    CHECK(rank1.gram_eigenvalues.size() == 1);
    CHECK(rank1.gram_eigenvalues[0] == doctest::Approx(30.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(nystrom_erm(spec, train, 50, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(nystrom_erm(spec, train, 10, 11, 1), std::invalid_argument);
}

TEST_CASE("nystrom objective improves with landmark count on average") {
  // Training objective (top-k eigenvalue mass of the approximation) with
  // p = 200 should be >= p = 50, averaged over landmark seeds.
  KernelSpec spec{KernelFamily::rbf, 1.0, 4};
  const Eigen::MatrixXd train = random_points(400, 4, 55, 1.2);
  const int k = 5;
  double small_sum = 0.0, large_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GramModel small = nystrom_erm(spec, train, 50, k, seed);
    const GramModel large = nystrom_erm(spec, train, 200, k, seed);
    small_sum += small.gram_eigenvalues.sum() / train.rows();
    large_sum += large.gram_eigenvalues.sum() / train.rows();
  }
  CHECK(large_sum / 10.0 >= small_sum / 10.0 - 1e-6);
}

TEST_CASE("large-matrix top-k path agrees with the dense solver") {
  // n = 1100 crosses into the Krylov branch of symmetric_eig_topk.
  const int n = 1100;
  const Eigen::MatrixXd pts = random_points(n, 40, 2024, 1.0);
  KernelSpec spec{KernelFamily::rbf, 3.0, 40};
  const Eigen::MatrixXd kernel = kernel_matrix(spec, pts);

  const EigPairs fast = symmetric_eig_topk(kernel, 6);
  const EigPairs dense = symmetric_eig(kernel);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(fast.values[i] - dense.values[i]) <= 1e-9 * dense.values[0]);
    const double residual =
        (kernel * fast.vectors.col(i) - fast.values[i] * fast.vectors.col(i)).norm();
    CHECK(residual <= 1e-8 * dense.values[0]);
  }
  CHECK((fast.vectors.transpose() * fast.vectors -
         Eigen::MatrixXd::Identity(6, 6))
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
}

TEST_CASE("eigen helpers: sign convention and descending order") {
  const Eigen::MatrixXd pts = random_points(12, 5, 61);
  const Eigen::MatrixXd cov = pts.transpose() * pts / 12.0;
  const EigPairs eig = symmetric_eig(cov);
  for (int i = 1; i < 5; ++i) CHECK(eig.values[i] <= eig.values[i - 1]);
  for (int j = 0; j < 5; ++j) {
    Eigen::Index at;
    eig.vectors.col(j).cwiseAbs().maxCoeff(&at);
    CHECK(eig.vectors(at, j) > 0.0);
  }
  const EigPairs topk = symmetric_eig_topk(cov, 2);
  CHECK((topk.vectors - eig.vectors.leftCols(2)).norm() <= 1e-12);
}
