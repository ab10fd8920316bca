#include "rfpca/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rfpca/rng.hpp"

namespace rfpca {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_dims(const KernelSpec& spec, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() != spec.dim) {
    throw std::invalid_argument("exact_kernel: dimension mismatch (x: " +
                                std::to_string(x.size()) + ", y: " +
                                std::to_string(y.size()) + ", spec: " +
                                std::to_string(spec.dim) + ")");
  }
}
}  // namespace

void validate(const KernelSpec& spec) {
  if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth)) {
    throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }
  if (spec.dim < 1) {
    throw std::invalid_argument("kernel input dimension must be >= 1");
  }
}

const char* family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::cauchy: return "cauchy";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "laplacian") return KernelFamily::laplacian;
  if (name == "cauchy") return KernelFamily::cauchy;
  throw std::invalid_argument("unknown kernel family: " + name);
}

double exact_kernel(const KernelSpec& spec, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y) {
  check_dims(spec, x, y);
  const double sigma = spec.bandwidth;
  switch (spec.family) {
    case KernelFamily::rbf:
      return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
    case KernelFamily::laplacian:
      return std::exp(-(x - y).lpNorm<1>() / sigma);
    case KernelFamily::cauchy: {
      double prod = 1.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double d = (x[j] - y[j]) / sigma;
        prod /= 1.0 + d * d;
      }
      return prod;
    }
  }
  return 0.0;
}

Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
  validate(spec);
  if (a.cols() != spec.dim || b.cols() != spec.dim) {
    throw std::invalid_argument("cross_kernel: dimension mismatch");
  }
  const double sigma = spec.bandwidth;
  if (spec.family == KernelFamily::rbf) {
    // |x - y|^2 = |x|^2 + |y|^2 - 2 x.y, assembled from one GEMM.
    Eigen::MatrixXd k = a * b.transpose();
    const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    k = ((-2.0 * k).colwise() + a2).rowwise() + b2.transpose();
    k = k.cwiseMax(0.0);
    return (-k / (2.0 * sigma * sigma)).array().exp();
  }
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      if (spec.family == KernelFamily::laplacian) {
        k(i, j) = std::exp(-(a.row(i) - b.row(j)).lpNorm<1>() / sigma);
      } else {
        double prod = 1.0;
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
          const double d = (a(i, c) - b(j, c)) / sigma;
          prod /= 1.0 + d * d;
        }
        k(i, j) = prod;
      }
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& pts) {
  Eigen::MatrixXd k = cross_kernel(spec, pts, pts);
  k = 0.5 * (k + k.transpose()).eval();
  k.diagonal().setOnes();
  return k;
}

FeatureMap sample_feature_map(const KernelSpec& spec, int m, std::uint64_t seed) {
  validate(spec);
  if (m < 1) throw std::invalid_argument("feature count m must be >= 1");

  FeatureMap map;
  map.spec = spec;
  map.count = m;
  map.amplitude_bound = std::sqrt(2.0);
  map.seed = seed;
  map.frequencies.resize(m, spec.dim);
  map.phases.resize(m);

  // Spectral densities of the three families (classical Fourier pairs):
  // rbf <-> per-coordinate Gaussian, laplacian <-> per-coordinate Cauchy,
  // cauchy <-> per-coordinate Laplace, all with scale 1/sigma.
  Rng rng(seed);
  const double inv_sigma = 1.0 / spec.bandwidth;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < spec.dim; ++j) {
      switch (spec.family) {
        case KernelFamily::rbf:
          map.frequencies(i, j) = inv_sigma * rng.gaussian();
          break;
        case KernelFamily::laplacian:
          map.frequencies(i, j) = rng.cauchy(inv_sigma);
          break;
        case KernelFamily::cauchy:
          map.frequencies(i, j) = rng.laplace(inv_sigma);
          break;
      }
    }
  }
  for (int i = 0; i < m; ++i) map.phases[i] = kTwoPi * rng.uniform();
  return map;
}

Eigen::VectorXd transform(const FeatureMap& map, const Eigen::VectorXd& x) {
  if (x.size() != map.spec.dim) {
    throw std::invalid_argument("transform: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(map.spec.dim));
  }
  const double scale = std::sqrt(2.0 / map.count);
  return scale * ((map.frequencies * x + map.phases).array().cos()).matrix();
}

Eigen::MatrixXd transform_matrix(const FeatureMap& map, const Eigen::MatrixXd& pts) {
  if (pts.cols() != map.spec.dim) {
    throw std::invalid_argument("transform_matrix: dimension mismatch");
  }
  const double scale = std::sqrt(2.0 / map.count);
  Eigen::MatrixXd z = map.frequencies * pts.transpose();
  z.colwise() += map.phases;
  return scale * z.array().cos().matrix();
}

double approx_kernel(const FeatureMap& map, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) {
  return transform(map, x).dot(transform(map, y));
}

}  // namespace rfpca
