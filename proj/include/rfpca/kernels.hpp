#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace rfpca {

enum class KernelFamily { rbf, laplacian, cauchy };

/// A normalized shift-invariant kernel: k(x, x) = 1 for every family.
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double bandwidth = 1.0;  ///< length scale sigma, in input units
  int dim = 1;
};

/// Throws std::invalid_argument unless bandwidth is positive and finite and
/// dim >= 1.
void validate(const KernelSpec& spec);

const char* family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

/// k(x, y). rbf: exp(-|x-y|^2 / 2 sigma^2); laplacian: exp(-|x-y|_1 / sigma);
/// cauchy: prod_j 1 / (1 + (x_j - y_j)^2 / sigma^2).
double exact_kernel(const KernelSpec& spec, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y);

/// Pairwise kernel matrix between the rows of a and the rows of b.
Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b);

/// Symmetric kernel matrix on the rows of pts, with an exactly unit diagonal.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& pts);

/// Random Fourier feature map for a shift-invariant kernel.
///
/// Each feature is a phase-shifted cosine z_i(x) = sqrt(2/m) cos(w_i.x + b_i)
/// with w_i drawn from the kernel's spectral density and b_i uniform on
/// [0, 2pi). Per-feature amplitude is bounded by tau = sqrt(2), and the full
/// map satisfies |z(x)|_2 <= sqrt(2). Feature inner products estimate the
/// kernel without bias.
///
/// Immutable after construction; reconstruction from (spec, m, seed) is
/// bit-identical.
struct FeatureMap {
  KernelSpec spec;
  Eigen::MatrixXd frequencies;  ///< m x d, rows w_i
  Eigen::VectorXd phases;       ///< length m, entries in [0, 2pi)
  int count = 0;                ///< m
  double amplitude_bound = 0.0; ///< tau = sqrt(2)
  std::uint64_t seed = 0;
};

/// Samples an m-feature map. Deterministic given (spec, m, seed).
FeatureMap sample_feature_map(const KernelSpec& spec, int m, std::uint64_t seed);

/// z(x); pure and safe to call concurrently.
Eigen::VectorXd transform(const FeatureMap& map, const Eigen::VectorXd& x);

/// Feature matrix with columns z(x_i) for the rows x_i of pts (m x n).
Eigen::MatrixXd transform_matrix(const FeatureMap& map, const Eigen::MatrixXd& pts);

/// <z(x), z(y)>; symmetric, bounded by 2 in absolute value.
double approx_kernel(const FeatureMap& map, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y);

}  // namespace rfpca
