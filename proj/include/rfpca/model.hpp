#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

namespace rfpca {

struct LearnerMeta {
  std::string learner;
  long samples = 0;       ///< stream/sample count consumed
  int feature_dim = 0;    ///< m
  int rank = 0;           ///< requested k
  std::uint64_t seed = 0;
  bool incomplete = false;      ///< stream ended before the warm-up finished
  bool rank_deficient = false;  ///< fewer usable directions than requested
  long skipped = 0;             ///< non-finite samples rejected
};

/// Rank-k subspace over feature space: orthonormal basis plus per-direction
/// Rayleigh quotients (non-increasing). Common output of the streaming and
/// batch feature-space learners.
struct SubspaceModel {
  Eigen::MatrixXd basis;     ///< feature_dim x k_effective
  Eigen::VectorXd rayleigh;  ///< length k_effective
  LearnerMeta meta;

  int effective_rank() const { return static_cast<int>(basis.cols()); }
};

/// Pull-based stream of fixed-dimension vectors.
class VectorStream {
 public:
  virtual ~VectorStream() = default;
  virtual std::optional<Eigen::VectorXd> next() = 0;
  virtual int dim() const = 0;
  /// Total number of vectors this stream will yield, or -1 if unknown.
  virtual long size_hint() const { return -1; }
};

}  // namespace rfpca
