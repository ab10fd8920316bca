#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rfpca/batch.hpp"
#include "rfpca/model.hpp"

namespace rfpca {

/// Schedule and sizing for the streaming subspace learner.
///
/// The step size follows a three-phase schedule driven by the eigengap of
/// the feature covariance: a flat warm-up for warmup_steps, a flat middle
/// phase for mid_steps, then a 1/t decay. The scale constants are order-of-
/// magnitude knobs; the learner's convergence is insensitive to constant
/// factors in [0.5, 2].
struct OjaConfig {
  int k = 1;
  long warmup_steps = 0;  ///< 0 = resolve a default at run time
  long mid_steps = 0;     ///< 0 = resolve a default at run time
  double warm_scale = 1.0;
  double mid_scale = 1.0;
  double decay_scale = 1.0;
  /// Estimated lambda_k - lambda_{k+1} of the feature covariance. When <= 0
  /// it is estimated from the covariance accumulated over the warm-up phase.
  double gap_estimate = 0.0;
  std::uint64_t seed = 0;
  /// Trailing-buffer length for the Rayleigh quotients reported by snapshots.
  long rayleigh_window = 1000;
  /// Expected stream length; 0 = unknown. Used only to cap schedule defaults.
  long horizon = 0;
};

/// Orthonormal iterate of the streaming learner.
struct OjaState {
  Eigen::MatrixXd basis;  ///< m x k, orthonormal columns after every step
  long step = 0;
  long skipped = 0;  ///< non-finite samples rejected
};

/// Orthonormalized Gaussian initialization; deterministic given seed.
OjaState init_oja(int m, int k, std::uint64_t seed);

/// Step size at step t (1-based). Requires a fully resolved config
/// (gap_estimate > 0):
///   warm_scale  / (gap * T0)        for 1 <= t <= T0,
///   mid_scale   / (gap^2 * T1)      for T0 < t <= T0 + T1,
///   decay_scale / (gap * (t - T0))  for t > T0 + T1.
double learning_rate(const OjaConfig& config, long t);

/// One stochastic update: basis <- orthonormalize(basis + eta z (z^T basis)).
/// The rank-1 structure is exploited (cost O(mk + mk^2)); z z^T is never
/// materialized. Non-finite samples leave the basis untouched and are
/// counted in state.skipped.
void oja_step(OjaState& state, const Eigen::VectorXd& z, double eta);

/// Incremental driver around oja_step: resolves schedule defaults, estimates
/// the eigengap during warm-up when it was not supplied, and keeps the
/// trailing sample buffer used to report Rayleigh quotients.
class OjaRunner {
 public:
  OjaRunner(int feature_dim, const OjaConfig& config);

  void consume(const Eigen::VectorXd& z);

  /// Current model; columns reordered so Rayleigh quotients are
  /// non-increasing. Flagged incomplete while still inside warm-up.
  SubspaceModel snapshot() const;

  const OjaState& state() const { return state_; }
  long warmup_steps() const { return warmup_steps_; }
  long mid_steps() const { return mid_steps_; }
  /// Gap in effect (the estimate once warm-up has resolved it).
  double gap() const { return gap_; }

 private:
  void finish_warmup();

  OjaConfig config_;
  int feature_dim_;
  OjaState state_;
  long warmup_steps_ = 0;
  long mid_steps_ = 0;
  double gap_ = 0.0;
  bool gap_resolved_ = false;
  CovarianceAccumulator warmup_cov_;
  std::vector<Eigen::VectorXd> trailing_;
  long trailing_next_ = 0;
};

/// Consumes the whole stream and returns the final model.
/// Throws std::invalid_argument on an empty stream.
SubspaceModel run_oja(VectorStream& stream, const OjaConfig& config);

}  // namespace rfpca
