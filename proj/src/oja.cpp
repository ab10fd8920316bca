#include "rfpca/oja.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rfpca/eigs.hpp"
#include "rfpca/rng.hpp"

namespace rfpca {

namespace {
// Gap floor keeps the mid/decay step sizes finite on (near-)gapless streams,
// where the schedule has no guarantee anyway.
constexpr double kGapFloor = 1e-6;
// Warm-up length when neither warmup_steps nor the horizon pins one down.
constexpr long kDefaultWarmup = 1000;
constexpr long kMinWarmup = 200;
constexpr long kDefaultMidCap = 100000;

long ceil_inv_gap_sq(double gap) {
  const double v = std::ceil(1.0 / (gap * gap));
  if (v > static_cast<double>(std::numeric_limits<long>::max() / 2)) {
    return std::numeric_limits<long>::max() / 2;
  }
  return static_cast<long>(v);
}
}  // namespace

OjaState init_oja(int m, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("init_oja: k must be >= 1");
  if (k > m) throw std::invalid_argument("init_oja: k exceeds feature dimension");
  Rng rng(seed);
  Eigen::MatrixXd g(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = rng.gaussian();
  OjaState state;
  state.basis = orthonormalize(g);
  return state;
}

double learning_rate(const OjaConfig& c, long t) {
  if (t < 1) throw std::invalid_argument("learning_rate: t must be >= 1");
  if (!(c.gap_estimate > 0.0)) {
    throw std::invalid_argument("learning_rate: gap_estimate must be positive");
  }
  const double gap = c.gap_estimate;
  if (t <= c.warmup_steps) {
    return c.warm_scale / (gap * static_cast<double>(c.warmup_steps));
  }
  if (t <= c.warmup_steps + c.mid_steps) {
    return c.mid_scale / (gap * gap * static_cast<double>(c.mid_steps));
  }
  return c.decay_scale / (gap * static_cast<double>(t - c.warmup_steps));
}

void oja_step(OjaState& state, const Eigen::VectorXd& z, double eta) {
  if (z.size() != state.basis.rows()) {
    throw std::invalid_argument("oja_step: sample dimension mismatch");
  }
  if (!z.allFinite()) {
    ++state.skipped;
    return;
  }
  ++state.step;
  if (eta == 0.0 || z.isZero(0.0)) return;  // null update, basis unchanged
  const Eigen::VectorXd proj = state.basis.transpose() * z;  // k
  state.basis = orthonormalize(state.basis + eta * z * proj.transpose());
}

OjaRunner::OjaRunner(int feature_dim, const OjaConfig& config)
    : config_(config), feature_dim_(feature_dim) {
  if (config.k > feature_dim) {
    throw std::invalid_argument("OjaRunner: k exceeds feature dimension");
  }
  if (config.rayleigh_window < 1) {
    throw std::invalid_argument("OjaRunner: rayleigh_window must be >= 1");
  }
  state_ = init_oja(feature_dim, config.k, config.seed);

  const long cap = config_.horizon > 0 ? std::max<long>(1, config_.horizon / 4)
                                       : std::numeric_limits<long>::max();
  gap_resolved_ = config_.gap_estimate > 0.0;
  gap_ = gap_resolved_ ? config_.gap_estimate : 0.0;

  if (config_.warmup_steps > 0) {
    warmup_steps_ = config_.warmup_steps;
  } else if (gap_resolved_) {
    const long shaped = 4L * config_.k * ceil_inv_gap_sq(gap_);
    warmup_steps_ = std::max(kMinWarmup, std::min(shaped, cap));
  } else {
    warmup_steps_ = std::max(kMinWarmup, std::min(kDefaultWarmup, cap));
  }
  if (config_.mid_steps > 0) {
    mid_steps_ = config_.mid_steps;
  } else if (gap_resolved_) {
    mid_steps_ = std::max(1L, std::min(ceil_inv_gap_sq(gap_), cap));
  }  // else resolved at the end of warm-up, once the gap is known
  if (!gap_resolved_) warmup_cov_ = CovarianceAccumulator(feature_dim);
}

void OjaRunner::finish_warmup() {
  if (!gap_resolved_) {
    const Eigen::VectorXd values = symmetric_eigenvalues(warmup_cov_.mean());
    double gap = 0.0;
    if (values.size() > config_.k) gap = values[config_.k - 1] - values[config_.k];
    gap_ = std::max(gap, kGapFloor);
    gap_resolved_ = true;
    warmup_cov_ = CovarianceAccumulator();  // release the m x m buffer
    if (mid_steps_ == 0) {
      const long cap = config_.horizon > 0
                           ? std::max<long>(1, config_.horizon / 4)
                           : kDefaultMidCap;
      mid_steps_ = std::max(1L, std::min(ceil_inv_gap_sq(gap_), cap));
    }
  }
}

void OjaRunner::consume(const Eigen::VectorXd& z) {
  const long t = state_.step + 1;
  double eta;
  if (t <= warmup_steps_ && !gap_resolved_) {
    // Gap still unknown: warm up at the flat rate with a provisional unit
    // gap while the covariance estimate builds.
    eta = config_.warm_scale / static_cast<double>(warmup_steps_);
    warmup_cov_.accumulate(z);
  } else {
    OjaConfig resolved = config_;
    resolved.warmup_steps = warmup_steps_;
    resolved.mid_steps = mid_steps_;
    resolved.gap_estimate = gap_;
    eta = learning_rate(resolved, t);
  }
  const long before = state_.step;
  oja_step(state_, z, eta);
  if (state_.step == before) return;  // sample was skipped

  if (static_cast<long>(trailing_.size()) < config_.rayleigh_window) {
    trailing_.push_back(z);
  } else {
    trailing_[static_cast<std::size_t>(trailing_next_)] = z;
    trailing_next_ = (trailing_next_ + 1) % config_.rayleigh_window;
  }
  if (state_.step == warmup_steps_) finish_warmup();
}

SubspaceModel OjaRunner::snapshot() const {
  SubspaceModel model;
  model.meta.learner = "rf_oja";
  model.meta.samples = state_.step;
  model.meta.feature_dim = feature_dim_;
  model.meta.rank = config_.k;
  model.meta.seed = config_.seed;
  model.meta.skipped = state_.skipped;
  model.meta.incomplete = state_.step < warmup_steps_;

  Eigen::VectorXd rayleigh = Eigen::VectorXd::Zero(config_.k);
  if (!trailing_.empty()) {
    for (const Eigen::VectorXd& z : trailing_) {
      const Eigen::VectorXd w = state_.basis.transpose() * z;
      rayleigh += w.cwiseProduct(w);
    }
    rayleigh /= static_cast<double>(trailing_.size());
  }
  // Report directions ordered by captured variance.
  std::vector<int> order(static_cast<std::size_t>(config_.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rayleigh[a] > rayleigh[b]; });
  model.basis.resize(feature_dim_, config_.k);
  model.rayleigh.resize(config_.k);
  for (int j = 0; j < config_.k; ++j) {
    model.basis.col(j) = state_.basis.col(order[static_cast<std::size_t>(j)]);
    model.rayleigh[j] = rayleigh[order[static_cast<std::size_t>(j)]];
  }
  return model;
}

SubspaceModel run_oja(VectorStream& stream, const OjaConfig& config) {
  OjaConfig cfg = config;
  if (cfg.horizon == 0) cfg.horizon = std::max<long>(stream.size_hint(), 0);
  OjaRunner runner(stream.dim(), cfg);
  long yielded = 0;
  while (auto z = stream.next()) {
    runner.consume(*z);
    ++yielded;
  }
  if (yielded == 0) throw std::invalid_argument("run_oja: empty stream");
  return runner.snapshot();
}

}  // namespace rfpca
