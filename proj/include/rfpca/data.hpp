#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfpca/kernels.hpp"
#include "rfpca/model.hpp"
#include "rfpca/rng.hpp"

namespace rfpca {

struct Dataset {
  Eigen::MatrixXd points;  ///< n x d, all entries finite
  std::string name;
  /// Normalization applied at load time: stored = raw * scale + offset.
  double scale = 1.0;
  double offset = 0.0;
  std::vector<std::string> column_names;  ///< delimited header, if any

  long size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Reads an idx image file (big-endian, magic 0x00000803), scaling pixels to
/// [0, 1]. If labels_path is given the label file (magic 0x00000801) is
/// validated against the image count. Malformed input raises FormatError
/// with the offending byte offset.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path = "");

/// Reads a rectangular numeric table. Ragged rows or non-numeric cells raise
/// FormatError with the line number.
Dataset load_delimited(const std::string& path, char delimiter = ',',
                       bool has_header = false);

/// Full-precision writer; load_delimited reproduces the values exactly.
void save_delimited(const Dataset& dataset, const std::string& path,
                    char delimiter = ',');

/// Gaussian dataset with a known covariance: rows are i.i.d.
/// N(0, Q diag(spectrum) Q^T) for a seeded random orthogonal Q. The rotation
/// is recorded so tests know the true top-k subspace.
struct SyntheticDataset {
  Dataset data;
  Eigen::MatrixXd rotation;  ///< d x d orthogonal (Q)
  Eigen::VectorXd spectrum;  ///< requested covariance eigenvalues

  Eigen::MatrixXd top_subspace(int k) const { return rotation.leftCols(k); }
};

/// spectrum must be non-increasing with non-negative entries (zeros allowed;
/// negative entries are rejected).
SyntheticDataset synth_gaussian_spectrum(int d, long n,
                                         const Eigen::VectorXd& spectrum,
                                         std::uint64_t seed);

struct SplitSizes {
  long train = 0;
  long tune = 0;
  long test = 0;
};

struct DataSplit {
  Dataset train;
  Dataset tune;
  Dataset test;
};

/// Disjoint seeded-permutation split; sizes must not oversubscribe the
/// dataset.
DataSplit split(const Dataset& dataset, const SplitSizes& sizes,
                std::uint64_t seed);

enum class StreamMode { single_pass, with_replacement };

/// Seeded stream over dataset rows. single_pass yields every row exactly
/// once in a seeded-permutation order; with_replacement draws uniformly for
/// `draws` steps (0 = unbounded). Single consumer.
class PointStream {
 public:
  PointStream(const Dataset& dataset, std::uint64_t seed, StreamMode mode,
              long draws = 0);

  std::optional<Eigen::VectorXd> next();
  long size_hint() const;
  int dim() const { return dataset_->dim(); }

 private:
  const Dataset* dataset_;
  StreamMode mode_;
  long draws_;
  long cursor_ = 0;
  std::vector<long> order_;  // single_pass permutation
  Rng rng_;
};

/// PointStream composed with a feature map: yields z(x_t) in stream order.
class FeatureStream : public VectorStream {
 public:
  FeatureStream(const Dataset& dataset, const FeatureMap& map,
                std::uint64_t seed, StreamMode mode, long draws = 0);

  std::optional<Eigen::VectorXd> next() override;
  int dim() const override { return map_->count; }
  long size_hint() const override { return points_.size_hint(); }

 private:
  PointStream points_;
  const FeatureMap* map_;
};

}  // namespace rfpca
