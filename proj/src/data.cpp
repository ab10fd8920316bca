#include "rfpca/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rfpca/common.hpp"
#include "rfpca/eigs.hpp"

namespace rfpca {

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path,
                          std::streamoff offset) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (in.gcount() != 4) {
    throw FormatError(path + ": truncated header at byte offset " +
                      std::to_string(offset));
  }
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

std::string basename_of(const std::string& path) {
  const auto pos = path.find_last_of("/\\");
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream in(images_path, std::ios::binary);
  if (!in) throw FormatError(images_path + ": cannot open");

  const std::uint32_t magic = read_be_u32(in, images_path, 0);
  if (magic != 0x00000803u) {
    throw FormatError(images_path + ": bad idx image magic at byte offset 0");
  }
  const std::uint32_t n = read_be_u32(in, images_path, 4);
  const std::uint32_t rows = read_be_u32(in, images_path, 8);
  const std::uint32_t cols = read_be_u32(in, images_path, 12);
  if (n == 0 || rows == 0 || cols == 0) {
    throw FormatError(images_path + ": empty idx dimensions in header");
  }
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(dim);

  Dataset dataset;
  dataset.name = basename_of(images_path);
  dataset.scale = 1.0 / 255.0;
  dataset.points.resize(n, static_cast<Eigen::Index>(dim));
  for (std::uint32_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
    if (in.gcount() != static_cast<std::streamsize>(dim)) {
      throw FormatError(images_path + ": truncated pixel data at byte offset " +
                        std::to_string(16 + static_cast<std::size_t>(i) * dim +
                                       static_cast<std::size_t>(in.gcount())));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      dataset.points(i, static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
    }
  }

  if (!labels_path.empty()) {
    std::ifstream lin(labels_path, std::ios::binary);
    if (!lin) throw FormatError(labels_path + ": cannot open");
    const std::uint32_t lmagic = read_be_u32(lin, labels_path, 0);
    if (lmagic != 0x00000801u) {
      throw FormatError(labels_path + ": bad idx label magic at byte offset 0");
    }
    const std::uint32_t ln = read_be_u32(lin, labels_path, 4);
    if (ln != n) {
      throw FormatError(labels_path + ": label count " + std::to_string(ln) +
                        " does not match image count " + std::to_string(n));
    }
  }
  return dataset;
}

Dataset load_delimited(const std::string& path, char delimiter, bool has_header) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");

  Dataset dataset;
  dataset.name = basename_of(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (has_header && line_no == 1) {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, delimiter)) dataset.column_names.push_back(cell);
      width = static_cast<Eigen::Index>(dataset.column_names.size());
      continue;
    }
    std::vector<double> row;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (;;) {
      const char* cell_end = std::find(ptr, end, delimiter);
      double value = 0.0;
      const auto [parsed, ec] = std::from_chars(ptr, cell_end, value);
      if (ec != std::errc{} || parsed != cell_end || !std::isfinite(value)) {
        throw FormatError(path + ": non-numeric cell at line " +
                          std::to_string(line_no));
      }
      row.push_back(value);
      if (cell_end == end) break;
      ptr = cell_end + 1;
    }
    if (width >= 0 && static_cast<Eigen::Index>(row.size()) != width) {
      throw FormatError(path + ": ragged row at line " + std::to_string(line_no));
    }
    width = static_cast<Eigen::Index>(row.size());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": no data rows");

  dataset.points.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < width; ++j) {
      dataset.points(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return dataset;
}

void save_delimited(const Dataset& dataset, const std::string& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  if (!dataset.column_names.empty()) {
    for (std::size_t j = 0; j < dataset.column_names.size(); ++j) {
      if (j) out << delimiter;
      out << dataset.column_names[j];
    }
    out << '\n';
  }
  char buf[32];
  for (Eigen::Index i = 0; i < dataset.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < dataset.points.cols(); ++j) {
      if (j) out << delimiter;
      std::snprintf(buf, sizeof buf, "%.17g", dataset.points(i, j));
      out << buf;
    }
    out << '\n';
  }
}

SyntheticDataset synth_gaussian_spectrum(int d, long n,
                                         const Eigen::VectorXd& spectrum,
                                         std::uint64_t seed) {
  if (d < 1 || n < 1) throw std::invalid_argument("synth: need d, n >= 1");
  if (spectrum.size() != d) {
    throw std::invalid_argument("synth: spectrum length must equal d");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (spectrum[i] < 0.0 || !std::isfinite(spectrum[i])) {
      throw std::invalid_argument("synth: spectrum entries must be >= 0");
    }
    if (i > 0 && spectrum[i] > spectrum[i - 1]) {
      throw std::invalid_argument("synth: spectrum must be non-increasing");
    }
  }

  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();

  SyntheticDataset synthetic;
  synthetic.rotation = orthonormalize(g);  // Haar-distributed orthogonal
  synthetic.spectrum = spectrum;
  synthetic.data.name = "synthetic";
  synthetic.data.points.resize(n, d);

  const Eigen::VectorXd scales = spectrum.cwiseSqrt();
  Eigen::VectorXd sample(d);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) sample[j] = scales[j] * rng.gaussian();
    synthetic.data.points.row(i) = (synthetic.rotation * sample).transpose();
  }
  return synthetic;
}

DataSplit split(const Dataset& dataset, const SplitSizes& sizes, std::uint64_t seed) {
  if (sizes.train < 0 || sizes.tune < 0 || sizes.test < 0) {
    throw std::invalid_argument("split: negative size");
  }
  if (sizes.train + sizes.tune + sizes.test > dataset.size()) {
    throw std::invalid_argument(
        "split: sizes " + std::to_string(sizes.train) + "+" +
        std::to_string(sizes.tune) + "+" + std::to_string(sizes.test) +
        " oversubscribe " + std::to_string(dataset.size()) + " points");
  }
  std::vector<long> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  auto take = [&](long offset, long count, const char* tag) {
    Dataset part;
    part.name = dataset.name.empty() ? tag : dataset.name + ":" + tag;
    part.scale = dataset.scale;
    part.offset = dataset.offset;
    part.column_names = dataset.column_names;
    part.points.resize(count, dataset.dim());
    for (long i = 0; i < count; ++i) {
      part.points.row(i) = dataset.points.row(order[static_cast<std::size_t>(offset + i)]);
    }
    return part;
  };
  DataSplit result;
  result.train = take(0, sizes.train, "train");
  result.tune = take(sizes.train, sizes.tune, "tune");
  result.test = take(sizes.train + sizes.tune, sizes.test, "test");
  return result;
}

PointStream::PointStream(const Dataset& dataset, std::uint64_t seed,
                         StreamMode mode, long draws)
    : dataset_(&dataset), mode_(mode), draws_(draws), rng_(seed) {
  if (dataset.size() < 1) throw std::invalid_argument("stream: empty dataset");
  if (mode_ == StreamMode::single_pass) {
    order_.resize(static_cast<std::size_t>(dataset.size()));
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_.begin(), order_.end());
  }
}

std::optional<Eigen::VectorXd> PointStream::next() {
  if (mode_ == StreamMode::single_pass) {
    if (cursor_ >= static_cast<long>(order_.size())) return std::nullopt;
    return dataset_->points.row(order_[static_cast<std::size_t>(cursor_++)]).transpose();
  }
  if (draws_ > 0 && cursor_ >= draws_) return std::nullopt;
  ++cursor_;
  const auto idx = rng_.uniform_index(static_cast<std::uint64_t>(dataset_->size()));
  return dataset_->points.row(static_cast<Eigen::Index>(idx)).transpose();
}

long PointStream::size_hint() const {
  if (mode_ == StreamMode::single_pass) return dataset_->size();
  return draws_ > 0 ? draws_ : -1;
}

FeatureStream::FeatureStream(const Dataset& dataset, const FeatureMap& map,
                             std::uint64_t seed, StreamMode mode, long draws)
    : points_(dataset, seed, mode, draws), map_(&map) {
  if (dataset.dim() != map.spec.dim) {
    throw std::invalid_argument("FeatureStream: dataset/feature-map dimension mismatch");
  }
}

std::optional<Eigen::VectorXd> FeatureStream::next() {
  auto x = points_.next();
  if (!x) return std::nullopt;
  return transform(*map_, *x);
}

}  // namespace rfpca
