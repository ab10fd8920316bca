#include "rfpca/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rfpca/batch.hpp"
#include "rfpca/common.hpp"
#include "rfpca/evaluate.hpp"

namespace rfpca {

namespace {

using nlohmann::json;
using steady = std::chrono::steady_clock;

double seconds_since(steady::time_point t0) {
  return std::chrono::duration<double>(steady::now() - t0).count();
}

// Sub-seed stream labels, so e.g. changing m (feature sampling) never
// perturbs the data order.
enum SeedStream : std::uint64_t {
  kFeatureSeed = 0,
  kShuffleSeed = 1,
  kOjaSeed = 2,
  kNystromSeed = 3,
  kDiagnoseSeed = 4,
};

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: expected an object at \"" + where + "\"");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key \"" + where + key + "\"");
    }
  }
}

template <class T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) {
    throw std::invalid_argument("config: missing required key \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: bad type for key \"" + key + "\"");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: bad type for key \"" + key + "\"");
  }
}

DatasetConfig dataset_from_json(const json& j) {
  DatasetConfig d;
  const std::string kind = require<std::string>(j, "kind");
  if (kind == "idx") {
    reject_unknown_keys(j, {"kind", "images", "labels"}, "dataset.");
    d.kind = DatasetConfig::Kind::idx;
    d.images = require<std::string>(j, "images");
    d.labels = get_or<std::string>(j, "labels", "");
  } else if (kind == "delimited") {
    reject_unknown_keys(j, {"kind", "path", "delimiter", "header"}, "dataset.");
    d.kind = DatasetConfig::Kind::delimited;
    d.path = require<std::string>(j, "path");
    const std::string delim = get_or<std::string>(j, "delimiter", ",");
    if (delim.size() != 1) {
      throw std::invalid_argument("config: dataset.delimiter must be one character");
    }
    d.delimiter = delim[0];
    d.has_header = get_or<bool>(j, "header", false);
  } else if (kind == "synthetic") {
    reject_unknown_keys(j, {"kind", "dim", "n", "alpha", "spectrum", "seed"},
                        "dataset.");
    d.kind = DatasetConfig::Kind::synthetic;
    d.synth_dim = get_or<int>(j, "dim", d.synth_dim);
    d.synth_n = get_or<long>(j, "n", d.synth_n);
    d.synth_alpha = get_or<double>(j, "alpha", d.synth_alpha);
    d.synth_spectrum = get_or<std::vector<double>>(j, "spectrum", {});
    d.synth_seed = get_or<std::uint64_t>(j, "seed", 0);
  } else {
    throw std::invalid_argument("config: dataset.kind must be idx, delimited, or synthetic");
  }
  return d;
}

OjaConfig oja_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"warmup_steps", "mid_steps", "warm_scale", "mid_scale",
                       "decay_scale", "gap_estimate", "rayleigh_window"},
                      "oja.");
  OjaConfig o;
  o.warmup_steps = get_or<long>(j, "warmup_steps", 0);
  o.mid_steps = get_or<long>(j, "mid_steps", 0);
  o.warm_scale = get_or<double>(j, "warm_scale", 1.0);
  o.mid_scale = get_or<double>(j, "mid_scale", 1.0);
  o.decay_scale = get_or<double>(j, "decay_scale", 1.0);
  o.gap_estimate = get_or<double>(j, "gap_estimate", 0.0);
  o.rayleigh_window = get_or<long>(j, "rayleigh_window", 1000);
  return o;
}

const std::set<std::string> kKnownLearners{"rf_oja", "rf_erm", "exact_erm", "nystrom"};

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  reject_unknown_keys(
      j, {"dataset", "kernel", "features", "rank", "learners",
          "nystrom_landmarks", "checkpoints", "eval_size", "seeds", "num_seeds",
          "split", "stream", "oja", "output", "exact_erm_cap", "workers",
          "diagnose"},
      "");
  ExperimentConfig c;
  c.dataset = dataset_from_json(require<json>(j, "dataset"));

  const json kernel = require<json>(j, "kernel");
  reject_unknown_keys(kernel, {"family", "bandwidth", "bandwidth_sq"}, "kernel.");
  c.kernel_family = family_from_name(require<std::string>(kernel, "family"));
  if (kernel.contains("bandwidth") == kernel.contains("bandwidth_sq")) {
    throw std::invalid_argument(
        "config: kernel needs exactly one of \"bandwidth\" or \"bandwidth_sq\"");
  }
  c.bandwidth = kernel.contains("bandwidth")
                    ? require<double>(kernel, "bandwidth")
                    : std::sqrt(require<double>(kernel, "bandwidth_sq"));
  if (!(c.bandwidth > 0.0) || !std::isfinite(c.bandwidth)) {
    throw std::invalid_argument("config: kernel bandwidth must be positive");
  }

  c.features = require<int>(j, "features");
  c.rank = require<int>(j, "rank");
  if (c.features < 1) throw std::invalid_argument("config: features must be >= 1");
  if (c.rank < 1 || c.rank > c.features) {
    throw std::invalid_argument("config: need 1 <= rank <= features");
  }

  c.learners = get_or<std::vector<std::string>>(j, "learners", c.learners);
  if (c.learners.empty()) throw std::invalid_argument("config: learners is empty");
  for (const auto& name : c.learners) {
    if (!kKnownLearners.count(name)) {
      throw std::invalid_argument("config: unknown learner \"" + name + "\"");
    }
  }

  c.nystrom_landmarks = get_or<int>(j, "nystrom_landmarks", c.nystrom_landmarks);
  c.checkpoints = get_or<std::vector<long>>(j, "checkpoints", c.checkpoints);
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
    if (c.checkpoints[i] < 1 ||
        (i > 0 && c.checkpoints[i] <= c.checkpoints[i - 1])) {
      throw std::invalid_argument(
          "config: \"checkpoints\" must be strictly increasing and positive");
    }
  }
  if (c.checkpoints.empty()) throw std::invalid_argument("config: checkpoints is empty");
  c.eval_size = get_or<long>(j, "eval_size", c.eval_size);

  if (j.contains("seeds") && j.contains("num_seeds")) {
    throw std::invalid_argument("config: give \"seeds\" or \"num_seeds\", not both");
  }
  if (j.contains("num_seeds")) {
    const int n = require<int>(j, "num_seeds");
    if (n < 1) throw std::invalid_argument("config: num_seeds must be >= 1");
    c.seeds.clear();
    for (int s = 1; s <= n; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  } else {
    c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", c.seeds);
  }
  if (c.seeds.empty()) throw std::invalid_argument("config: seeds is empty");

  if (j.contains("split")) {
    const json split = j.at("split");
    reject_unknown_keys(split, {"train", "tune", "test", "seed"}, "split.");
    c.split_sizes.train = get_or<long>(split, "train", c.split_sizes.train);
    c.split_sizes.tune = get_or<long>(split, "tune", c.split_sizes.tune);
    c.split_sizes.test = get_or<long>(split, "test", c.split_sizes.test);
    c.split_seed = get_or<std::uint64_t>(split, "seed", 0);
  }

  const std::string stream = get_or<std::string>(j, "stream", "single_pass");
  if (stream == "single_pass") {
    c.stream_mode = StreamMode::single_pass;
  } else if (stream == "with_replacement") {
    c.stream_mode = StreamMode::with_replacement;
  } else {
    throw std::invalid_argument(
        "config: stream must be single_pass or with_replacement");
  }
  if (c.stream_mode == StreamMode::single_pass &&
      c.checkpoints.back() > c.split_sizes.train) {
    throw std::invalid_argument(
        "config: last checkpoint exceeds the train split under single_pass");
  }

  if (j.contains("oja")) c.oja = oja_from_json(j.at("oja"));
  c.output = get_or<std::string>(j, "output", c.output);
  c.exact_erm_cap = get_or<long>(j, "exact_erm_cap", c.exact_erm_cap);
  c.workers = get_or<int>(j, "workers", 1);
  if (c.workers < 1) throw std::invalid_argument("config: workers must be >= 1");

  if (j.contains("diagnose")) {
    const json d = j.at("diagnose");
    reject_unknown_keys(d, {"probe_features", "subsample"}, "diagnose.");
    c.diagnose.probe_features = get_or<int>(d, "probe_features", c.diagnose.probe_features);
    c.diagnose.subsample = get_or<long>(d, "subsample", c.diagnose.subsample);
  }
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json effective_config_json(const ExperimentConfig& c) {
  json dataset;
  switch (c.dataset.kind) {
    case DatasetConfig::Kind::idx:
      dataset = {{"kind", "idx"}, {"images", c.dataset.images}, {"labels", c.dataset.labels}};
      break;
    case DatasetConfig::Kind::delimited:
      dataset = {{"kind", "delimited"},
                 {"path", c.dataset.path},
                 {"delimiter", std::string(1, c.dataset.delimiter)},
                 {"header", c.dataset.has_header}};
      break;
    case DatasetConfig::Kind::synthetic:
      dataset = {{"kind", "synthetic"},
                 {"dim", c.dataset.synth_dim},
                 {"n", c.dataset.synth_n},
                 {"alpha", c.dataset.synth_alpha},
                 {"spectrum", c.dataset.synth_spectrum},
                 {"seed", c.dataset.synth_seed}};
      break;
  }
  return json{
      {"dataset", dataset},
      {"kernel",
       {{"family", family_name(c.kernel_family)}, {"bandwidth", c.bandwidth}}},
      {"features", c.features},
      {"rank", c.rank},
      {"learners", c.learners},
      {"nystrom_landmarks", c.nystrom_landmarks},
      {"checkpoints", c.checkpoints},
      {"eval_size", c.eval_size},
      {"seeds", c.seeds},
      {"split",
       {{"train", c.split_sizes.train},
        {"tune", c.split_sizes.tune},
        {"test", c.split_sizes.test},
        {"seed", c.split_seed}}},
      {"stream", c.stream_mode == StreamMode::single_pass ? "single_pass"
                                                          : "with_replacement"},
      {"oja",
       {{"warmup_steps", c.oja.warmup_steps},
        {"mid_steps", c.oja.mid_steps},
        {"warm_scale", c.oja.warm_scale},
        {"mid_scale", c.oja.mid_scale},
        {"decay_scale", c.oja.decay_scale},
        {"gap_estimate", c.oja.gap_estimate},
        {"rayleigh_window", c.oja.rayleigh_window}}},
      {"output", c.output},
      {"exact_erm_cap", c.exact_erm_cap},
      {"workers", c.workers},
      {"diagnose",
       {{"probe_features", c.diagnose.probe_features},
        {"subsample", c.diagnose.subsample}}},
  };
}

Dataset load_dataset(const DatasetConfig& config) {
  switch (config.kind) {
    case DatasetConfig::Kind::idx:
      return load_idx(config.images, config.labels);
    case DatasetConfig::Kind::delimited:
      return load_delimited(config.path, config.delimiter, config.has_header);
    case DatasetConfig::Kind::synthetic: {
      Eigen::VectorXd spectrum(config.synth_dim);
      if (!config.synth_spectrum.empty()) {
        if (static_cast<int>(config.synth_spectrum.size()) != config.synth_dim) {
          throw std::invalid_argument("config: dataset.spectrum length must equal dim");
        }
        for (int i = 0; i < config.synth_dim; ++i) spectrum[i] = config.synth_spectrum[i];
      } else {
        for (int i = 0; i < config.synth_dim; ++i) {
          spectrum[i] = std::pow(config.synth_alpha, i + 1);
        }
      }
      return synth_gaussian_spectrum(config.synth_dim, config.synth_n, spectrum,
                                     config.synth_seed)
          .data;
    }
  }
  throw std::logic_error("unreachable dataset kind");
}

namespace {

struct CellOutput {
  std::vector<RunRecord> records;
  bool failed = false;
};

// All per-seed work: one feature map, one eval set, one pass over the
// training stream with checkpoint snapshots for every requested learner.
CellOutput run_seed(const ExperimentConfig& config, const KernelSpec& spec,
                    const Dataset& train, const Eigen::MatrixXd& eval_points,
                    const Eigen::MatrixXd& eval_kernel, std::uint64_t seed,
                    const RunHooks& hooks) {
  CellOutput out;
  const long horizon = config.checkpoints.back();
  const bool want_oja = std::count(config.learners.begin(), config.learners.end(), "rf_oja");
  const bool want_rf_erm = std::count(config.learners.begin(), config.learners.end(), "rf_erm");
  const bool want_exact = std::count(config.learners.begin(), config.learners.end(), "exact_erm");
  const bool want_nystrom = std::count(config.learners.begin(), config.learners.end(), "nystrom");

  FeatureMap map = sample_feature_map(spec, config.features, derive_seed(seed, kFeatureSeed));
  EvalSet eval = make_eval_set(eval_points, transform_matrix(map, eval_points), eval_kernel);

  PointStream stream(train, derive_seed(seed, kShuffleSeed), config.stream_mode,
                     config.stream_mode == StreamMode::with_replacement ? horizon : 0);

  OjaConfig oja_cfg = config.oja;
  oja_cfg.k = config.rank;
  oja_cfg.seed = derive_seed(seed, kOjaSeed);
  oja_cfg.horizon = horizon;

  std::optional<OjaRunner> oja;
  if (want_oja) oja.emplace(config.features, oja_cfg);
  CovarianceAccumulator acc(config.features);
  Eigen::MatrixXd prefix;  // streamed raw points, for the kernel-matrix learners
  if (want_exact || want_nystrom) prefix.resize(horizon, train.dim());

  // Per-learner cumulative wall time; feature transforms are charged to each
  // feature-space consumer (each would pay them standalone).
  std::map<std::string, double> cost;
  std::map<std::string, bool> dead;
  auto fail_cell = [&](const std::string& learner, long n, const std::exception& e) {
    std::cerr << "[rfpca] cell failed: learner=" << learner << " seed=" << seed
              << " n=" << n << ": " << e.what() << "\n";
    dead[learner] = true;
    out.failed = true;
  };

  long consumed = 0;
  for (const long checkpoint : config.checkpoints) {
    while (consumed < checkpoint) {
      auto x = stream.next();
      if (!x) throw std::runtime_error("training stream exhausted before checkpoint");
      const auto t_feat = steady::now();
      const Eigen::VectorXd z = transform(map, *x);
      const double feat_cost = seconds_since(t_feat);
      if (want_oja && !dead["rf_oja"]) {
        const auto t0 = steady::now();
        oja->consume(z);
        cost["rf_oja"] += seconds_since(t0) + feat_cost;
      }
      if (want_rf_erm && !dead["rf_erm"]) {
        const auto t0 = steady::now();
        acc.accumulate(z);
        cost["rf_erm"] += seconds_since(t0) + feat_cost;
      }
      if (want_exact || want_nystrom) prefix.row(consumed) = x->transpose();
      ++consumed;
    }

    struct Snapshot {
      std::string learner;
      double objective;
      double gram_dev;
    };
    std::vector<Snapshot> snaps;
    const auto front = prefix.topRows(consumed);
    Eigen::MatrixXd cross;  // eval x prefix, shared by the kernel-matrix learners
    auto need_cross = [&]() -> const Eigen::MatrixXd& {
      if (cross.size() == 0) cross = cross_kernel(spec, eval_points, front);
      return cross;
    };

    if (want_oja && !dead["rf_oja"]) {
      try {
        const auto t0 = steady::now();
        SubspaceModel model = oja->snapshot();
        cost["rf_oja"] += seconds_since(t0);
        if (hooks.before_eval) hooks.before_eval();
        snaps.push_back({"rf_oja", evaluate_subspace(model, eval)});
      } catch (const std::exception& e) {
        fail_cell("rf_oja", checkpoint, e);
      }
    }
    if (want_rf_erm && !dead["rf_erm"]) {
      try {
        const auto t0 = steady::now();
        SubspaceModel model = rf_erm(acc, config.rank);
        cost["rf_erm"] += seconds_since(t0);
        if (hooks.before_eval) hooks.before_eval();
        snaps.push_back({"rf_erm", evaluate_subspace(model, eval)});
      } catch (const std::exception& e) {
        fail_cell("rf_erm", checkpoint, e);
      }
    }
    if (want_exact && !dead["exact_erm"]) {
      try {
        const auto t0 = steady::now();
        GramModel model = exact_erm(spec, front, config.rank, config.exact_erm_cap);
        cost["exact_erm"] += seconds_since(t0);
        if (hooks.before_eval) hooks.before_eval();
        snaps.push_back({"exact_erm", evaluate_gram(model, need_cross())});
      } catch (const std::exception& e) {
        fail_cell("exact_erm", checkpoint, e);
      }
    }
    if (want_nystrom && !dead["nystrom"]) {
      try {
        const int p = std::min<long>(config.nystrom_landmarks, consumed);
        const auto t0 = steady::now();
        GramModel model = nystrom_erm(spec, front, p, std::min(config.rank, p),
                                      derive_seed(seed, kNystromSeed));
        cost["nystrom"] += seconds_since(t0);
        if (hooks.before_eval) hooks.before_eval();
        snaps.push_back({"nystrom", evaluate_gram(model, need_cross())});
      } catch (const std::exception& e) {
        fail_cell("nystrom", checkpoint, e);
      }
    }

    for (Snapshot& snap : snaps) {
      snap.report.wall_time_s = cost[snap.learner];
      RunRecord rec;
      rec.learner = snap.learner;
      rec.seed = std::to_string(seed);
      rec.n_seen = checkpoint;
      rec.m = config.features;
      rec.k = config.rank;
      rec.objective = snap.report.objective;
      rec.gram_dev = snap.report.gram_dev;
      rec.wall_time_s = snap.report.wall_time_s;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Dataset& dataset, const RunHooks& hooks) {
  KernelSpec spec{config.kernel_family, config.bandwidth, dataset.dim()};
  validate(spec);

  const DataSplit parts = split(dataset, config.split_sizes, config.split_seed);
  if (config.stream_mode == StreamMode::single_pass &&
      config.checkpoints.back() > parts.train.size()) {
    throw std::invalid_argument("run_experiment: checkpoints exceed the train split");
  }
  const long n_eval = std::min(config.eval_size, parts.test.size());
  if (n_eval < 1) throw std::invalid_argument("run_experiment: empty eval set");
  const Eigen::MatrixXd eval_points = parts.test.points.topRows(n_eval);
  // The kernel matrix on the eval points is feature-seed independent; build
  // it once and share across seeds.
  const Eigen::MatrixXd eval_kernel = kernel_matrix(spec, eval_points);

  ExperimentResult result;
  std::vector<CellOutput> outputs(config.seeds.size());
  if (config.workers <= 1 || config.seeds.size() == 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      outputs[i] = run_seed(config, spec, parts.train, eval_points, eval_kernel,
                            config.seeds[i], hooks);
    }
  } else {
    std::mutex queue_mutex;
    std::size_t next = 0;
    auto worker = [&]() {
      for (;;) {
        std::size_t mine;
        {
          std::lock_guard<std::mutex> lock(queue_mutex);
          if (next >= config.seeds.size()) return;
          mine = next++;
        }
        outputs[mine] = run_seed(config, spec, parts.train, eval_points,
                                 eval_kernel, config.seeds[mine], hooks);
      }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(config.workers, static_cast<int>(config.seeds.size()));
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& out : outputs) {
    result.failed_cells += out.failed ? 1 : 0;
    for (auto& rec : out.records) result.records.push_back(std::move(rec));
  }

  // Aggregate rows: per (learner, checkpoint) mean and standard error.
  std::map<std::pair<std::string, long>, std::vector<const RunRecord*>> groups;
  for (const RunRecord& rec : result.records) {
    groups[{rec.learner, rec.n_seen}].push_back(&rec);
  }
  for (const auto& [key, rows] : groups) {
    auto stats = [&](auto field) {
      double mean = 0.0;
      for (const RunRecord* r : rows) mean += field(*r);
      mean /= static_cast<double>(rows.size());
      double var = 0.0;
      for (const RunRecord* r : rows) {
        const double d = field(*r) - mean;
        var += d * d;
      }
      const double se =
          rows.size() > 1
              ? std::sqrt(var / (static_cast<double>(rows.size()) - 1.0) /
                          static_cast<double>(rows.size()))
              : 0.0;
      return std::pair<double, double>{mean, se};
    };
    const auto [obj_mean, obj_se] = stats([](const RunRecord& r) { return r.objective; });
    const auto [dev_mean, dev_se] = stats([](const RunRecord& r) { return r.gram_dev; });
    const auto [t_mean, t_se] = stats([](const RunRecord& r) { return r.wall_time_s; });
    RunRecord mean_row{key.first, "mean", key.second, config.features,
                       config.rank, obj_mean, dev_mean, t_mean};
    RunRecord se_row{key.first, "stderr", key.second, config.features,
                     config.rank, obj_se, dev_se, t_se};
    result.aggregates.push_back(std::move(mean_row));
    result.aggregates.push_back(std::move(se_row));
  }
  return result;
}

void write_csv(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << "learner,seed,n_seen,m,k,objective,gram_deviation,wall_time_s\n";
  char buf[32];
  auto emit = [&](const RunRecord& rec) {
    out << rec.learner << ',' << rec.seed << ',' << rec.n_seen << ',' << rec.m
        << ',' << rec.k;
    for (const double v : {rec.objective, rec.gram_dev, rec.wall_time_s}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  };
  for (const RunRecord& rec : result.records) emit(rec);
  for (const RunRecord& rec : result.aggregates) emit(rec);
}

ExperimentResult run_experiment_to_csv(const ExperimentConfig& config,
                                       const Dataset& dataset,
                                       const RunHooks& hooks) {
  ExperimentResult result = run_experiment(config, dataset, hooks);
  write_csv(result, config.output);
  std::ofstream dump(config.output + ".effective.json");
  dump << effective_config_json(config).dump(2) << "\n";
  return result;
}

SpectrumDiagnostics run_diagnose(const ExperimentConfig& config,
                                 const Dataset& dataset) {
  KernelSpec spec{config.kernel_family, config.bandwidth, dataset.dim()};
  validate(spec);
  const long n = std::min<long>(config.diagnose.subsample, dataset.size());
  PointStream stream(dataset, derive_seed(config.split_seed, kDiagnoseSeed),
                     StreamMode::single_pass);
  Eigen::MatrixXd sub(n, dataset.dim());
  for (long i = 0; i < n; ++i) sub.row(i) = stream.next()->transpose();
  return fourth_moment_spectrum(spec, sub, config.diagnose.probe_features,
                                config.rank, config.features,
                                derive_seed(config.split_seed, kDiagnoseSeed + 1));
}

std::string diagnose_report(const ExperimentConfig& config,
                            const SpectrumDiagnostics& diag) {
  std::ostringstream os;
  os << "spectral-decay diagnostics (M=" << diag.probe_features
     << " probe features, k=" << diag.target_rank << ", m=" << diag.feature_budget
     << ")\n";
  const int show = static_cast<int>(std::min<Eigen::Index>(20, diag.variance_spectrum.size()));
  os << "top operator-variance eigenvalue estimates:\n";
  for (int i = 0; i < show; ++i) {
    os << "  lambda_" << (i + 1) << " = " << diag.variance_spectrum[i] << "\n";
  }
  os << "decay ratios lambda_{j+1}/lambda_j:";
  int shown = 0;
  double ratio_sum = 0.0;
  for (int i = 0; i + 1 < show && shown < 10; ++i) {
    if (diag.variance_spectrum[i] <= 0.0) break;
    const double r = diag.variance_spectrum[i + 1] / diag.variance_spectrum[i];
    os << ' ' << r;
    ratio_sum += r;
    ++shown;
  }
  if (shown > 0) os << "  (mean " << ratio_sum / shown << ")";
  os << "\nkernel eigengap at k: " << diag.spectral_gap << "\n";
  if (diag.moment_gap_ratio) {
    os << "B_k = " << *diag.moment_gap_ratio << "\n";
    os << "kappa = " << *diag.kappa << " at h = " << diag.kappa_argmin << "\n";
    // Informational: the feature count where kappa stops dominating the
    // 1/sqrt(n) sampling term at the configured train size.
    const double target = 1.0 / std::sqrt(static_cast<double>(
                                    std::max<long>(config.split_sizes.train, 1)));
    int budget = -1;
    for (int m = 2; m <= (1 << 24); m *= 2) {
      if (kappa_scan(diag.variance_spectrum, *diag.moment_gap_ratio,
                     diag.target_rank, m)
              .value <= target) {
        budget = m;
        break;
      }
    }
    os << "feature budget for kappa <= n^{-1/2} at n=" << config.split_sizes.train
       << ": " << (budget > 0 ? std::to_string(budget) : std::string("> 2^24"))
       << " (informational)\n";
  } else {
    os << "B_k unavailable: kernel eigengap at k is below threshold; "
          "kappa undefined\n";
  }
  return os.str();
}

}  // namespace rfpca
