#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfpca/data.hpp"
#include "rfpca/kernels.hpp"
#include "rfpca/oja.hpp"
#include "rfpca/spectrum.hpp"

namespace rfpca {

struct DatasetConfig {
  enum class Kind { idx, delimited, synthetic };
  Kind kind = Kind::synthetic;
  std::string images;  // idx
  std::string labels;  // idx, optional
  std::string path;    // delimited
  char delimiter = ',';
  bool has_header = false;
  int synth_dim = 50;
  long synth_n = 20000;
  double synth_alpha = 0.7;              // spectrum alpha^j when list absent
  std::vector<double> synth_spectrum;    // explicit spectrum, overrides alpha
  std::uint64_t synth_seed = 0;
};

struct DiagnoseConfig {
  int probe_features = 500;  // M
  long subsample = 2000;     // data points fed to the estimator
};

struct ExperimentConfig {
  DatasetConfig dataset;
  KernelFamily kernel_family = KernelFamily::rbf;
  double bandwidth = 1.0;  // sigma
  int features = 750;      // m
  int rank = 10;           // k
  std::vector<std::string> learners{"rf_oja", "rf_erm", "exact_erm", "nystrom"};
  int nystrom_landmarks = 100;
  std::vector<long> checkpoints{250, 500, 1000, 2000, 5000};
  long eval_size = 2000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  SplitSizes split_sizes{5000, 1000, 2000};
  std::uint64_t split_seed = 0;
  StreamMode stream_mode = StreamMode::single_pass;
  OjaConfig oja;  // schedule overrides; k/seed/horizon are filled per run
  std::string output = "results.csv";
  long exact_erm_cap = 10000;
  int workers = 1;
  DiagnoseConfig diagnose;
};

/// Parses and validates a JSON config file. Unknown keys, missing required
/// keys, and type mismatches raise std::invalid_argument naming the key.
/// Defaults are filled in; effective_config_json echoes the result.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json effective_config_json(const ExperimentConfig& config);

/// Loads (or generates) the configured dataset.
Dataset load_dataset(const DatasetConfig& config);

struct RunRecord {
  std::string learner;
  std::string seed;  ///< seed value, or "mean"/"stderr" for aggregate rows
  long n_seen = 0;
  int m = 0;
  int k = 0;
  double objective = 0.0;
  double gram_dev = 0.0;
  double wall_time_s = 0.0;  ///< cumulative learner time, evaluation excluded
};

struct ExperimentResult {
  std::vector<RunRecord> records;     ///< one per (learner, seed, checkpoint)
  std::vector<RunRecord> aggregates;  ///< per-checkpoint mean and stderr rows
  int failed_cells = 0;
};

/// Test seam: invoked inside the (untimed) evaluation section, before
/// evaluating each checkpoint.
struct RunHooks {
  std::function<void()> before_eval;
};

/// Sweeps (learner, seed) cells over the checkpoint grid. Each seed samples
/// its own feature map, builds the eval set once, then streams training
/// data; at every checkpoint each learner is snapshotted and evaluated.
/// Wall-clock columns cover learner updates and refits only. A failing cell
/// is logged and skipped; the sweep continues.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Dataset& dataset,
                                const RunHooks& hooks = {});

/// run_experiment + CSV emission + effective-config dump beside the CSV.
ExperimentResult run_experiment_to_csv(const ExperimentConfig& config,
                                       const Dataset& dataset,
                                       const RunHooks& hooks = {});

/// Fixed header: learner,seed,n_seen,m,k,objective,gram_deviation,wall_time_s
void write_csv(const ExperimentResult& result, const std::string& path);

/// Spectral-decay diagnostics on a subsample of the configured dataset.
SpectrumDiagnostics run_diagnose(const ExperimentConfig& config,
                                 const Dataset& dataset);

/// Human-readable report: eigenvalue table, decay ratios, B_k, kappa, and
/// the informational feature budget reaching kappa-dominance at the
/// configured training size.
std::string diagnose_report(const ExperimentConfig& config,
                            const SpectrumDiagnostics& diag);

}  // namespace rfpca
