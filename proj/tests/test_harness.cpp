#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "rfpca/batch.hpp"
#include "rfpca/evaluate.hpp"
#include "rfpca/harness.hpp"

using namespace rfpca;
using nlohmann::json;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/rfpca_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

json minimal_config() {
  return json{
      {"dataset", {{"kind", "synthetic"}, {"dim", 12}, {"n", 400}, {"alpha", 0.7}, {"seed", 3}}},
      {"kernel", {{"family", "rbf"}, {"bandwidth", 1.0}}},
      {"features", 16},
      {"rank", 2},
      {"learners", {"rf_oja", "rf_erm"}},
      {"checkpoints", {60, 120, 180}},
      {"eval_size", 50},
      {"seeds", {1, 2}},
      {"split", {{"train", 200}, {"tune", 50}, {"test", 100}, {"seed", 0}}},
  };
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("parse_config: defaults filled, dump echoes them") {
  TempFile f("cfg_min.json");
  {
    std::ofstream out(f.path);
    json j = minimal_config();
    j.erase("learners");
    j.erase("checkpoints");
    j.erase("eval_size");
    j.erase("seeds");
    j.erase("split");
    out << j;
  }
  const ExperimentConfig c = parse_config(f.path);
  CHECK(c.learners.size() == 4);
  CHECK(c.checkpoints == std::vector<long>{250, 500, 1000, 2000, 5000});
  CHECK(c.seeds.size() == 10);
  CHECK(c.eval_size == 2000);
  const json dump = effective_config_json(c);
  CHECK(dump.at("checkpoints").size() == 5);
  CHECK(dump.at("kernel").at("bandwidth") == 1.0);
  CHECK(dump.at("oja").at("rayleigh_window") == 1000);
}

TEST_CASE("parse_config rejects bad configs by key name") {
  auto parse_json = [](const json& j) { return config_from_json(j); };

  json unordered = minimal_config();
  unordered["checkpoints"] = {100, 50};
  CHECK_THROWS_WITH_AS(parse_json(unordered), doctest::Contains("checkpoints"),
                       std::invalid_argument);

  json unknown = minimal_config();
  unknown["typo_key"] = 1;
  CHECK_THROWS_WITH_AS(parse_json(unknown), doctest::Contains("typo_key"),
                       std::invalid_argument);

  json nested_unknown = minimal_config();
  nested_unknown["oja"] = {{"warmup", 10}};
  CHECK_THROWS_WITH_AS(parse_json(nested_unknown), doctest::Contains("oja.warmup"),
                       std::invalid_argument);

  json missing = minimal_config();
  missing.erase("features");
  CHECK_THROWS_WITH_AS(parse_json(missing), doctest::Contains("features"),
                       std::invalid_argument);

  json bad_type = minimal_config();
  bad_type["rank"] = "ten";
  CHECK_THROWS_WITH_AS(parse_json(bad_type), doctest::Contains("rank"),
                       std::invalid_argument);

  json bad_learner = minimal_config();
  bad_learner["learners"] = {"rf_oja", "mystery"};
  CHECK_THROWS_WITH_AS(parse_json(bad_learner), doctest::Contains("mystery"),
                       std::invalid_argument);

  json both_bw = minimal_config();
  both_bw["kernel"] = {{"family", "rbf"}, {"bandwidth", 1.0}, {"bandwidth_sq", 1.0}};
  CHECK_THROWS_AS(parse_json(both_bw), std::invalid_argument);

  json deep_checkpoint = minimal_config();
  deep_checkpoint["checkpoints"] = {60, 120, 500};  // beyond the train split
  CHECK_THROWS_WITH_AS(parse_json(deep_checkpoint), doctest::Contains("checkpoint"),
                       std::invalid_argument);
}

TEST_CASE("paper-shaped config parses") {
  json j = minimal_config();
  j["kernel"] = {{"family", "rbf"}, {"bandwidth_sq", 50.0}};
  j["features"] = 750;
  j["rank"] = 10;
  j["nystrom_landmarks"] = 100;
  j["learners"] = {"rf_oja", "rf_erm", "exact_erm", "nystrom"};
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.bandwidth == doctest::Approx(std::sqrt(50.0)));
  CHECK(c.features == 750);
  CHECK(c.nystrom_landmarks == 100);
}

TEST_CASE("run_experiment: row counts, determinism, aggregates") {
  const ExperimentConfig config = config_from_json(minimal_config());
  const Dataset data = load_dataset(config.dataset);

  const ExperimentResult a = run_experiment(config, data);
  // 2 learners x 2 seeds x 3 checkpoints.
  CHECK(a.records.size() == 12);
  // mean + stderr per (learner, checkpoint).
  CHECK(a.aggregates.size() == 2 * 2 * 3);
  CHECK(a.failed_cells == 0);

  const ExperimentResult b = run_experiment(config, data);
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].learner == b.records[i].learner);
    CHECK(a.records[i].seed == b.records[i].seed);
    CHECK(a.records[i].n_seen == b.records[i].n_seen);
    CHECK(a.records[i].objective == b.records[i].objective);
    CHECK(a.records[i].gram_dev == b.records[i].gram_dev);
  }

  // Aggregates recompute from the detail rows.
  std::map<std::pair<std::string, long>, std::vector<double>> objs;
  for (const RunRecord& rec : a.records) {
    objs[{rec.learner, rec.n_seen}].push_back(rec.objective);
  }
  for (const RunRecord& agg : a.aggregates) {
    if (agg.seed != "mean") continue;
    const auto& vals = objs.at({agg.learner, agg.n_seen});
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    CHECK(std::abs(agg.objective - mean) <= 1e-12);
  }
}

TEST_CASE("run_experiment: rf_erm checkpoint equals an in-process eigensolve oracle") {
  ExperimentConfig config = config_from_json(minimal_config());
  config.learners = {"rf_erm"};
  config.seeds = {7};
  const Dataset data = load_dataset(config.dataset);
  const ExperimentResult result = run_experiment(config, data);
  REQUIRE(result.records.size() == 3);

  // Rebuild the pipeline by hand: same split, same sub-seed derivations.
  const DataSplit parts = split(data, config.split_sizes, config.split_seed);
  KernelSpec spec{config.kernel_family, config.bandwidth, data.dim()};
  const FeatureMap map = sample_feature_map(spec, config.features, derive_seed(7, 0));
  const Eigen::MatrixXd eval_points = parts.test.points.topRows(config.eval_size);
  const EvalSet eval = build_eval_set(map, eval_points);
  PointStream stream(parts.train, derive_seed(7, 1), StreamMode::single_pass);
  CovarianceAccumulator acc(config.features);
  long consumed = 0;
  for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
    while (consumed < config.checkpoints[c]) {
      acc.accumulate(transform(map, *stream.next()));
      ++consumed;
    }
    const SubspaceModel oracle_model = rf_erm(acc, config.rank);
    const double oracle = lifted_objective(oracle_model, eval).value;
    CHECK(std::abs(result.records[c].objective - oracle) <= 1e-8);
  }
}

TEST_CASE("run_experiment: wall time excludes evaluation (slow-evaluator injection)") {
  ExperimentConfig config = config_from_json(minimal_config());
  const Dataset data = load_dataset(config.dataset);

  RunHooks hooks;
  const auto delay = std::chrono::milliseconds(50);
  hooks.before_eval = [&] { std::this_thread::sleep_for(delay); };

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(config, data, hooks);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // 2 learners x 2 seeds x 3 checkpoints of injected delay.
  CHECK(elapsed >= 0.05 * 12);
  for (const RunRecord& rec : result.records) {
    CHECK(rec.wall_time_s < 0.05);  // far below a single injected delay
  }
  // Times are cumulative per (learner, seed).
  std::map<std::pair<std::string, std::string>, double> last;
  for (const RunRecord& rec : result.records) {
    const auto key = std::make_pair(rec.learner, rec.seed);
    if (last.count(key)) CHECK(rec.wall_time_s >= last[key]);
    last[key] = rec.wall_time_s;
  }
}

TEST_CASE("run_experiment: a failing cell is skipped, the sweep continues") {
  ExperimentConfig config = config_from_json(minimal_config());
  config.learners = {"rf_erm", "exact_erm"};
  config.exact_erm_cap = 100;  // second checkpoint (120) exceeds the cap
  const Dataset data = load_dataset(config.dataset);
  const ExperimentResult result = run_experiment(config, data);
  CHECK(result.failed_cells == 2);  // both seeds lose their exact_erm cell
  int exact_rows = 0, rf_rows = 0;
  for (const RunRecord& rec : result.records) {
    if (rec.learner == "exact_erm") ++exact_rows;
    if (rec.learner == "rf_erm") ++rf_rows;
  }
  CHECK(exact_rows == 2);  // only the first checkpoint per seed
  CHECK(rf_rows == 6);
}

TEST_CASE("csv round trip with fixed header and aggregate rows") {
  ExperimentConfig config = config_from_json(minimal_config());
  TempFile out("results.csv");
  TempFile dump("results.csv.effective.json");
  config.output = out.path;
  const Dataset data = load_dataset(config.dataset);
  const ExperimentResult result = run_experiment_to_csv(config, data);

  const auto rows = read_csv(out.path);
  REQUIRE(!rows.empty());
  CHECK(rows[0] == std::vector<std::string>{"learner", "seed", "n_seen", "m", "k",
                                            "objective", "gram_deviation",
                                            "wall_time_s"});
  CHECK(rows.size() == 1 + result.records.size() + result.aggregates.size());
  int mean_rows = 0, se_rows = 0;
  for (const auto& row : rows) {
    if (row[1] == "mean") ++mean_rows;
    if (row[1] == "stderr") ++se_rows;
  }
  CHECK(mean_rows == 6);
  CHECK(se_rows == 6);

  // The effective-config dump sits beside the results.
  std::ifstream eff(dump.path);
  CHECK(eff.good());
  json parsed;
  eff >> parsed;
  CHECK(parsed.at("features") == 16);
}

TEST_CASE("parallel workers produce the same records as a serial run") {
  ExperimentConfig config = config_from_json(minimal_config());
  config.seeds = {1, 2, 3, 4};
  const Dataset data = load_dataset(config.dataset);
  const ExperimentResult serial = run_experiment(config, data);
  config.workers = 4;
  const ExperimentResult parallel = run_experiment(config, data);
  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(serial.records[i].learner == parallel.records[i].learner);
    CHECK(serial.records[i].seed == parallel.records[i].seed);
    CHECK(serial.records[i].objective == parallel.records[i].objective);
    CHECK(serial.records[i].gram_dev == parallel.records[i].gram_dev);
  }
}

TEST_CASE("diagnose emits a report and degrades gracefully without a gap") {
  ExperimentConfig config = config_from_json(minimal_config());
  const Dataset data = load_dataset(config.dataset);
  config.diagnose.probe_features = 60;
  config.diagnose.subsample = 80;
  const SpectrumDiagnostics diag = run_diagnose(config, data);
  const std::string report = diagnose_report(config, diag);
  CHECK(report.find("kappa") != std::string::npos);
  CHECK(report.find("B_k") != std::string::npos);

  SpectrumDiagnostics gapless = diag;
  gapless.moment_gap_ratio.reset();
  gapless.kappa.reset();
  const std::string degraded = diagnose_report(config, gapless);
  CHECK(degraded.find("unavailable") != std::string::npos);
}

TEST_CASE("cli subcommands and exit codes") {
#ifdef RFPCA_CLI_PATH
  TempFile cfg("cli_cfg.json");
  TempFile out("cli_out.csv");
  TempFile eff("cli_out.csv.effective.json");
  {
    std::ofstream f(cfg.path);
    json j = minimal_config();
    j["seeds"] = {1};
    j["output"] = out.path;
    f << j;
  }
  const std::string cli = RFPCA_CLI_PATH;
  CHECK(std::system((cli + " validate-config --config " + cfg.path + " > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " run --config " + cfg.path + " > /dev/null").c_str()) == 0);
  std::ifstream produced(out.path);
  CHECK(produced.good());

  TempFile bad("cli_bad.json");
  {
    std::ofstream f(bad.path);
    f << "{\"dataset\": {\"kind\": \"synthetic\"}}";
  }
  const int code =
      std::system((cli + " run --config " + bad.path + " 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(code) == 2);

  const int missing =
      std::system((cli + " run --config /nonexistent.json 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(missing) == 2);
#endif
}
