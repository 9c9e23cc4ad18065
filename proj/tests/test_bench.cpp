#include <doctest.h>

#include "lrmc/bench.hpp"
#include "lrmc/debias.hpp"
#include "lrmc/io.hpp"
#include "lrmc/masking.hpp"
#include "lrmc/metrics.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lrmc;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.sim.m = 12;
  cfg.sim.p = 10;
  cfg.sim.r = 1;
  cfg.sim.tau = 0.3;
  cfg.sim.sigma = 0.5;
  cfg.replicates = 4;
  cfg.estimators = {Estimator::Als, Estimator::Db};
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("lambda rule values") {
  CHECK(lambda_rule_db(100, 100, 1.0) == doctest::Approx(250.0).epsilon(1e-12));
  CHECK(lambda_rule_db(100, 100, 0.0) == 0.0);
  CHECK(lambda_rule_db(100, 1000, 1.0) == doctest::Approx(790.569415).epsilon(1e-6));
  CHECK(lambda_rule_db(100, 1000, 1.0, LambdaRule::SqrtNpObs, 0.2) ==
        doctest::Approx(2.5 * std::sqrt(1000.0 * 0.8)).epsilon(1e-12));
  CHECK_THROWS_AS(lambda_rule_db(0, 10, 1.0), std::invalid_argument);
}

TEST_CASE("fingerprint is stable and sensitive") {
  ExperimentConfig a = tiny_config();
  ExperimentConfig b = tiny_config();
  CHECK(a.fingerprint() == b.fingerprint());

  b.workers = 3;  // parallelism must not change the fingerprint
  CHECK(a.fingerprint() == b.fingerprint());

  b = tiny_config();
  b.sim.tau = 0.5;
  CHECK(a.fingerprint() != b.fingerprint());
  b = tiny_config();
  b.seed = 8;
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("noiseless full observation recovers exactly") {
  ExperimentConfig cfg;
  cfg.sim.m = 10;
  cfg.sim.p = 8;
  cfg.sim.r = 2;
  cfg.sim.tau = 0.0;
  cfg.sim.sigma = 0.0;
  cfg.replicates = 2;
  cfg.estimators = {Estimator::Db};
  cfg.seed = 3;
  const auto rows = run_experiment(cfg);
  bool saw_mse = false;
  for (const auto& row : rows) {
    if (row.metric == "MSE") {
      saw_mse = true;
      CHECK(row.mean < 1e-10);
    }
    CHECK(row.metric != "Pred");  // no unobserved entries
  }
  CHECK(saw_mse);
}

TEST_CASE("single replicate reports no std") {
  ExperimentConfig cfg = tiny_config();
  cfg.replicates = 1;
  const auto rows = run_experiment(cfg);
  REQUIRE(!rows.empty());
  for (const auto& row : rows) {
    CHECK(row.n_reps == 1);
    CHECK_FALSE(row.std_defined);
  }
}

TEST_CASE("aggregation matches a two-pass replay of the pipeline") {
  ExperimentConfig cfg = tiny_config();
  cfg.estimators = {Estimator::Als};
  const auto rows = run_experiment(cfg);

  // Replay each replicate through the documented stream layout.
  std::vector<double> mses;
  for (int k = 0; k < cfg.replicates; ++k) {
    RngStream strm(cfg.seed, static_cast<std::uint64_t>(k));
    RngStream truth_rng = strm.substream(0);
    const Matrix truth = gen_truth(cfg.sim, truth_rng);
    RngStream obs_rng = strm.substream(1);
    const ObservationSet obs = sample_observations(truth, cfg.sim.tau, cfg.sim.sigma, obs_rng);
    AlsConfig als_cfg;
    als_cfg.lambda = cfg.als_lambda;
    als_cfg.rank = cfg.sim.r;
    als_cfg.max_iters = cfg.als_max_iters;
    als_cfg.tol = cfg.als_tol;
    RngStream als_rng = strm.substream(2);
    const AlsResult fit = als_fit(obs, als_cfg, als_rng);
    const Matrix completed = impose_observed(fit.estimate.values, obs);
    mses.push_back(compute_errors(completed, truth, obs).mse);
  }
  const auto ref = oracle::two_pass_mean_std(mses);

  for (const auto& row : rows) {
    if (row.metric != "MSE") continue;
    CHECK(std::abs(row.mean - ref.mean) <= 1e-12 * std::abs(ref.mean));
    CHECK(std::abs(row.std_dev - ref.std_dev) <= 1e-12 * std::max(1.0, std::abs(ref.std_dev)));
  }
}

TEST_CASE("worker count does not change the results") {
  ExperimentConfig cfg = tiny_config();
  cfg.workers = 1;
  const auto serial = run_experiment(cfg);
  cfg.workers = 4;
  const auto parallel = run_experiment(cfg);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].estimator == parallel[i].estimator);
    CHECK(serial[i].metric == parallel[i].metric);
    CHECK(serial[i].mean == parallel[i].mean);
    CHECK(serial[i].std_dev == parallel[i].std_dev);
  }
}

TEST_CASE("repeated runs are deterministic") {
  ExperimentConfig cfg = tiny_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean == b[i].mean);
    CHECK(a[i].std_dev == b[i].std_dev);
  }
}

TEST_CASE("estimator failures are counted, not dropped") {
  ExperimentConfig cfg = tiny_config();
  cfg.sim.m = 8;
  cfg.sim.p = 8;
  cfg.estimators = {Estimator::Bayes};
  cfg.flexible.k = 10;  // exceeds min(m, p): the chain refuses to run
  const auto rows = run_experiment(cfg);
  bool saw = false;
  for (const auto& row : rows) {
    if (row.estimator == "bayes" && row.metric == "MSE") {
      saw = true;
      CHECK(row.n_failures == cfg.replicates);
      CHECK(std::isnan(row.mean));
    }
  }
  CHECK(saw);
}

TEST_CASE("interval metrics appear when requested") {
  ExperimentConfig cfg = tiny_config();
  cfg.estimators = {Estimator::Db, Estimator::FBayes};
  cfg.compute_intervals = true;
  cfg.fixed_truth = true;
  cfg.replicates = 3;
  cfg.gibbs.n_iters = 160;
  cfg.gibbs.burn_in = 60;
  const auto rows = run_experiment(cfg);
  int ci_rows = 0, cov_rows = 0;
  for (const auto& row : rows) {
    if (row.metric == "CI_length") {
      ++ci_rows;
      CHECK(row.mean > 0.0);
    }
    if (row.metric == "coverage") {
      ++cov_rows;
      CHECK(row.mean >= 0.0);
      CHECK(row.mean <= 1.0);
    }
  }
  CHECK(ci_rows == 2);
  CHECK(cov_rows == 2);
}

TEST_CASE("csv schema is stable") {
  ExperimentConfig cfg = tiny_config();
  cfg.replicates = 2;
  const auto rows = run_experiment(cfg);
  std::stringstream buf;
  write_rows_csv(buf, rows);
  std::string header;
  std::getline(buf, header);
  CHECK(header == "fingerprint,setting,m,p,r,tau,estimator,metric,mean,std,n_reps,n_failures");
  int data_lines = 0;
  std::string line;
  while (std::getline(buf, line)) {
    if (!line.empty()) ++data_lines;
  }
  CHECK(data_lines == static_cast<int>(rows.size()));
}

TEST_CASE("json mirror round-trips the rows") {
  ExperimentConfig cfg = tiny_config();
  cfg.replicates = 2;
  const auto rows = run_experiment(cfg);
  const auto path = std::filesystem::temp_directory_path() / "lrmc_rows_test.json";
  write_rows_json(path.string(), rows);
  std::ifstream f(path);
  REQUIRE(f.good());
  nlohmann::json arr = nlohmann::json::parse(f);
  REQUIRE(arr.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(arr[i]["estimator"].get<std::string>() == rows[i].estimator);
    CHECK(arr[i]["mean"].get<double>() == doctest::Approx(rows[i].mean));
  }
  std::filesystem::remove(path);
}

TEST_CASE("reproduce_table expands the factorial and writes reports") {
  TableOptions opt;
  opt.desk = true;
  opt.replicates = 1;
  opt.time_budget = true;
  opt.estimators = {Estimator::Db};
  opt.seed = 11;
  opt.out_dir = (std::filesystem::temp_directory_path() / "lrmc_table_test").string();
  const TableReport report = reproduce_table(TableId::T1, opt);

  // 12 cells, db rows only: MSE, NMSE and Pred per cell.
  CHECK(report.rows.size() == 36);
  CHECK(std::filesystem::exists(opt.out_dir + "/T1.csv"));
  CHECK(std::filesystem::exists(opt.out_dir + "/T1.json"));
  CHECK(std::filesystem::exists(opt.out_dir + "/T1.txt"));
  CHECK(report.text.find("r=2 p=100") != std::string::npos);
  std::filesystem::remove_all(opt.out_dir);
}

TEST_CASE("estimator and table names parse") {
  CHECK(estimator_from_string("als") == Estimator::Als);
  CHECK(estimator_from_string("f_bayes") == Estimator::FBayes);
  CHECK_THROWS_AS(estimator_from_string("nope"), std::invalid_argument);
  CHECK(table_from_string("T3") == TableId::T3);
  CHECK(to_string(TableId::T2) == "T2");
  CHECK_THROWS_AS(table_from_string("T9"), std::invalid_argument);
}

TEST_CASE("figure data files carry the draws and parameters") {
  FigureConfig cfg;
  cfg.sim.m = 15;
  cfg.sim.p = 12;
  cfg.sim.r = 1;
  cfg.sim.tau = 0.3;
  cfg.sim.sigma = 0.3;
  cfg.seed = 5;
  cfg.retained_draws = 10000;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "lrmc_fig_test").string();
  cfg.entries = {{0, 0}, {4, 7}};

  SUBCASE("rejects short chains and bad entries") {
    FigureConfig bad = cfg;
    bad.retained_draws = 500;
    CHECK_THROWS_AS(emit_figure_data(bad), std::invalid_argument);
    bad = cfg;
    bad.entries = {{20, 0}};
    CHECK_THROWS_AS(emit_figure_data(bad), std::invalid_argument);
  }

  SUBCASE("writes one file per entry") {
    emit_figure_data(cfg);
    for (const char* name : {"entry_1_1.csv", "entry_5_8.csv"}) {
      const std::string path = cfg.out_dir + "/" + name;
      REQUIRE(std::filesystem::exists(path));
      std::ifstream f(path);
      std::string line;
      double m_db = 0.0, v = -1.0, truth = 0.0;
      std::getline(f, line);
      REQUIRE(line.rfind("# m_db=", 0) == 0);
      m_db = std::stod(line.substr(7));
      std::getline(f, line);
      REQUIRE(line.rfind("# v=", 0) == 0);
      v = std::stod(line.substr(4));
      std::getline(f, line);
      REQUIRE(line.rfind("# truth=", 0) == 0);
      truth = std::stod(line.substr(8));
      std::getline(f, line);
      REQUIRE(line == "draw");

      std::vector<double> draws;
      while (std::getline(f, line)) {
        if (!line.empty()) draws.push_back(std::stod(line));
      }
      CHECK(draws.size() == 10000);
      CHECK(v > 0.0);

      const auto stat = oracle::two_pass_mean_std(draws);
      CHECK(std::isfinite(m_db));
      // The posterior concentrates around the truth on this easy instance.
      CHECK(std::abs(stat.mean - truth) <= 4.0 * stat.std_dev);
    }
    std::filesystem::remove_all(cfg.out_dir);
  }
}
