// lrmc command line tool: synthetic data generation, single fits, replicated
// study tables and posterior figure data.

#include <CLI11.hpp>

#include "lrmc/bayes.hpp"
#include "lrmc/bench.hpp"
#include "lrmc/debias.hpp"
#include "lrmc/freq.hpp"
#include "lrmc/io.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/masking.hpp"
#include "lrmc/metrics.hpp"
#include "lrmc/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace lrmc;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitPartialFailure = 3;

struct SimFlags {
  SimSpec spec;
  std::string setting = "exact";

  void attach(CLI::App* cmd) {
    cmd->add_option("--m", spec.m, "number of rows")->capture_default_str();
    cmd->add_option("--p", spec.p, "number of columns")->capture_default_str();
    cmd->add_option("--rank,-r", spec.r, "target rank")->capture_default_str();
    cmd->add_option("--setting", setting, "exact | approx")->capture_default_str();
    cmd->add_option("--tau", spec.tau, "fraction of entries NOT observed")->capture_default_str();
    cmd->add_option("--sigma", spec.sigma, "noise standard deviation")->capture_default_str();
    cmd->add_option("--perturb-rank", spec.perturb_rank, "approx setting: inner dimension")
        ->capture_default_str();
    cmd->add_option("--perturb-scale", spec.perturb_scale, "approx setting: scale")
        ->capture_default_str();
  }

  SimSpec resolve() const {
    SimSpec out = spec;
    if (setting == "exact") {
      out.setting = SimSetting::ExactLowRank;
    } else if (setting == "approx") {
      out.setting = SimSetting::ApproxLowRank;
    } else {
      throw CLI::ValidationError("--setting", "must be 'exact' or 'approx'");
    }
    return out;
  }
};

LambdaRule parse_lambda_rule(const std::string& name) {
  if (name == "sqrt_mp") return LambdaRule::SqrtMP;
  if (name == "sqrt_np_obs") return LambdaRule::SqrtNpObs;
  throw CLI::ValidationError("--lambda-rule", "must be 'sqrt_mp' or 'sqrt_np_obs'");
}

TemperSemantics parse_semantics(const std::string& name) {
  if (name == "residual") return TemperSemantics::ResidualDirect;
  if (name == "power") return TemperSemantics::GaussianPower;
  throw CLI::ValidationError("--temper-semantics", "must be 'residual' or 'power'");
}

std::vector<Estimator> parse_estimators(const std::string& csv) {
  std::vector<Estimator> out;
  std::stringstream s(csv);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) out.push_back(estimator_from_string(item));
  }
  if (out.empty()) throw CLI::ValidationError("--estimators", "no estimators named");
  return out;
}

void write_interval_csv(const std::string& path, const IntervalMatrix& iv) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "i,j,lower,upper\n";
  f << std::setprecision(17);
  for (Index i = 0; i < iv.lower.rows(); ++i) {
    for (Index j = 0; j < iv.lower.cols(); ++j) {
      f << (i + 1) << ',' << (j + 1) << ',' << iv.lower(i, j) << ',' << iv.upper(i, j) << '\n';
    }
  }
}

int run_simulate(const SimFlags& flags, std::uint64_t seed, const std::string& out_truth,
                 const std::string& out_obs) {
  const SimSpec spec = flags.resolve();
  RngStream strm(seed, 0);
  RngStream truth_rng = strm.substream(0);
  const Matrix truth = gen_truth(spec, truth_rng);
  RngStream obs_rng = strm.substream(1);
  const ObservationSet obs = sample_observations(truth, spec.tau, spec.sigma, obs_rng);
  write_matrix_csv(out_truth, truth);
  write_observations_csv(out_obs, obs);
  std::cout << "wrote " << out_truth << " (" << truth.rows() << "x" << truth.cols() << ") and "
            << out_obs << " (n=" << obs.n() << ")\n";
  return kExitOk;
}

struct FitFlags {
  std::string obs_path;
  std::string truth_path;
  std::string estimator = "als";
  Index rank = 2;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  // chain options
  double temper_lambda = 0.0;
  double sigma2 = 1.0;
  int iters = 600;
  int burn_in = 100;
  int thin = 1;
  std::string semantics = "residual";
  Index flex_k = 10;
  double flex_a = 1.0;
  double flex_b = 0.01;
  // interval options
  double level = 0.0;  // 0 disables intervals
  std::string intervals_out;
  // debias options
  bool ips_correction = false;
  std::string lambda_rule = "sqrt_mp";
  double sigma = 1.0;
  std::string out = "estimate.csv";
  std::string report;
};

int run_fit(const FitFlags& flags) {
  const ObservationSet obs = read_observations_csv(flags.obs_path);
  std::optional<Matrix> truth;
  if (!flags.truth_path.empty()) {
    truth = read_matrix_csv(flags.truth_path);
  }

  Matrix estimate;
  std::optional<IntervalMatrix> intervals;
  const double tau =
      1.0 - static_cast<double>(obs.n()) / (static_cast<double>(obs.rows) * obs.cols);

  if (flags.estimator == "als" || flags.estimator == "db") {
    AlsConfig cfg;
    cfg.lambda = flags.lambda;
    cfg.rank = flags.rank;
    RngStream rng(flags.seed, 0);
    const AlsResult fit = als_fit(obs, cfg, rng);
    if (flags.estimator == "als") {
      estimate = impose_observed(fit.estimate.values, obs);
    } else {
      estimate = debias(fit.estimate.values, obs, flags.rank, flags.ips_correction);
      if (flags.level > 0.0) {
        const TruncatedSvd base = truncated_svd(fit.estimate.values, flags.rank);
        const double lam = lambda_rule_db(obs.rows, obs.cols, flags.sigma,
                                          parse_lambda_rule(flags.lambda_rule), tau);
        const EntryVariance ev = entry_variance(base, lam, flags.sigma * flags.sigma);
        intervals = confidence_interval(estimate, ev.v, 1.0 - flags.level);
      }
    }
  } else if (flags.estimator == "soft-impute") {
    SoftImputeConfig cfg;
    cfg.lambda = flags.lambda;
    estimate = soft_impute_fit(obs, cfg).values;
  } else if (flags.estimator == "f-bayes" || flags.estimator == "f_bayes" ||
             flags.estimator == "bayes") {
    GibbsConfig cfg;
    cfg.temper_lambda = flags.temper_lambda;
    cfg.sigma2 = flags.sigma2;
    cfg.n_iters = flags.iters;
    cfg.burn_in = flags.burn_in;
    cfg.thin = flags.thin;
    cfg.semantics = parse_semantics(flags.semantics);
    if (flags.estimator == "bayes") {
      cfg.prior = FlexiblePrior{flags.flex_k, flags.flex_a, flags.flex_b};
    } else {
      cfg.prior = FixedRankPrior{flags.rank};
    }
    RngStream rng(flags.seed, 0);
    const PosteriorSamples samples = gibbs_run(obs, cfg, rng);
    estimate = posterior_mean(samples).values;
    if (flags.level > 0.0) {
      intervals = credible_interval(samples, flags.level);
    }
  } else {
    throw CLI::ValidationError("--estimator",
                               "must be als | soft-impute | db | f-bayes | bayes");
  }

  write_matrix_csv(flags.out, estimate);
  if (intervals && !flags.intervals_out.empty()) {
    write_interval_csv(flags.intervals_out, *intervals);
  }

  nlohmann::json report;
  report["estimator"] = flags.estimator;
  report["m"] = obs.rows;
  report["p"] = obs.cols;
  report["n"] = obs.n();
  report["out"] = flags.out;
  if (truth) {
    const ErrorReport er = compute_errors(estimate, *truth, obs);
    report["mse"] = er.mse;
    report["nmse"] = er.nmse;
    if (er.pred) report["pred"] = *er.pred;
    if (intervals) {
      const IntervalStats stats = interval_stats(*intervals, *truth);
      report["interval_mean_length"] = stats.mean_length;
      report["interval_coverage"] = stats.coverage;
    }
  }
  const std::string text = report.dump(2);
  if (flags.report.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(flags.report);
    if (!f) throw std::runtime_error("cannot open for writing: " + flags.report);
    f << text << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank matrix completion estimators and benchmark harness"};
  app.set_config("--config", "", "key=value config file; command line flags override it");
  app.require_subcommand(1);

  // simulate ------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "generate a truth matrix and observations");
  SimFlags sim_flags;
  sim_flags.attach(sim_cmd);
  std::uint64_t sim_seed = 0;
  std::string out_truth = "truth.csv";
  std::string out_obs = "obs.csv";
  sim_cmd->add_option("--seed", sim_seed, "rng seed")->capture_default_str();
  sim_cmd->add_option("--out-truth", out_truth, "truth csv path")->capture_default_str();
  sim_cmd->add_option("--out-obs", out_obs, "observations csv path")->capture_default_str();

  // fit -----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "fit one estimator to an observation file");
  FitFlags fit_flags;
  fit_cmd->add_option("--obs", fit_flags.obs_path, "observations csv")->required();
  fit_cmd->add_option("--truth", fit_flags.truth_path, "optional truth csv for error metrics");
  fit_cmd->add_option("--estimator", fit_flags.estimator,
                      "als | soft-impute | db | f-bayes | bayes")
      ->capture_default_str();
  fit_cmd->add_option("--rank,-r", fit_flags.rank, "factor rank")->capture_default_str();
  fit_cmd->add_option("--lambda", fit_flags.lambda, "ridge / nuclear penalty")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit_flags.seed, "rng seed")->capture_default_str();
  fit_cmd->add_option("--temper-lambda", fit_flags.temper_lambda,
                      "tempering parameter; <= 0 resolves to 1/(4 sigma2)")
      ->capture_default_str();
  fit_cmd->add_option("--sigma2", fit_flags.sigma2, "noise variance for the chains")
      ->capture_default_str();
  fit_cmd->add_option("--iters", fit_flags.iters, "total chain iterations")->capture_default_str();
  fit_cmd->add_option("--burn-in", fit_flags.burn_in, "burn-in iterations")->capture_default_str();
  fit_cmd->add_option("--thin", fit_flags.thin, "thinning stride")->capture_default_str();
  fit_cmd->add_option("--temper-semantics", fit_flags.semantics, "residual | power")
      ->capture_default_str();
  fit_cmd->add_option("--K", fit_flags.flex_k, "flexible prior columns")->capture_default_str();
  fit_cmd->add_option("--a", fit_flags.flex_a, "flexible prior shape")->capture_default_str();
  fit_cmd->add_option("--b", fit_flags.flex_b, "flexible prior rate")->capture_default_str();
  fit_cmd->add_option("--level", fit_flags.level,
                      "interval level in (0,1); 0 disables intervals")
      ->capture_default_str();
  fit_cmd->add_option("--intervals-out", fit_flags.intervals_out, "interval csv path");
  fit_cmd->add_flag("--ips-correction", fit_flags.ips_correction,
                    "scale the de-bias correction by the inverse observation rate");
  fit_cmd->add_option("--lambda-rule", fit_flags.lambda_rule, "sqrt_mp | sqrt_np_obs")
      ->capture_default_str();
  fit_cmd->add_option("--sigma", fit_flags.sigma, "noise sd for the variance construction")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_flags.out, "estimate csv path")->capture_default_str();
  fit_cmd->add_option("--report", fit_flags.report, "metrics json path (default: stdout)");

  // reproduce-table -------------------------------------------------------
  auto* table_cmd = app.add_subcommand("reproduce-table", "run one study table end to end");
  std::string table_name = "T1";
  TableOptions table_opt;
  table_opt.desk = false;
  std::string table_estimators = "als,db,f_bayes,bayes";
  std::string table_rule = "sqrt_mp";
  std::string table_semantics = "residual";
  table_cmd->add_option("--table", table_name, "T1 | T2 | T3 | T4")->capture_default_str();
  table_cmd->add_flag("--desk", table_opt.desk, "desk scale: 20 replicates");
  table_cmd->add_option("--replicates", table_opt.replicates,
                        "override the replicate count (0 = scale default)")
      ->capture_default_str();
  table_cmd->add_flag("--time-budget", table_opt.time_budget,
                      "desk scale: skip the p=1000 Bayesian cells");
  table_cmd->add_option("--seed", table_opt.seed, "rng seed")->capture_default_str();
  table_cmd->add_option("--out", table_opt.out_dir, "output directory")->capture_default_str();
  table_cmd->add_option("--estimators", table_estimators, "comma list: als,db,f_bayes,bayes")
      ->capture_default_str();
  table_cmd->add_option("--als-lambda", table_opt.als_lambda, "base-fit ridge penalty")
      ->capture_default_str();
  table_cmd->add_option("--lambda-rule", table_rule, "sqrt_mp | sqrt_np_obs")
      ->capture_default_str();
  table_cmd->add_flag("--ips-correction", table_opt.ips_correction,
                      "scale the de-bias correction by the inverse observation rate");
  table_cmd->add_option("--temper-semantics", table_semantics, "residual | power")
      ->capture_default_str();
  table_cmd->add_option("--workers", table_opt.workers, "replicate worker threads (0 = auto)")
      ->capture_default_str();

  // figure-data -----------------------------------------------------------
  auto* fig_cmd = app.add_subcommand("figure-data",
                                     "posterior draws vs de-biased Gaussian for chosen entries");
  SimFlags fig_sim;
  fig_sim.attach(fig_cmd);
  FigureConfig fig_cfg;
  std::string fig_entries = "1,1";
  std::string fig_rule = "sqrt_mp";
  std::string fig_semantics = "residual";
  fig_cmd->add_option("--seed", fig_cfg.seed, "rng seed")->capture_default_str();
  fig_cmd->add_option("--draws", fig_cfg.retained_draws, "retained posterior draws (>= 10000)")
      ->capture_default_str();
  fig_cmd->add_option("--entries", fig_entries, "semicolon list of 1-based i,j pairs")
      ->capture_default_str();
  fig_cmd->add_option("--out", fig_cfg.out_dir, "output directory")->capture_default_str();
  fig_cmd->add_option("--als-lambda", fig_cfg.als_lambda, "base-fit ridge penalty")
      ->capture_default_str();
  fig_cmd->add_option("--lambda-rule", fig_rule, "sqrt_mp | sqrt_np_obs")->capture_default_str();
  fig_cmd->add_flag("--ips-correction", fig_cfg.ips_correction,
                    "scale the de-bias correction by the inverse observation rate");
  fig_cmd->add_option("--temper-semantics", fig_semantics, "residual | power")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (sim_cmd->parsed()) {
      return run_simulate(sim_flags, sim_seed, out_truth, out_obs);
    }
    if (fit_cmd->parsed()) {
      return run_fit(fit_flags);
    }
    if (table_cmd->parsed()) {
      table_opt.estimators = parse_estimators(table_estimators);
      table_opt.lambda_rule = parse_lambda_rule(table_rule);
      table_opt.semantics = parse_semantics(table_semantics);
      const TableReport report = reproduce_table(table_from_string(table_name), table_opt);
      std::cout << report.text;
      int total_failures = 0;
      for (const auto& row : report.rows) total_failures += row.n_failures;
      if (total_failures > 0) {
        std::cerr << "warning: " << total_failures
                  << " replicate failures were excluded from aggregation\n";
        return kExitPartialFailure;
      }
      return kExitOk;
    }
    if (fig_cmd->parsed()) {
      fig_cfg.sim = fig_sim.resolve();
      fig_cfg.lambda_rule = parse_lambda_rule(fig_rule);
      fig_cfg.semantics = parse_semantics(fig_semantics);
      fig_cfg.entries.clear();
      std::stringstream s(fig_entries);
      std::string pair;
      while (std::getline(s, pair, ';')) {
        if (pair.empty()) continue;
        std::istringstream ps(pair);
        long long i = 0, j = 0;
        char comma = 0;
        if (!(ps >> i >> comma >> j) || comma != ',') {
          throw CLI::ValidationError("--entries", "expected 1-based 'i,j' pairs");
        }
        fig_cfg.entries.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1));
      }
      emit_figure_data(fig_cfg);
      std::cout << "wrote " << fig_cfg.entries.size() << " entry files under "
                << fig_cfg.out_dir << "\n";
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartialFailure;
  }
  return kExitOk;
}
