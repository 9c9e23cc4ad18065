#pragma once

#include "lrmc/bayes.hpp"
#include "lrmc/freq.hpp"
#include "lrmc/sim.hpp"
#include "lrmc/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lrmc {

enum class Estimator { Als, Db, FBayes, Bayes };
std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

/// Penalty rule feeding the de-biased variance construction.
enum class LambdaRule { SqrtMP, SqrtNpObs };

/// SqrtMP: 2.5 * sigma * sqrt(m p).
/// SqrtNpObs: 2.5 * sigma * sqrt(max(m,p) * (1 - tau)).
double lambda_rule_db(Index m, Index p, double sigma, LambdaRule rule = LambdaRule::SqrtMP,
                      double tau = 0.0);

struct ExperimentConfig {
  SimSpec sim;
  int replicates = 50;
  std::vector<Estimator> estimators = {Estimator::Als, Estimator::Db, Estimator::FBayes,
                                       Estimator::Bayes};

  // Base fit feeding the als row and the de-biased estimator.
  double als_lambda = 0.0;
  int als_max_iters = 200;
  double als_tol = 1e-6;

  LambdaRule lambda_rule = LambdaRule::SqrtMP;
  bool ips_correction = false;
  double db_level = 0.95;
  double bayes_level = 0.89;
  bool compute_intervals = false;

  // Chain template shared by both Bayesian estimators; the prior is set per
  // estimator (fixed rank = sim.r for f_bayes, `flexible` for bayes).
  GibbsConfig gibbs;
  FlexiblePrior flexible{10, 1.0, 0.01};

  bool fixed_truth = false;  // one truth, replicated observation processes
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency; does not affect results

  void validate() const;
  /// Canonical key=value rendering of every result-affecting field.
  std::string canonical() const;
  /// Stable hash of canonical(), hex-encoded.
  std::string fingerprint() const;
};

struct ResultRow {
  std::string fingerprint;
  std::string setting;  // "exact" | "approx"
  Index m = 0;
  Index p = 0;
  Index r = 0;
  double tau = 0.0;
  std::string estimator;
  std::string metric;  // MSE | NMSE | Pred | CI_length | coverage
  double mean = 0.0;
  double std_dev = 0.0;
  bool std_defined = false;
  int n_reps = 0;
  int n_failures = 0;
};

/// Runs the replicated study: per replicate, generate (or reuse) the truth,
/// sample observations with stream k, fit the requested estimators, and
/// aggregate mean / sample std per estimator x metric. Estimator failures are
/// counted per row and excluded from aggregation.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Stable-column CSV of result rows:
/// fingerprint,setting,m,p,r,tau,estimator,metric,mean,std,n_reps,n_failures
void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_rows_csv(const std::string& path, const std::vector<ResultRow>& rows);
/// JSON mirror of the same rows.
void write_rows_json(const std::string& path, const std::vector<ResultRow>& rows);

enum class TableId { T1, T2, T3, T4 };
std::string to_string(TableId id);
TableId table_from_string(const std::string& name);

struct TableOptions {
  bool desk = true;          // 20 replicates instead of 50
  int replicates = 0;        // overrides the scale default when > 0
  bool time_budget = false;  // desk scale: skip p=1000 Bayesian cells
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::vector<Estimator> estimators = {Estimator::Als, Estimator::Db, Estimator::FBayes,
                                       Estimator::Bayes};
  double als_lambda = 0.0;
  LambdaRule lambda_rule = LambdaRule::SqrtMP;
  bool ips_correction = false;
  TemperSemantics semantics = TemperSemantics::ResidualDirect;
  int workers = 0;
};

struct TableReport {
  std::vector<ResultRow> rows;
  std::string text;  // formatted table
};

/// Expands a study table over its full factorial (r in {2,5}, p in {100,1000},
/// tau in {0.2,0.5,0.8}; m = 100, sigma = 1), runs every cell, and writes
/// <table>.csv, <table>.json and <table>.txt under out_dir.
TableReport reproduce_table(TableId id, const TableOptions& opt);

struct FigureConfig {
  SimSpec sim;
  std::uint64_t seed = 0;
  int retained_draws = 10000;  // must be >= 10000
  double als_lambda = 0.0;
  LambdaRule lambda_rule = LambdaRule::SqrtMP;
  bool ips_correction = false;
  TemperSemantics semantics = TemperSemantics::ResidualDirect;
  std::string out_dir = ".";
  std::vector<std::pair<Index, Index>> entries;  // 0-based
};

/// Per requested entry, writes entry_<i>_<j>.csv (1-based in the file name)
/// holding the posterior draw sequence for that entry plus the de-biased
/// Gaussian parameters (m_db, v) and the truth value.
void emit_figure_data(const FigureConfig& cfg);

}  // namespace lrmc
