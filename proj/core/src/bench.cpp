#include "lrmc/bench.hpp"

#include "lrmc/debias.hpp"
#include "lrmc/io.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/masking.hpp"
#include "lrmc/metrics.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace lrmc {

namespace {

// Substream roles within one replicate stream.
constexpr std::uint64_t kRoleTruth = 0;
constexpr std::uint64_t kRoleObs = 1;
constexpr std::uint64_t kRoleAls = 2;
constexpr std::uint64_t kRoleFixedChain = 3;
constexpr std::uint64_t kRoleFlexChain = 4;
// Reserved stream id for the shared truth of fixed-truth studies; replicate
// ids stay well below this.
constexpr std::uint64_t kFixedTruthStream = 0x8000000000000000ULL;

constexpr const char* kMetricNames[] = {"MSE", "NMSE", "Pred", "CI_length", "coverage"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Als: return "als";
    case Estimator::Db: return "db";
    case Estimator::FBayes: return "f_bayes";
    case Estimator::Bayes: return "bayes";
  }
  throw std::logic_error("unknown estimator");
}

Estimator estimator_from_string(const std::string& name) {
  if (name == "als") return Estimator::Als;
  if (name == "db") return Estimator::Db;
  if (name == "f_bayes" || name == "f-bayes") return Estimator::FBayes;
  if (name == "bayes") return Estimator::Bayes;
  throw std::invalid_argument("unknown estimator: " + name);
}

std::string to_string(TableId id) {
  switch (id) {
    case TableId::T1: return "T1";
    case TableId::T2: return "T2";
    case TableId::T3: return "T3";
    case TableId::T4: return "T4";
  }
  throw std::logic_error("unknown table");
}

TableId table_from_string(const std::string& name) {
  if (name == "T1" || name == "t1") return TableId::T1;
  if (name == "T2" || name == "t2") return TableId::T2;
  if (name == "T3" || name == "t3") return TableId::T3;
  if (name == "T4" || name == "t4") return TableId::T4;
  throw std::invalid_argument("unknown table: " + name);
}

double lambda_rule_db(Index m, Index p, double sigma, LambdaRule rule, double tau) {
  if (m <= 0 || p <= 0 || sigma < 0.0) {
    throw std::invalid_argument("lambda_rule_db: invalid inputs");
  }
  switch (rule) {
    case LambdaRule::SqrtMP:
      return 2.5 * sigma * std::sqrt(static_cast<double>(m) * static_cast<double>(p));
    case LambdaRule::SqrtNpObs:
      return 2.5 * sigma *
             std::sqrt(static_cast<double>(std::max(m, p)) * (1.0 - tau));
  }
  throw std::logic_error("unknown lambda rule");
}

void ExperimentConfig::validate() const {
  sim.validate();
  if (replicates < 1) throw std::invalid_argument("ExperimentConfig: replicates must be >= 1");
  if (estimators.empty()) throw std::invalid_argument("ExperimentConfig: no estimators");
  if (!(db_level > 0.0 && db_level < 1.0) || !(bayes_level > 0.0 && bayes_level < 1.0)) {
    throw std::invalid_argument("ExperimentConfig: interval levels must lie in (0,1)");
  }
  if (als_lambda < 0.0 || als_max_iters < 1 || als_tol <= 0.0) {
    throw std::invalid_argument("ExperimentConfig: invalid base-fit options");
  }
  if (flexible.k < 1 || flexible.a <= 0.0 || flexible.b <= 0.0) {
    throw std::invalid_argument("ExperimentConfig: invalid flexible prior");
  }
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream s;
  s << std::setprecision(17);
  s << "setting=" << (sim.setting == SimSetting::ExactLowRank ? "exact" : "approx")
    << ";m=" << sim.m << ";p=" << sim.p << ";r=" << sim.r << ";tau=" << sim.tau
    << ";sigma=" << sim.sigma << ";perturb_rank=" << sim.perturb_rank
    << ";perturb_scale=" << sim.perturb_scale << ";replicates=" << replicates
    << ";estimators=";
  for (auto e : estimators) s << to_string(e) << ",";
  s << ";als_lambda=" << als_lambda << ";als_max_iters=" << als_max_iters
    << ";als_tol=" << als_tol
    << ";lambda_rule=" << (lambda_rule == LambdaRule::SqrtMP ? "sqrt_mp" : "sqrt_np_obs")
    << ";ips=" << ips_correction << ";db_level=" << db_level
    << ";bayes_level=" << bayes_level << ";intervals=" << compute_intervals
    << ";temper_lambda=" << gibbs.temper_lambda << ";gibbs_sigma2=" << gibbs.sigma2
    << ";n_iters=" << gibbs.n_iters << ";burn_in=" << gibbs.burn_in
    << ";thin=" << gibbs.thin
    << ";semantics=" << (gibbs.semantics == TemperSemantics::ResidualDirect ? "residual" : "power")
    << ";K=" << flexible.k << ";a=" << flexible.a << ";b=" << flexible.b
    << ";fixed_truth=" << fixed_truth << ";seed=" << seed;
  return s.str();
}

std::string ExperimentConfig::fingerprint() const {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical());
  return s.str();
}

namespace {

struct ReplicateResult {
  // metric values per estimator name; absent key = not computed
  std::map<std::string, std::map<std::string, double>> values;
  std::map<std::string, std::string> failures;  // estimator -> error text
};

void record_errors(ReplicateResult& out, const std::string& tag, const ErrorReport& report) {
  out.values[tag]["MSE"] = report.mse;
  out.values[tag]["NMSE"] = report.nmse;
  if (report.pred) out.values[tag]["Pred"] = *report.pred;
}

void record_intervals(ReplicateResult& out, const std::string& tag, const IntervalMatrix& iv,
                      const Matrix& truth) {
  const IntervalStats stats = interval_stats(iv, truth);
  out.values[tag]["CI_length"] = stats.mean_length;
  out.values[tag]["coverage"] = stats.coverage;
}

bool wants(const ExperimentConfig& cfg, Estimator e) {
  for (auto x : cfg.estimators) {
    if (x == e) return true;
  }
  return false;
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, const Matrix* shared_truth,
                              std::uint64_t replicate) {
  ReplicateResult out;
  RngStream strm(cfg.seed, replicate);

  Matrix truth;
  if (shared_truth != nullptr) {
    truth = *shared_truth;
  } else {
    RngStream truth_rng = strm.substream(kRoleTruth);
    truth = gen_truth(cfg.sim, truth_rng);
  }
  RngStream obs_rng = strm.substream(kRoleObs);
  const ObservationSet obs = sample_observations(truth, cfg.sim.tau, cfg.sim.sigma, obs_rng);

  const bool want_als = wants(cfg, Estimator::Als);
  const bool want_db = wants(cfg, Estimator::Db);
  const double sigma2 = cfg.sim.sigma > 0.0 ? cfg.sim.sigma * cfg.sim.sigma : 1.0;

  if (want_als || want_db) {
    try {
      AlsConfig als_cfg;
      als_cfg.lambda = cfg.als_lambda;
      als_cfg.rank = cfg.sim.r;
      als_cfg.max_iters = cfg.als_max_iters;
      als_cfg.tol = cfg.als_tol;
      RngStream als_rng = strm.substream(kRoleAls);
      const AlsResult fit = als_fit(obs, als_cfg, als_rng);

      if (want_als) {
        // The reported als estimate keeps the observations verbatim and uses
        // the factor model only to fill the unobserved entries.
        const Matrix completed = impose_observed(fit.estimate.values, obs);
        record_errors(out, "als", compute_errors(completed, truth, obs));
      }
      if (want_db) {
        const Matrix m_db = debias(fit.estimate.values, obs, cfg.sim.r, cfg.ips_correction);
        record_errors(out, "db", compute_errors(m_db, truth, obs));
        if (cfg.compute_intervals) {
          const TruncatedSvd base = truncated_svd(fit.estimate.values, cfg.sim.r);
          const double lam = lambda_rule_db(cfg.sim.m, cfg.sim.p, cfg.sim.sigma,
                                            cfg.lambda_rule, cfg.sim.tau);
          const EntryVariance ev = entry_variance(base, lam, sigma2);
          const IntervalMatrix iv = confidence_interval(m_db, ev.v, 1.0 - cfg.db_level);
          record_intervals(out, "db", iv, truth);
        }
      }
    } catch (const std::exception& e) {
      if (want_als) out.failures["als"] = e.what();
      if (want_db) out.failures["db"] = e.what();
    }
  }

  const auto run_chain = [&](Estimator which, std::uint64_t role, const PriorSpec& prior) {
    const std::string tag = to_string(which);
    try {
      GibbsConfig chain_cfg = cfg.gibbs;
      chain_cfg.sigma2 = sigma2;
      chain_cfg.prior = prior;
      RngStream chain_rng = strm.substream(role);
      const PosteriorSamples samples = gibbs_run(obs, chain_cfg, chain_rng);
      record_errors(out, tag, compute_errors(posterior_mean(samples).values, truth, obs));
      if (cfg.compute_intervals) {
        record_intervals(out, tag, credible_interval(samples, cfg.bayes_level), truth);
      }
    } catch (const std::exception& e) {
      out.failures[tag] = e.what();
    }
  };

  if (wants(cfg, Estimator::FBayes)) {
    run_chain(Estimator::FBayes, kRoleFixedChain, FixedRankPrior{cfg.sim.r});
  }
  if (wants(cfg, Estimator::Bayes)) {
    run_chain(Estimator::Bayes, kRoleFlexChain, cfg.flexible);
  }
  return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  Matrix shared_truth;
  const Matrix* shared = nullptr;
  if (cfg.fixed_truth) {
    RngStream truth_rng = RngStream(cfg.seed, kFixedTruthStream).substream(kRoleTruth);
    shared_truth = gen_truth(cfg.sim, truth_rng);
    shared = &shared_truth;
  }

  std::vector<ReplicateResult> results(static_cast<std::size_t>(cfg.replicates));
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_workers =
      std::max(1, std::min(cfg.workers > 0 ? cfg.workers : std::max(hw, 1), cfg.replicates));

  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= cfg.replicates) break;
      results[static_cast<std::size_t>(k)] =
          run_replicate(cfg, shared, static_cast<std::uint64_t>(k));
    }
  };
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  const std::string fp = cfg.fingerprint();
  const std::string setting = cfg.sim.setting == SimSetting::ExactLowRank ? "exact" : "approx";
  std::vector<ResultRow> rows;
  for (auto est : cfg.estimators) {
    const std::string tag = to_string(est);
    int failures = 0;
    for (const auto& rep : results) {
      if (rep.failures.count(tag) != 0) ++failures;
    }
    for (const char* metric : kMetricNames) {
      std::vector<double> values;
      for (const auto& rep : results) {
        auto est_it = rep.values.find(tag);
        if (est_it == rep.values.end()) continue;
        auto it = est_it->second.find(metric);
        if (it != est_it->second.end()) values.push_back(it->second);
      }
      // An all-failed estimator still gets its headline rows so the failure
      // count is never silently dropped.
      const bool keep_empty =
          values.empty() && failures > 0 && (metric == std::string("MSE") || metric == std::string("NMSE"));
      if (values.empty() && !keep_empty) continue;
      double mean = std::numeric_limits<double>::quiet_NaN();
      if (!values.empty()) {
        mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
      }
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      ResultRow row;
      row.fingerprint = fp;
      row.setting = setting;
      row.m = cfg.sim.m;
      row.p = cfg.sim.p;
      row.r = cfg.sim.r;
      row.tau = cfg.sim.tau;
      row.estimator = tag;
      row.metric = metric;
      row.mean = mean;
      row.std_defined = values.size() >= 2;
      row.std_dev = row.std_defined ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
      row.n_reps = cfg.replicates;
      row.n_failures = failures;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "fingerprint,setting,m,p,r,tau,estimator,metric,mean,std,n_reps,n_failures\n";
  out << std::setprecision(12);
  for (const auto& r : rows) {
    out << r.fingerprint << ',' << r.setting << ',' << r.m << ',' << r.p << ',' << r.r << ','
        << r.tau << ',' << r.estimator << ',' << r.metric << ',' << r.mean << ',';
    if (r.std_defined) {
      out << r.std_dev;
    } else {
      out << "NA";
    }
    out << ',' << r.n_reps << ',' << r.n_failures << '\n';
  }
}

void write_rows_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_rows_csv(f, rows);
}

void write_rows_json(const std::string& path, const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"fingerprint", r.fingerprint}, {"setting", r.setting},
                       {"m", r.m},                     {"p", r.p},
                       {"r", r.r},                     {"tau", r.tau},
                       {"estimator", r.estimator},     {"metric", r.metric},
                       {"mean", r.mean},               {"n_reps", r.n_reps},
                       {"n_failures", r.n_failures}};
    if (r.std_defined) {
      row["std"] = r.std_dev;
    } else {
      row["std"] = nullptr;
    }
    arr.push_back(std::move(row));
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << arr.dump(2) << '\n';
}

namespace {

std::string format_table_text(TableId id, const TableOptions& opt,
                              const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  s << "table " << to_string(id) << "  (" << (id == TableId::T1 || id == TableId::T3 ? "exact" : "approximate")
    << " low-rank" << (id == TableId::T3 || id == TableId::T4 ? ", fixed truth" : "") << ")\n";
  s << "seed " << opt.seed << ", " << (opt.desk ? "desk" : "full") << " scale\n\n";
  // Group rows by cell, one block per (r, p, tau).
  std::string cell_key;
  std::map<std::string, std::map<std::string, const ResultRow*>> by_metric;
  auto flush = [&]() {
    if (by_metric.empty()) return;
    for (const auto& [metric, per_est] : by_metric) {
      s << "  " << std::left << std::setw(10) << metric << std::right;
      for (const auto& est : {"als", "db", "f_bayes", "bayes"}) {
        auto it = per_est.find(est);
        if (it == per_est.end()) continue;
        std::ostringstream v;
        v << std::fixed << std::setprecision(3) << it->second->mean << " (";
        if (it->second->std_defined) {
          v << std::fixed << std::setprecision(3) << it->second->std_dev;
        } else {
          v << "NA";
        }
        v << ")";
        if (it->second->n_failures > 0) v << " [" << it->second->n_failures << " failed]";
        s << "  " << std::setw(11) << est << "=" << v.str();
      }
      s << '\n';
    }
    by_metric.clear();
  };
  for (const auto& r : rows) {
    std::ostringstream key;
    key << "r=" << r.r << " p=" << r.p << " tau=" << std::fixed << std::setprecision(2) << r.tau;
    if (key.str() != cell_key) {
      flush();
      cell_key = key.str();
      s << cell_key << '\n';
    }
    by_metric[r.metric][r.estimator] = &r;
  }
  flush();
  return s.str();
}

}  // namespace

TableReport reproduce_table(TableId id, const TableOptions& opt) {
  const bool approx = id == TableId::T2 || id == TableId::T4;
  const bool fixed_truth = id == TableId::T3 || id == TableId::T4;
  const int replicates = opt.replicates > 0 ? opt.replicates : (opt.desk ? 20 : 50);

  TableReport report;
  int cell = 0;
  for (Index r : {Index{2}, Index{5}}) {
    for (Index p : {Index{100}, Index{1000}}) {
      for (double tau : {0.2, 0.5, 0.8}) {
        ExperimentConfig cfg;
        cfg.sim.m = 100;
        cfg.sim.p = p;
        cfg.sim.r = r;
        cfg.sim.tau = tau;
        cfg.sim.sigma = 1.0;
        cfg.sim.setting = approx ? SimSetting::ApproxLowRank : SimSetting::ExactLowRank;
        cfg.replicates = replicates;
        cfg.estimators = opt.estimators;
        if (opt.desk && opt.time_budget && p == 1000) {
          cfg.estimators.erase(
              std::remove_if(cfg.estimators.begin(), cfg.estimators.end(),
                             [](Estimator e) {
                               return e == Estimator::FBayes || e == Estimator::Bayes;
                             }),
              cfg.estimators.end());
          if (cfg.estimators.empty()) {
            ++cell;
            continue;
          }
        }
        cfg.als_lambda = opt.als_lambda;
        cfg.lambda_rule = opt.lambda_rule;
        cfg.ips_correction = opt.ips_correction;
        cfg.gibbs.semantics = opt.semantics;
        cfg.compute_intervals = fixed_truth;
        cfg.fixed_truth = fixed_truth;
        cfg.workers = opt.workers;
        cfg.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(cell) +
                                          1000 * static_cast<std::uint64_t>(id));
        auto rows = run_experiment(cfg);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
        ++cell;
      }
    }
  }

  report.text = format_table_text(id, opt, report.rows);
  std::filesystem::create_directories(opt.out_dir);
  const std::string base = opt.out_dir + "/" + to_string(id);
  write_rows_csv(base + ".csv", report.rows);
  write_rows_json(base + ".json", report.rows);
  std::ofstream txt(base + ".txt");
  if (!txt) throw std::runtime_error("cannot open for writing: " + base + ".txt");
  txt << report.text;
  return report;
}

void emit_figure_data(const FigureConfig& cfg) {
  cfg.sim.validate();
  if (cfg.retained_draws < 10000) {
    throw std::invalid_argument("emit_figure_data: need at least 10000 retained draws");
  }
  if (cfg.entries.empty()) {
    throw std::invalid_argument("emit_figure_data: no entries requested");
  }
  for (const auto& [i, j] : cfg.entries) {
    if (i < 0 || i >= cfg.sim.m || j < 0 || j >= cfg.sim.p) {
      throw std::invalid_argument("emit_figure_data: entry outside matrix");
    }
  }

  RngStream strm(cfg.seed, 0);
  RngStream truth_rng = strm.substream(kRoleTruth);
  const Matrix truth = gen_truth(cfg.sim, truth_rng);
  RngStream obs_rng = strm.substream(kRoleObs);
  const ObservationSet obs = sample_observations(truth, cfg.sim.tau, cfg.sim.sigma, obs_rng);
  const double sigma2 = cfg.sim.sigma > 0.0 ? cfg.sim.sigma * cfg.sim.sigma : 1.0;

  AlsConfig als_cfg;
  als_cfg.lambda = cfg.als_lambda;
  als_cfg.rank = cfg.sim.r;
  RngStream als_rng = strm.substream(kRoleAls);
  const AlsResult fit = als_fit(obs, als_cfg, als_rng);
  const Matrix m_db = debias(fit.estimate.values, obs, cfg.sim.r, cfg.ips_correction);
  const TruncatedSvd base = truncated_svd(fit.estimate.values, cfg.sim.r);
  const double lam =
      lambda_rule_db(cfg.sim.m, cfg.sim.p, cfg.sim.sigma, cfg.lambda_rule, cfg.sim.tau);
  const EntryVariance ev = entry_variance(base, lam, sigma2);

  GibbsConfig chain_cfg;
  chain_cfg.sigma2 = sigma2;
  chain_cfg.semantics = cfg.semantics;
  chain_cfg.prior = FixedRankPrior{cfg.sim.r};
  chain_cfg.burn_in = 100;
  chain_cfg.n_iters = chain_cfg.burn_in + cfg.retained_draws;
  RngStream chain_rng = strm.substream(kRoleFixedChain);
  const PosteriorSamples samples = gibbs_run(obs, chain_cfg, chain_rng);

  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& [i, j] : cfg.entries) {
    std::ostringstream name;
    name << cfg.out_dir << "/entry_" << (i + 1) << "_" << (j + 1) << ".csv";
    std::ofstream f(name.str());
    if (!f) throw std::runtime_error("cannot open for writing: " + name.str());
    f << std::setprecision(17);
    f << "# m_db=" << m_db(i, j) << '\n';
    f << "# v=" << ev.v(i, j) << '\n';
    f << "# truth=" << truth(i, j) << '\n';
    f << "draw\n";
    for (const auto& d : samples.draws) {
      f << d.u.row(i).dot(d.v.row(j)) << '\n';
    }
  }
}

}  // namespace lrmc
