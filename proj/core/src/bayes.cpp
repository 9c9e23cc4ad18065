#include "lrmc/bayes.hpp"

#include "lrmc/linalg.hpp"
#include "lrmc/masking.hpp"
#include "lrmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lrmc {

double GibbsConfig::resolved_lambda() const {
  if (temper_lambda > 0.0) return temper_lambda;
  return 1.0 / (4.0 * sigma2);
}

double GibbsConfig::residual_coefficient() const {
  const double lam = resolved_lambda();
  return semantics == TemperSemantics::ResidualDirect ? lam : lam / (2.0 * sigma2);
}

Index GibbsConfig::inner_dim() const {
  if (const auto* fixed = std::get_if<FixedRankPrior>(&prior)) return fixed->rank;
  return std::get<FlexiblePrior>(prior).k;
}

RowConditional row_conditional(const std::vector<std::pair<Index, double>>& observed,
                               const Matrix& other_factor, double resid_coef,
                               const Vector& prior_precision_diag) {
  const Index k = other_factor.cols();
  RowConditional rc;
  rc.precision = Matrix(prior_precision_diag.asDiagonal());
  Vector rhs = Vector::Zero(k);
  const double two_c = 2.0 * resid_coef;
  for (const auto& [idx, y] : observed) {
    const auto row = other_factor.row(idx);
    rc.precision.noalias() += two_c * (row.transpose() * row);
    rhs.noalias() += (two_c * y) * row.transpose();
  }
  Eigen::LLT<Matrix> llt(rc.precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("row_conditional: precision not positive definite");
  }
  rc.mean = llt.solve(rhs);
  return rc;
}

GammaConditional gamma_conditional(double a, double b, Index m, Index p,
                                   double u_col_sq, double v_col_sq) {
  if (a <= 0.0 || b <= 0.0) {
    throw std::invalid_argument("gamma_conditional: a and b must be positive");
  }
  GammaConditional gc;
  gc.shape = a + 0.5 * static_cast<double>(m + p);
  gc.rate = b + 0.5 * (u_col_sq + v_col_sq);
  return gc;
}

namespace {

void validate_config(const ObservationSet& obs, const GibbsConfig& cfg) {
  if (cfg.sigma2 <= 0.0) throw std::invalid_argument("gibbs_run: sigma2 must be positive");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_iters) {
    throw std::invalid_argument("gibbs_run: need 0 <= burn_in < n_iters");
  }
  if (cfg.thin < 1 || (cfg.n_iters - cfg.burn_in) % cfg.thin != 0) {
    throw std::invalid_argument("gibbs_run: thin must divide n_iters - burn_in");
  }
  const Index k = cfg.inner_dim();
  if (k < 1 || k > std::min(obs.rows, obs.cols)) {
    throw std::invalid_argument("gibbs_run: inner dimension out of range");
  }
  if (const auto* flex = std::get_if<FlexiblePrior>(&cfg.prior)) {
    if (flex->a <= 0.0 || flex->b <= 0.0) {
      throw std::invalid_argument("gibbs_run: flexible prior needs a > 0, b > 0");
    }
  }
}

double masked_residual_sq(const Matrix& u, const Matrix& v, const ObservationIndex& index) {
  double out = 0.0;
  for (Index i = 0; i < static_cast<Index>(index.by_row.size()); ++i) {
    for (const auto& [j, y] : index.by_row[static_cast<std::size_t>(i)]) {
      const double r = y - u.row(i).dot(v.row(j));
      out += r * r;
    }
  }
  return out;
}

void sweep_rows(Matrix& target, const Matrix& other,
                const std::vector<std::vector<std::pair<Index, double>>>& observed,
                double coef, const Vector& prior_diag, RngStream& rng) {
  for (Index i = 0; i < target.rows(); ++i) {
    const RowConditional rc =
        row_conditional(observed[static_cast<std::size_t>(i)], other, coef, prior_diag);
    target.row(i) = gaussian_vector(rc.mean, rc.precision, rng);
  }
}

}  // namespace

PosteriorSamples gibbs_run(const ObservationSet& obs, const GibbsConfig& cfg, RngStream& rng,
                           const FactorPair* init) {
  obs.validate();
  validate_config(obs, cfg);

  const Index k = cfg.inner_dim();
  const double coef = cfg.residual_coefficient();
  const auto* flex = std::get_if<FlexiblePrior>(&cfg.prior);
  const ObservationIndex index(obs);

  Matrix u(obs.rows, k), v(obs.cols, k);
  if (init != nullptr) {
    if (init->u.rows() != obs.rows || init->v.rows() != obs.cols || init->inner_dim() != k) {
      throw std::invalid_argument("gibbs_run: init shape mismatch");
    }
    u = init->u;
    v = init->v;
  } else {
    const double init_sd = 1.0 / std::sqrt(static_cast<double>(k));
    for (Index i = 0; i < u.rows(); ++i) {
      for (Index c = 0; c < k; ++c) u(i, c) = init_sd * rng.normal();
    }
    for (Index j = 0; j < v.rows(); ++j) {
      for (Index c = 0; c < k; ++c) v(j, c) = init_sd * rng.normal();
    }
  }
  Vector gamma = Vector::Constant(k, flex ? flex->b / flex->a : 1.0);

  PosteriorSamples samples;
  samples.config = cfg;
  samples.rows = obs.rows;
  samples.cols = obs.cols;
  samples.seed = rng.seed();
  const int retained = (cfg.n_iters - cfg.burn_in) / cfg.thin;
  samples.draws.reserve(static_cast<std::size_t>(retained));

  for (int t = 1; t <= cfg.n_iters; ++t) {
    const Vector prior_diag = flex ? Vector(gamma.cwiseInverse()) : Vector(Vector::Ones(k));
    sweep_rows(u, v, index.by_row, coef, prior_diag, rng);
    sweep_rows(v, u, index.by_col, coef, prior_diag, rng);
    if (flex) {
      for (Index c = 0; c < k; ++c) {
        const GammaConditional gc = gamma_conditional(
            flex->a, flex->b, obs.rows, obs.cols, u.col(c).squaredNorm(), v.col(c).squaredNorm());
        gamma[c] = 1.0 / rng.gamma(gc.shape, gc.rate);
      }
    }
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      samples.draws.push_back(FactorPair{u, v});
      if (flex) samples.gamma_draws.push_back(gamma);
      samples.residual_trace.push_back(masked_residual_sq(u, v, index));
    }
  }
  return samples;
}

CompletionEstimate posterior_mean(const PosteriorSamples& samples) {
  if (samples.draws.empty()) {
    throw std::invalid_argument("posterior_mean: no draws");
  }
  Matrix sum = Matrix::Zero(samples.rows, samples.cols);
  for (const auto& d : samples.draws) {
    sum.noalias() += d.u * d.v.transpose();
  }
  CompletionEstimate est;
  est.values = sum / static_cast<double>(samples.draws.size());
  const bool flex = std::holds_alternative<FlexiblePrior>(samples.config.prior);
  est.method = flex ? "bayes" : "f_bayes";
  std::ostringstream s;
  s << "temper_lambda=" << samples.config.resolved_lambda()
    << ",n_iters=" << samples.config.n_iters << ",burn_in=" << samples.config.burn_in
    << ",thin=" << samples.config.thin;
  if (flex) {
    const auto& fp = std::get<FlexiblePrior>(samples.config.prior);
    s << ",K=" << fp.k << ",a=" << fp.a << ",b=" << fp.b;
  } else {
    s << ",rank=" << std::get<FixedRankPrior>(samples.config.prior).rank;
  }
  est.params = s.str();
  est.seed = samples.seed;
  return est;
}

IntervalMatrix credible_interval(const PosteriorSamples& samples, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("credible_interval: level must lie in (0,1)");
  }
  const Index t = samples.n_draws();
  if (t < 20) {
    throw std::invalid_argument("credible_interval: need at least 20 draws");
  }
  const double q_lo = (1.0 - level) / 2.0;
  const double q_hi = 1.0 - q_lo;

  IntervalMatrix iv;
  iv.lower.resize(samples.rows, samples.cols);
  iv.upper.resize(samples.rows, samples.cols);
  iv.level = level;
  iv.method = IntervalMethod::BayesCri;

  // Materialize draw values in column blocks to bound memory on wide problems.
  const Index target_doubles = Index{1} << 24;
  const Index block = std::max<Index>(1, target_doubles / std::max<Index>(1, t * samples.rows));
  std::vector<double> values(static_cast<std::size_t>(t));
  for (Index j0 = 0; j0 < samples.cols; j0 += block) {
    const Index w = std::min(block, samples.cols - j0);
    Matrix buf(t, samples.rows * w);
    for (Index d = 0; d < t; ++d) {
      const auto& fp = samples.draws[static_cast<std::size_t>(d)];
      Matrix slab = fp.u * fp.v.middleRows(j0, w).transpose();  // m x w
      buf.row(d) = Eigen::Map<const Vector>(slab.data(), slab.size()).transpose();
    }
    for (Index c = 0; c < samples.rows * w; ++c) {
      for (Index d = 0; d < t; ++d) values[static_cast<std::size_t>(d)] = buf(d, c);
      std::sort(values.begin(), values.end());
      const Index i = c % samples.rows;
      const Index j = j0 + c / samples.rows;
      iv.lower(i, j) = quantile_type7_sorted(values, q_lo);
      iv.upper(i, j) = quantile_type7_sorted(values, q_hi);
    }
  }
  return iv;
}

ChainDiagnostics chain_diagnostics(const PosteriorSamples& samples, int max_entries) {
  if (samples.n_draws() < 2) {
    throw std::invalid_argument("chain_diagnostics: need at least 2 draws");
  }
  ChainDiagnostics diag;
  diag.residual_trace = samples.residual_trace;

  RngStream pick(0x657373u, static_cast<std::uint64_t>(samples.rows * samples.cols));
  const int n_entries = static_cast<int>(
      std::min<Index>(max_entries, samples.rows * samples.cols));
  std::vector<double> chain(static_cast<std::size_t>(samples.n_draws()));
  for (int e = 0; e < n_entries; ++e) {
    const Index i = static_cast<Index>(pick.uniform_int(static_cast<std::uint64_t>(samples.rows - 1)));
    const Index j = static_cast<Index>(pick.uniform_int(static_cast<std::uint64_t>(samples.cols - 1)));
    for (Index d = 0; d < samples.n_draws(); ++d) {
      const auto& fp = samples.draws[static_cast<std::size_t>(d)];
      chain[static_cast<std::size_t>(d)] = fp.u.row(i).dot(fp.v.row(j));
    }
    diag.entry_ess.push_back(effective_sample_size(chain));
  }
  std::vector<double> sorted = diag.entry_ess;
  std::sort(sorted.begin(), sorted.end());
  diag.ess_min = sorted.front();
  diag.ess_median = sorted[sorted.size() / 2];
  return diag;
}

}  // namespace lrmc
