#pragma once

#include "lrmc/debias.hpp"
#include "lrmc/rng.hpp"
#include "lrmc/types.hpp"

#include <variant>
#include <vector>

namespace lrmc {

/// How the tempering parameter enters the target. ResidualDirect multiplies
/// the squared residual itself, exp(-lambda * ||P_Omega(Y - U V^T)||_F^2);
/// GaussianPower raises the Gaussian likelihood to lambda, which puts
/// lambda / (2 sigma2) on the squared residual.
enum class TemperSemantics { ResidualDirect, GaussianPower };

struct FixedRankPrior {
  Index rank = 1;  // standard normal factor columns at the known rank
};

struct FlexiblePrior {
  Index k = 10;     // number of factor columns
  double a = 1.0;   // gamma_k^{-1} ~ Gamma(a, b), one scale per column pair
  double b = 0.01;
};

using PriorSpec = std::variant<FixedRankPrior, FlexiblePrior>;

struct GibbsConfig {
  double temper_lambda = 0.0;  // <= 0 resolves to the default 1 / (4 sigma2)
  double sigma2 = 1.0;
  int n_iters = 600;
  int burn_in = 100;
  int thin = 1;
  TemperSemantics semantics = TemperSemantics::ResidualDirect;
  PriorSpec prior = FixedRankPrior{1};

  double resolved_lambda() const;
  /// Coefficient on the squared residual in the exponent of the target.
  double residual_coefficient() const;
  Index inner_dim() const;
};

/// Post-burn-in factor draws, in chain order.
struct PosteriorSamples {
  std::vector<FactorPair> draws;
  std::vector<Vector> gamma_draws;      // flexible prior only, one per draw
  std::vector<double> residual_trace;   // ||P_Omega(Y - U V^T)||_F^2 per draw
  GibbsConfig config;
  Index rows = 0;
  Index cols = 0;
  std::uint64_t seed = 0;

  Index n_draws() const { return static_cast<Index>(draws.size()); }
};

/// Gaussian conditional of one factor row under the tempered target:
/// precision D + 2 c * sum(v v^T), mean precision^{-1} (2 c * sum(y v)),
/// where c is the residual coefficient and D the prior precision diagonal.
struct RowConditional {
  Matrix precision;
  Vector mean;
};
RowConditional row_conditional(const std::vector<std::pair<Index, double>>& observed,
                               const Matrix& other_factor, double resid_coef,
                               const Vector& prior_precision_diag);

/// Conjugate update of one column scale: gamma_k^{-1} | U, V is
/// Gamma(a + (m+p)/2, b + (||U_.k||^2 + ||V_.k||^2)/2).
struct GammaConditional {
  double shape = 0.0;
  double rate = 0.0;
};
GammaConditional gamma_conditional(double a, double b, Index m, Index p,
                                   double u_col_sq, double v_col_sq);

/// Systematic-scan Gibbs chain over rows of U, rows of V, then (flexible
/// prior only) the column scales. Deterministic given (obs, cfg, rng state).
/// `init` overrides the default N(0, 1/k) starting factors.
PosteriorSamples gibbs_run(const ObservationSet& obs, const GibbsConfig& cfg, RngStream& rng,
                           const FactorPair* init = nullptr);

/// Entrywise average of U^(t) V^(t)T over the retained draws.
CompletionEstimate posterior_mean(const PosteriorSamples& samples);

/// Equal-tailed interval per entry from type-7 empirical quantiles of the
/// draw sequence. Requires at least 20 draws.
IntervalMatrix credible_interval(const PosteriorSamples& samples, double level);

struct ChainDiagnostics {
  std::vector<double> entry_ess;        // one value per sampled entry
  double ess_min = 0.0;
  double ess_median = 0.0;
  std::vector<double> residual_trace;
};

/// ESS estimates for a deterministic subsample of entries plus the residual
/// trace recorded during the run.
ChainDiagnostics chain_diagnostics(const PosteriorSamples& samples, int max_entries = 64);

}  // namespace lrmc
