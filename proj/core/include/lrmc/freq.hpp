#pragma once

#include "lrmc/rng.hpp"
#include "lrmc/types.hpp"

#include <vector>

namespace lrmc {

struct AlsConfig {
  double lambda = 0.0;   // ridge penalty on both factors
  Index rank = 1;
  int max_iters = 200;   // full sweeps
  double tol = 1e-6;     // relative objective-change stopping threshold
};

struct SoftImputeConfig {
  double lambda = 0.0;
  int max_iters = 300;
  double tol = 1e-6;
};

struct AlsResult {
  FactorPair factors;
  CompletionEstimate estimate;           // U V^T
  std::vector<double> objective_trace;   // after every half-sweep
};

/// Alternating ridge on the two factors of M = U V^T against the observed
/// entries. The penalized objective is non-increasing across half-sweeps.
/// Initial factors are i.i.d. N(0, 1/rank) from `rng` unless `warm_start`
/// supplies them. Rows with no observations solve to zero under lambda = 0.
AlsResult als_fit(const ObservationSet& obs, const AlsConfig& cfg, RngStream& rng,
                  const FactorPair* warm_start = nullptr);

/// Ridge solve for one factor row: (G + lambda I) x = rhs with
/// G = sum of v v^T over the observed positions, rhs = sum of y * v.
/// Exposed so the normal-equation contract is directly testable.
Vector als_solve_row(const std::vector<std::pair<Index, double>>& observed,
                     const Matrix& other_factor, double lambda);

/// Soft-impute fixed-point iteration for the nuclear-norm objective:
/// Z <- svt(P_Omega(Y) + P_complement(Z), lambda) from Z = 0, stopping on
/// relative Frobenius change. The regularized objective is non-increasing;
/// pass `objective_trace` to record it per iteration.
CompletionEstimate soft_impute_fit(const ObservationSet& obs, const SoftImputeConfig& cfg,
                                   std::vector<double>* objective_trace = nullptr);

}  // namespace lrmc
