#pragma once

#include "lrmc/linalg.hpp"
#include "lrmc/types.hpp"

#include <utility>
#include <vector>

namespace lrmc {

enum class IntervalMethod { DebiasCi, BayesCri };

/// Entrywise lower/upper bounds at a stated nominal level.
struct IntervalMatrix {
  Matrix lower;
  Matrix upper;
  double level = 0.0;
  IntervalMethod method = IntervalMethod::DebiasCi;
};

/// Entrywise variances plus the entries whose row and column leverage are both
/// zero (width-0 intervals; flagged instead of failing).
struct EntryVariance {
  Matrix v;
  std::vector<std::pair<Index, Index>> zero_leverage;
};

struct DebiasResult {
  Matrix m_db;
  Matrix u_db;
  Matrix v_db;
  double sigma2 = 1.0;
  double lambda = 0.0;
};

/// Rank-r projection of the base estimate after its values on the observed
/// set are replaced by the observations:
///   rank_r_project(m_hat - s * P_Omega(m_hat - Y), r)
/// with s = 1 verbatim, or s = (m p)/n when `ips_correction` scales the
/// correction by the inverse observation rate.
Matrix debias(const Matrix& m_hat, const ObservationSet& obs, Index r,
              bool ips_correction = false);

/// Entrywise variance built from the rank-r SVD of the base estimate:
/// with U' = U (Sigma + lambda I)^{1/2} and V' likewise,
///   v_ij = sigma2 * [U'_i (U'^T U')^{-1} U'_i^T + V'_j (V'^T V')^{-1} V'_j^T].
/// The row term depends only on i and the column term only on j.
EntryVariance entry_variance(const TruncatedSvd& base_fit, double lambda, double sigma2);

/// Two-sided interval m_db +- z * sqrt(v) with z the standard normal
/// (1 - alpha/2) quantile; nominal level is 1 - alpha.
IntervalMatrix confidence_interval(const Matrix& m_db, const Matrix& v, double alpha);

struct IntervalStats {
  double mean_length = 0.0;
  double coverage = 0.0;
};

/// Mean entrywise width and the fraction of entries whose truth lies inside.
IntervalStats interval_stats(const IntervalMatrix& iv, const Matrix& truth);

}  // namespace lrmc
