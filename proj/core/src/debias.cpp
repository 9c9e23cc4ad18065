#include "lrmc/debias.hpp"

#include "lrmc/masking.hpp"
#include "lrmc/stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace lrmc {

Matrix debias(const Matrix& m_hat, const ObservationSet& obs, Index r, bool ips_correction) {
  if (m_hat.rows() != obs.rows || m_hat.cols() != obs.cols) {
    throw std::invalid_argument("debias: shape mismatch");
  }
  if (r < 1 || r > std::min(obs.rows, obs.cols)) {
    throw std::invalid_argument("debias: rank out of range");
  }
  const Matrix y = observed_dense(obs);
  double scale = 1.0;
  if (ips_correction) {
    scale = static_cast<double>(obs.rows) * static_cast<double>(obs.cols) /
            static_cast<double>(obs.n());
  }
  const Matrix corrected = m_hat - scale * mask_project(m_hat - y, obs);
  return rank_r_project(corrected, r);
}

namespace {

// Leverage vector a with a_i = W_i (W^T W)^{-1} W_i^T for W = U (Sigma+lambda I)^{1/2}.
Vector leverages(const Matrix& basis, const Vector& sigma, double lambda) {
  Vector scaled = (sigma.array() + lambda).matrix();
  for (Index k = 0; k < scaled.size(); ++k) {
    if (scaled[k] <= 0.0) {
      throw std::runtime_error("entry_variance: singular Gram matrix (sigma_k + lambda <= 0)");
    }
  }
  Matrix w = basis * scaled.array().sqrt().matrix().asDiagonal();
  Matrix gram = w.transpose() * w;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("entry_variance: singular Gram matrix");
  }
  // a_i = w_i gram^{-1} w_i^T computed column-wise: rowwise dot of W and W gram^{-1}.
  Matrix solved = llt.solve(w.transpose()).transpose();
  return (w.array() * solved.array()).rowwise().sum();
}

}  // namespace

EntryVariance entry_variance(const TruncatedSvd& base_fit, double lambda, double sigma2) {
  if (sigma2 <= 0.0) {
    throw std::invalid_argument("entry_variance: sigma2 must be positive");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("entry_variance: lambda must be nonnegative");
  }
  const Vector row_lev = leverages(base_fit.u, base_fit.sigma, lambda);
  const Vector col_lev = leverages(base_fit.v, base_fit.sigma, lambda);

  EntryVariance out;
  out.v = sigma2 * (row_lev.replicate(1, col_lev.size()) +
                    col_lev.transpose().replicate(row_lev.size(), 1));
  for (Index i = 0; i < row_lev.size(); ++i) {
    if (row_lev[i] > 0.0) continue;
    for (Index j = 0; j < col_lev.size(); ++j) {
      if (col_lev[j] <= 0.0) {
        out.zero_leverage.emplace_back(i, j);
      }
    }
  }
  return out;
}

IntervalMatrix confidence_interval(const Matrix& m_db, const Matrix& v, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("confidence_interval: alpha must lie in (0,1)");
  }
  if (m_db.rows() != v.rows() || m_db.cols() != v.cols()) {
    throw std::invalid_argument("confidence_interval: shape mismatch");
  }
  if ((v.array() < 0.0).any()) {
    throw std::invalid_argument("confidence_interval: negative variance");
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const Matrix half = z * v.array().sqrt().matrix();
  IntervalMatrix iv;
  iv.lower = m_db - half;
  iv.upper = m_db + half;
  iv.level = 1.0 - alpha;
  iv.method = IntervalMethod::DebiasCi;
  return iv;
}

IntervalStats interval_stats(const IntervalMatrix& iv, const Matrix& truth) {
  if (iv.lower.rows() != truth.rows() || iv.lower.cols() != truth.cols()) {
    throw std::invalid_argument("interval_stats: shape mismatch");
  }
  IntervalStats stats;
  stats.mean_length = (iv.upper - iv.lower).mean();
  const auto inside =
      (truth.array() >= iv.lower.array()) && (truth.array() <= iv.upper.array());
  stats.coverage = inside.cast<double>().mean();
  return stats;
}

}  // namespace lrmc
