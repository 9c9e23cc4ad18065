#include "lrmc/metrics.hpp"

#include "lrmc/masking.hpp"

namespace lrmc {

ErrorReport compute_errors(const Matrix& est, const Matrix& truth, const ObservationSet& obs) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols() ||
      est.rows() != obs.rows || est.cols() != obs.cols) {
    throw std::invalid_argument("compute_errors: shape mismatch");
  }
  const double truth_sq = truth.squaredNorm();
  if (truth_sq == 0.0) {
    throw std::invalid_argument("compute_errors: NMSE undefined for all-zero truth");
  }
  const Matrix diff = est - truth;
  const double diff_sq = diff.squaredNorm();
  const double mp = static_cast<double>(est.rows()) * static_cast<double>(est.cols());

  ErrorReport report;
  report.mse = diff_sq / mp;
  report.nmse = diff_sq / truth_sq;
  const double unobserved = mp - static_cast<double>(obs.n());
  if (unobserved > 0.0) {
    report.pred = complement_project(diff, obs).squaredNorm() / unobserved;
  }
  return report;
}

}  // namespace lrmc
