#include "lrmc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lrmc {

void SimSpec::validate() const {
  if (m <= 0 || p <= 0) throw std::invalid_argument("SimSpec: dimensions must be positive");
  if (r < 1 || r > std::min(m, p)) throw std::invalid_argument("SimSpec: rank out of range");
  if (setting == SimSetting::ApproxLowRank &&
      (perturb_rank < 1 || perturb_rank > std::min(m, p))) {
    throw std::invalid_argument("SimSpec: perturb_rank out of range");
  }
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("SimSpec: tau must lie in [0,1)");
  if (sigma < 0.0) throw std::invalid_argument("SimSpec: sigma must be nonnegative");
}

namespace {

Matrix std_normal_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace

Matrix gen_truth(const SimSpec& spec, RngStream& rng) {
  spec.validate();
  const Matrix u = std_normal_matrix(spec.m, spec.r, rng);
  const Matrix v = std_normal_matrix(spec.p, spec.r, rng);
  Matrix truth = u * v.transpose();
  if (spec.setting == SimSetting::ApproxLowRank) {
    const Matrix a = std_normal_matrix(spec.m, spec.perturb_rank, rng);
    const Matrix b = std_normal_matrix(spec.p, spec.perturb_rank, rng);
    truth.noalias() += spec.perturb_scale * (a * b.transpose());
  }
  return truth;
}

ObservationSet sample_observations(const Matrix& truth, double tau, double sigma,
                                   RngStream& rng) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw std::invalid_argument("sample_observations: tau must lie in [0,1)");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("sample_observations: sigma must be nonnegative");
  }
  const Index total = truth.rows() * truth.cols();
  const Index n = static_cast<Index>(std::llround((1.0 - tau) * static_cast<double>(total)));
  if (n < 1) {
    throw std::invalid_argument("sample_observations: no entries would be observed");
  }

  // Partial Fisher-Yates over linear indices, then row-major canonical order
  // so the noise assignment below is independent of the shuffle path.
  std::vector<Index> cells(static_cast<std::size_t>(total));
  std::iota(cells.begin(), cells.end(), Index{0});
  for (Index i = 0; i < n; ++i) {
    const auto j = static_cast<Index>(
        rng.uniform_int(static_cast<std::uint64_t>(total - 1 - i))) + i;
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
  }
  cells.resize(static_cast<std::size_t>(n));
  std::sort(cells.begin(), cells.end());

  ObservationSet obs;
  obs.rows = truth.rows();
  obs.cols = truth.cols();
  obs.entries.reserve(static_cast<std::size_t>(n));
  for (Index cell : cells) {
    const Index i = cell / truth.cols();
    const Index j = cell % truth.cols();
    obs.entries.push_back({i, j, truth(i, j) + sigma * rng.normal()});
  }
  return obs;
}

}  // namespace lrmc
