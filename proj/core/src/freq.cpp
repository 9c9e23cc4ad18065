#include "lrmc/freq.hpp"

#include "lrmc/linalg.hpp"
#include "lrmc/masking.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace lrmc {

namespace {

double als_objective(const Matrix& u, const Matrix& v, const ObservationIndex& index,
                     double lambda) {
  double fit = 0.0;
  for (Index i = 0; i < static_cast<Index>(index.by_row.size()); ++i) {
    for (const auto& [j, y] : index.by_row[static_cast<std::size_t>(i)]) {
      const double r = y - u.row(i).dot(v.row(j));
      fit += r * r;
    }
  }
  return 0.5 * fit + 0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

void sweep_factor(Matrix& target, const Matrix& other,
                  const std::vector<std::vector<std::pair<Index, double>>>& observed,
                  double lambda) {
  for (Index i = 0; i < target.rows(); ++i) {
    target.row(i) = als_solve_row(observed[static_cast<std::size_t>(i)], other, lambda);
  }
}

std::string als_params(const AlsConfig& cfg) {
  std::ostringstream s;
  s << "lambda=" << cfg.lambda << ",rank=" << cfg.rank << ",max_iters=" << cfg.max_iters
    << ",tol=" << cfg.tol;
  return s.str();
}

}  // namespace

Vector als_solve_row(const std::vector<std::pair<Index, double>>& observed,
                     const Matrix& other_factor, double lambda) {
  const Index k = other_factor.cols();
  if (observed.empty()) {
    return Vector::Zero(k);  // ridge solution of an empty row
  }
  Matrix gram = lambda * Matrix::Identity(k, k);
  Vector rhs = Vector::Zero(k);
  for (const auto& [idx, y] : observed) {
    const auto row = other_factor.row(idx);
    gram.noalias() += row.transpose() * row;
    rhs.noalias() += y * row.transpose();
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("als_solve_row: singular normal equations");
  }
  return ldlt.solve(rhs);
}

AlsResult als_fit(const ObservationSet& obs, const AlsConfig& cfg, RngStream& rng,
                  const FactorPair* warm_start) {
  obs.validate();
  if (cfg.rank < 1 || cfg.rank > std::min(obs.rows, obs.cols)) {
    throw std::invalid_argument("als_fit: rank out of range");
  }
  if (cfg.max_iters < 1 || cfg.tol <= 0.0 || cfg.lambda < 0.0) {
    throw std::invalid_argument("als_fit: invalid config");
  }
  const ObservationIndex index(obs);

  Matrix u, v;
  if (warm_start != nullptr) {
    if (warm_start->u.rows() != obs.rows || warm_start->v.rows() != obs.cols ||
        warm_start->inner_dim() != cfg.rank) {
      throw std::invalid_argument("als_fit: warm start shape mismatch");
    }
    u = warm_start->u;
    v = warm_start->v;
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
    u.resize(obs.rows, cfg.rank);
    v.resize(obs.cols, cfg.rank);
    for (Index i = 0; i < u.rows(); ++i) {
      for (Index k = 0; k < u.cols(); ++k) u(i, k) = scale * rng.normal();
    }
    for (Index j = 0; j < v.rows(); ++j) {
      for (Index k = 0; k < v.cols(); ++k) v(j, k) = scale * rng.normal();
    }
  }

  AlsResult result;
  double prev = als_objective(u, v, index, cfg.lambda);
  for (int it = 0; it < cfg.max_iters; ++it) {
    sweep_factor(u, v, index.by_row, cfg.lambda);
    result.objective_trace.push_back(als_objective(u, v, index, cfg.lambda));
    sweep_factor(v, u, index.by_col, cfg.lambda);
    const double obj = als_objective(u, v, index, cfg.lambda);
    result.objective_trace.push_back(obj);
    if (std::abs(prev - obj) <= cfg.tol * std::max(1.0, std::abs(prev))) {
      break;
    }
    prev = obj;
  }

  result.factors = FactorPair{std::move(u), std::move(v)};
  result.estimate.values = result.factors.product();
  result.estimate.method = "als";
  result.estimate.params = als_params(cfg);
  result.estimate.seed = rng.seed();
  return result;
}

namespace {

double nuclear_norm(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m).singularValues().sum();
}

}  // namespace

CompletionEstimate soft_impute_fit(const ObservationSet& obs, const SoftImputeConfig& cfg,
                                   std::vector<double>* objective_trace) {
  obs.validate();
  if (cfg.max_iters < 1 || cfg.tol <= 0.0 || cfg.lambda < 0.0) {
    throw std::invalid_argument("soft_impute_fit: invalid config");
  }
  const Matrix y = observed_dense(obs);
  Matrix z = Matrix::Zero(obs.rows, obs.cols);
  for (int it = 0; it < cfg.max_iters; ++it) {
    Matrix filled = y + complement_project(z, obs);
    Matrix next = svt(filled, cfg.lambda);
    const double change = (next - z).norm();
    const double base = std::max(z.norm(), 1.0);
    z = std::move(next);
    if (objective_trace != nullptr) {
      objective_trace->push_back(0.5 * mask_project(z - y, obs).squaredNorm() +
                                 cfg.lambda * nuclear_norm(z));
    }
    if (change <= cfg.tol * base) {
      break;
    }
  }
  CompletionEstimate est;
  est.values = std::move(z);
  est.method = "soft_impute";
  std::ostringstream s;
  s << "lambda=" << cfg.lambda << ",max_iters=" << cfg.max_iters << ",tol=" << cfg.tol;
  est.params = s.str();
  return est;
}

}  // namespace lrmc
