#include <doctest.h>

#include "lrmc/freq.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/masking.hpp"
#include "oracles.hpp"

#include <array>
#include <cmath>
#include <functional>

using namespace lrmc;

namespace {

double penalized_objective(const Matrix& u, const Matrix& v, const ObservationSet& obs,
                           double lambda) {
  double fit = 0.0;
  for (const auto& e : obs.entries) {
    const double r = e.y - u.row(e.i).dot(v.row(e.j));
    fit += r * r;
  }
  return 0.5 * fit + 0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

// Rank-1 objective profiled over v: each v_j has the closed-form ridge
// solution, so the search space collapses to u alone.
double profiled_objective(const Vector& u, const ObservationSet& obs, double lambda) {
  Vector v = Vector::Zero(obs.cols);
  Vector num = Vector::Zero(obs.cols);
  Vector den = Vector::Constant(obs.cols, lambda);
  for (const auto& e : obs.entries) {
    num[e.j] += u[e.i] * e.y;
    den[e.j] += u[e.i] * u[e.i];
  }
  for (Index j = 0; j < obs.cols; ++j) {
    if (den[j] > 0.0) v[j] = num[j] / den[j];
  }
  double fit = 0.0;
  for (const auto& e : obs.entries) {
    const double r = e.y - u[e.i] * v[e.j];
    fit += r * r;
  }
  return 0.5 * fit + 0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

Vector spherical(double theta, double phi, double s) {
  Vector u(3);
  u << s * std::sin(theta) * std::cos(phi), s * std::sin(theta) * std::sin(phi),
      s * std::cos(theta);
  return u;
}

// Dense grid over direction and scale, then Nelder-Mead polish on the
// profiled objective.
double grid_search_minimum(const ObservationSet& obs, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 3> best_x{0.0, 0.0, 1.0};
  for (int it_th = 0; it_th <= 40; ++it_th) {
    const double theta = M_PI * it_th / 40.0;
    for (int it_ph = 0; it_ph < 80; ++it_ph) {
      const double phi = 2.0 * M_PI * it_ph / 80.0;
      for (int it_s = 1; it_s <= 60; ++it_s) {
        const double s = 5.0 * it_s / 60.0;
        const double g = profiled_objective(spherical(theta, phi, s), obs, lambda);
        if (g < best) {
          best = g;
          best_x = {theta, phi, s};
        }
      }
    }
  }

  const auto eval = [&](const std::array<double, 3>& x) {
    return profiled_objective(spherical(x[0], x[1], std::abs(x[2])), obs, lambda);
  };
  // Nelder-Mead with standard coefficients.
  std::array<std::array<double, 3>, 4> simplex;
  std::array<double, 4> fval;
  simplex[0] = best_x;
  for (int k = 1; k < 4; ++k) {
    simplex[k] = best_x;
    simplex[k][k - 1] += 0.05;
  }
  for (int k = 0; k < 4; ++k) fval[k] = eval(simplex[k]);
  for (int iter = 0; iter < 500; ++iter) {
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fval[a] < fval[b]; });
    std::array<std::array<double, 3>, 4> s2;
    std::array<double, 4> f2;
    for (int k = 0; k < 4; ++k) {
      s2[k] = simplex[order[k]];
      f2[k] = fval[order[k]];
    }
    simplex = s2;
    fval = f2;
    if (fval[3] - fval[0] < 1e-14 * (1.0 + std::abs(fval[0]))) break;

    std::array<double, 3> centroid{0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      for (int d = 0; d < 3; ++d) centroid[d] += simplex[k][d] / 3.0;
    }
    auto combine = [&](double c) {
      std::array<double, 3> x;
      for (int d = 0; d < 3; ++d) x[d] = centroid[d] + c * (simplex[3][d] - centroid[d]);
      return x;
    };
    const auto reflected = combine(-1.0);
    const double fr = eval(reflected);
    if (fr < fval[0]) {
      const auto expanded = combine(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[3] = expanded;
        fval[3] = fe;
      } else {
        simplex[3] = reflected;
        fval[3] = fr;
      }
    } else if (fr < fval[2]) {
      simplex[3] = reflected;
      fval[3] = fr;
    } else {
      const auto contracted = combine(0.5);
      const double fc = eval(contracted);
      if (fc < fval[3]) {
        simplex[3] = contracted;
        fval[3] = fc;
      } else {
        for (int k = 1; k < 4; ++k) {
          for (int d = 0; d < 3; ++d) {
            simplex[k][d] = simplex[0][d] + 0.5 * (simplex[k][d] - simplex[0][d]);
          }
          fval[k] = eval(simplex[k]);
        }
      }
    }
  }
  return *std::min_element(fval.begin(), fval.end());
}

ObservationSet fully_observed(const Matrix& y) {
  ObservationSet obs;
  obs.rows = y.rows();
  obs.cols = y.cols();
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index j = 0; j < y.cols(); ++j) obs.entries.push_back({i, j, y(i, j)});
  }
  return obs;
}

}  // namespace

TEST_CASE("als recovers a fully observed rank-1 matrix") {
  RngStream rng(71, 0);
  const Matrix u = oracle::random_matrix(6, 1, rng);
  const Matrix v = oracle::random_matrix(5, 1, rng);
  const Matrix y = u * v.transpose();
  const ObservationSet obs = fully_observed(y);

  AlsConfig cfg;
  cfg.lambda = 1e-8;
  cfg.rank = 1;
  RngStream fit_rng(72, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);
  CHECK((fit.estimate.values - oracle::rank_r_truncate(y, 1)).norm() < 1e-4);
}

TEST_CASE("a dominating penalty shrinks the factors to zero") {
  RngStream rng(73, 0);
  const Matrix y = oracle::random_matrix(4, 4, rng);
  const ObservationSet obs = fully_observed(y);
  AlsConfig cfg;
  cfg.lambda = 1e8;
  cfg.rank = 2;
  RngStream fit_rng(74, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);
  CHECK(fit.estimate.values.norm() < 1e-3);
}

TEST_CASE("als objective matches the profiled grid-search minimum (3x3, rank 1)") {
  RngStream rng(75, 0);
  const Matrix u_true = oracle::random_matrix(3, 1, rng);
  const Matrix v_true = oracle::random_matrix(3, 1, rng);
  const Matrix y = u_true * v_true.transpose() + 0.1 * oracle::random_matrix(3, 3, rng);
  const ObservationSet obs = oracle::random_observations(y, 6, rng);

  AlsConfig cfg;
  cfg.lambda = 0.1;
  cfg.rank = 1;
  cfg.max_iters = 500;
  cfg.tol = 1e-13;
  RngStream fit_rng(76, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);

  for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
    CHECK(fit.objective_trace[s] <=
          fit.objective_trace[s - 1] + 1e-10 * fit.objective_trace[0]);
  }

  const double als_obj =
      penalized_objective(fit.factors.u, fit.factors.v, obs, cfg.lambda);
  const double oracle_obj = grid_search_minimum(obs, cfg.lambda);
  CHECK(std::abs(als_obj - oracle_obj) <= 1e-6 * (1.0 + std::abs(oracle_obj)));
}

TEST_CASE("als objective trace is non-increasing on a larger instance") {
  RngStream rng(77, 0);
  const Matrix truth = oracle::random_matrix(12, 2, rng) * oracle::random_matrix(9, 2, rng).transpose();
  const ObservationSet obs = oracle::random_observations(truth, 60, rng, 0.1);
  AlsConfig cfg;
  cfg.lambda = 0.5;
  cfg.rank = 2;
  RngStream fit_rng(78, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);
  REQUIRE(fit.objective_trace.size() >= 2);
  for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
    CHECK(fit.objective_trace[s] <=
          fit.objective_trace[s - 1] + 1e-10 * fit.objective_trace[0]);
  }
}

TEST_CASE("row solve satisfies its normal equations") {
  RngStream rng(79, 0);
  const Matrix other = oracle::random_matrix(8, 3, rng);
  std::vector<std::pair<Index, double>> observed;
  for (Index j : {0, 2, 3, 6, 7}) observed.emplace_back(j, rng.normal());
  const double lambda = 0.3;
  const Vector x = als_solve_row(observed, other, lambda);

  Matrix gram = lambda * Matrix::Identity(3, 3);
  Vector rhs = Vector::Zero(3);
  for (const auto& [j, y] : observed) {
    gram += other.row(j).transpose() * other.row(j);
    rhs += y * other.row(j).transpose();
  }
  CHECK((gram * x - rhs).norm() <= 1e-8);
}

TEST_CASE("final V rows satisfy their normal equations") {
  RngStream rng(80, 0);
  const Matrix truth = oracle::random_matrix(10, 2, rng) * oracle::random_matrix(7, 2, rng).transpose();
  const ObservationSet obs = oracle::random_observations(truth, 40, rng, 0.05);
  AlsConfig cfg;
  cfg.lambda = 0.2;
  cfg.rank = 2;
  RngStream fit_rng(81, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);

  const ObservationIndex index(obs);
  for (Index j = 0; j < obs.cols; ++j) {
    Matrix gram = cfg.lambda * Matrix::Identity(2, 2);
    Vector rhs = Vector::Zero(2);
    for (const auto& [i, y] : index.by_col[static_cast<std::size_t>(j)]) {
      gram += fit.factors.u.row(i).transpose() * fit.factors.u.row(i);
      rhs += y * fit.factors.u.row(i).transpose();
    }
    CHECK((gram * fit.factors.v.row(j).transpose() - rhs).norm() <= 1e-8);
  }
}

TEST_CASE("rows without observations solve to zero") {
  Matrix y(4, 3);
  y.setOnes();
  ObservationSet obs;
  obs.rows = 4;
  obs.cols = 3;
  // row 2 unobserved
  obs.entries = {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {3, 1, 1.0}, {3, 2, 1.0}};
  AlsConfig cfg;
  cfg.lambda = 0.0;
  cfg.rank = 1;
  RngStream fit_rng(82, 0);
  const AlsResult fit = als_fit(obs, cfg, fit_rng);
  CHECK(fit.factors.u.row(2).norm() == 0.0);
}

TEST_CASE("als is deterministic given the seed") {
  RngStream rng(83, 0);
  const Matrix truth = oracle::random_matrix(6, 1, rng) * oracle::random_matrix(6, 1, rng).transpose();
  const ObservationSet obs = oracle::random_observations(truth, 20, rng, 0.1);
  AlsConfig cfg;
  cfg.lambda = 0.1;
  cfg.rank = 1;
  RngStream r1(99, 5), r2(99, 5);
  const AlsResult a = als_fit(obs, cfg, r1);
  const AlsResult b = als_fit(obs, cfg, r2);
  CHECK((a.estimate.values - b.estimate.values).norm() == 0.0);
}

TEST_CASE("als validates its configuration") {
  ObservationSet obs;
  obs.rows = obs.cols = 3;
  obs.entries = {{0, 0, 1.0}};
  AlsConfig cfg;
  cfg.rank = 4;
  RngStream rng(1, 0);
  CHECK_THROWS_AS(als_fit(obs, cfg, rng), std::invalid_argument);
}

TEST_CASE("warm start must match shapes") {
  ObservationSet obs;
  obs.rows = obs.cols = 3;
  obs.entries = {{0, 0, 1.0}};
  AlsConfig cfg;
  cfg.rank = 1;
  RngStream rng(2, 0);
  FactorPair bad{Matrix::Zero(2, 1), Matrix::Zero(3, 1)};
  CHECK_THROWS_AS(als_fit(obs, cfg, rng, &bad), std::invalid_argument);
}

TEST_CASE("soft impute on a fully observed matrix is one svt step") {
  RngStream rng(84, 0);
  const Matrix y = oracle::random_matrix(5, 5, rng);
  const ObservationSet obs = fully_observed(y);
  SoftImputeConfig cfg;
  cfg.lambda = 0.8;
  const CompletionEstimate est = soft_impute_fit(obs, cfg);
  CHECK((est.values - svt(y, cfg.lambda)).norm() < 1e-10);
}

TEST_CASE("soft impute fully shrinks when lambda dominates") {
  RngStream rng(85, 0);
  const Matrix y = oracle::random_matrix(4, 4, rng);
  const ObservationSet obs = oracle::random_observations(y, 10, rng);
  const double sigma_max = oracle::singular_values(observed_dense(obs))[0];
  SoftImputeConfig cfg;
  cfg.lambda = sigma_max + 0.1;
  const CompletionEstimate est = soft_impute_fit(obs, cfg);
  CHECK(est.values.norm() == 0.0);
}

TEST_CASE("soft impute solution survives random perturbation probing") {
  RngStream rng(86, 0);
  const Matrix truth = oracle::random_matrix(4, 2, rng) * oracle::random_matrix(4, 2, rng).transpose();
  const ObservationSet obs = oracle::random_observations(truth, 8, rng, 0.1);
  SoftImputeConfig cfg;
  cfg.lambda = 1.0;
  cfg.tol = 1e-10;
  cfg.max_iters = 2000;
  std::vector<double> trace;
  const CompletionEstimate est = soft_impute_fit(obs, cfg, &trace);

  REQUIRE(trace.size() >= 2);
  for (std::size_t s = 1; s < trace.size(); ++s) {
    CHECK(trace[s] <= trace[s - 1] + 1e-10 * trace[0]);
  }

  const auto objective = [&](const Matrix& z) {
    double fit = 0.0;
    for (const auto& e : obs.entries) {
      const double r = z(e.i, e.j) - e.y;
      fit += r * r;
    }
    return 0.5 * fit + cfg.lambda * oracle::singular_values(z).sum();
  };
  const double at_solution = objective(est.values);
  for (int probe = 0; probe < 200; ++probe) {
    const double scale = 0.001 + 0.2 * rng.uniform();
    const Matrix perturbed = est.values + scale * oracle::random_matrix(4, 4, rng);
    CHECK(at_solution <= objective(perturbed) + 1e-9);
  }
}

TEST_CASE("soft impute satisfies its fixed point equation") {
  RngStream rng(87, 0);
  const Matrix truth = oracle::random_matrix(5, 2, rng) * oracle::random_matrix(5, 2, rng).transpose();
  const ObservationSet obs = oracle::random_observations(truth, 13, rng, 0.05);
  SoftImputeConfig cfg;
  cfg.lambda = 0.7;
  cfg.tol = 1e-12;
  cfg.max_iters = 5000;
  const CompletionEstimate est = soft_impute_fit(obs, cfg);
  const Matrix step =
      svt(observed_dense(obs) + complement_project(est.values, obs), cfg.lambda);
  CHECK((step - est.values).norm() < 1e-8 * std::max(1.0, est.values.norm()));
}
