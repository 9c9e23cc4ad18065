#include "lrmc/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace lrmc {

namespace {

void require_finite(const Matrix& b, const char* op) {
  if (!b.allFinite()) {
    throw std::invalid_argument(std::string(op) + ": input has non-finite entries");
  }
}

}  // namespace

TruncatedSvd truncated_svd(const Matrix& b, Index r) {
  require_finite(b, "truncated_svd");
  if (r < 1 || r > std::min(b.rows(), b.cols())) {
    throw std::invalid_argument("truncated_svd: rank out of range");
  }
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.u = svd.matrixU().leftCols(r);
  out.sigma = svd.singularValues().head(r);
  out.v = svd.matrixV().leftCols(r);
  return out;
}

Matrix rank_r_project(const Matrix& b, Index r) {
  return truncated_svd(b, r).reconstruct();
}

Matrix svt(const Matrix& b, double t) {
  require_finite(b, "svt");
  if (t < 0.0) {
    throw std::invalid_argument("svt: threshold must be nonnegative");
  }
  if (t == 0.0) {
    return b;
  }
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = (svd.singularValues().array() - t).max(0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Vector gaussian_vector(const Vector& mean, const Matrix& precision, RngStream& rng) {
  if (precision.rows() != precision.cols() || precision.rows() != mean.size()) {
    throw std::invalid_argument("gaussian_vector: precision/mean shape mismatch");
  }
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("gaussian_vector: precision is not positive definite");
  }
  Vector z(mean.size());
  for (Index i = 0; i < z.size(); ++i) {
    z[i] = rng.normal();
  }
  // x = mean + L^{-T} z gives covariance (L L^T)^{-1} = precision^{-1}.
  return mean + llt.matrixU().solve(z);
}

}  // namespace lrmc
