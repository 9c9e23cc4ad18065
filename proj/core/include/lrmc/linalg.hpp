#pragma once

#include "lrmc/rng.hpp"
#include "lrmc/types.hpp"

namespace lrmc {

/// Thin SVD truncated to the leading r components, singular values descending.
struct TruncatedSvd {
  Matrix u;        // m x r
  Vector sigma;    // r
  Matrix v;        // p x r

  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

/// Leading-r SVD of b. When singular values tie at the cut, the first r in the
/// backend's descending order are kept, so the projection is non-unique there.
TruncatedSvd truncated_svd(const Matrix& b, Index r);

/// Best Frobenius rank-<=r approximation of b.
Matrix rank_r_project(const Matrix& b, Index r);

/// Singular value soft-thresholding: U * max(Sigma - t, 0) * V^T.
Matrix svt(const Matrix& b, double t);

/// Draw from N(mean, precision^{-1}) through a Cholesky factor of the
/// precision. Throws std::runtime_error if the precision is not positive
/// definite.
Vector gaussian_vector(const Vector& mean, const Matrix& precision, RngStream& rng);

}  // namespace lrmc
