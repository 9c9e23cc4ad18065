#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One observed entry of a partially observed matrix. Indices are 0-based
/// everywhere inside the library; file formats and reports are 1-based.
struct Observation {
  Index i = 0;
  Index j = 0;
  double y = 0.0;
};

/// Sparse record of the observed entries of an m x p matrix: the index set
/// together with the noisy values restricted to it.
struct ObservationSet {
  Index rows = 0;
  Index cols = 0;
  std::vector<Observation> entries;

  Index n() const { return static_cast<Index>(entries.size()); }

  /// Throws std::invalid_argument if dimensions are non-positive, any index
  /// is out of range, an (i,j) pair is duplicated, or n is outside [1, m*p].
  void validate() const;
};

/// Per-row and per-column views of an ObservationSet, built once per fit.
struct ObservationIndex {
  std::vector<std::vector<std::pair<Index, double>>> by_row;  // (j, y)
  std::vector<std::vector<std::pair<Index, double>>> by_col;  // (i, y)

  explicit ObservationIndex(const ObservationSet& obs);
};

/// Tall factor pair (U, V) representing the m x p matrix U * V^T.
struct FactorPair {
  Matrix u;  // m x k
  Matrix v;  // p x k

  Index inner_dim() const { return u.cols(); }
  Matrix product() const { return u * v.transpose(); }
};

/// Dense point estimate with provenance.
struct CompletionEstimate {
  Matrix values;
  std::string method;
  std::string params;
  std::uint64_t seed = 0;
};

/// Per-entry error summary of an estimate against the truth. `pred` is absent
/// when every entry is observed (empty complement).
struct ErrorReport {
  double mse = 0.0;
  double nmse = 0.0;
  std::optional<double> pred;
};

}  // namespace lrmc
