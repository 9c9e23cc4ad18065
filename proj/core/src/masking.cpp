#include "lrmc/masking.hpp"

#include <algorithm>
#include <string>

namespace lrmc {

void ObservationSet::validate() const {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("ObservationSet: dimensions must be positive");
  }
  const Index count = n();
  if (count < 1 || count > rows * cols) {
    throw std::invalid_argument("ObservationSet: n must satisfy 1 <= n <= m*p");
  }
  std::vector<Index> keys;
  keys.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.i < 0 || e.i >= rows || e.j < 0 || e.j >= cols) {
      throw std::invalid_argument("ObservationSet: index out of range at (" +
                                  std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    }
    keys.push_back(e.i * cols + e.j);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw std::invalid_argument("ObservationSet: duplicate (i,j) pair");
  }
}

ObservationIndex::ObservationIndex(const ObservationSet& obs)
    : by_row(static_cast<std::size_t>(obs.rows)),
      by_col(static_cast<std::size_t>(obs.cols)) {
  for (const auto& e : obs.entries) {
    by_row[static_cast<std::size_t>(e.i)].emplace_back(e.j, e.y);
    by_col[static_cast<std::size_t>(e.j)].emplace_back(e.i, e.y);
  }
}

namespace {

void require_shape(const Matrix& m, const ObservationSet& obs, const char* op) {
  if (m.rows() != obs.rows || m.cols() != obs.cols) {
    throw std::invalid_argument(std::string(op) + ": matrix shape does not match observation set");
  }
}

}  // namespace

Matrix mask_project(const Matrix& m, const ObservationSet& obs) {
  require_shape(m, obs, "mask_project");
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (const auto& e : obs.entries) {
    out(e.i, e.j) = m(e.i, e.j);
  }
  return out;
}

Matrix complement_project(const Matrix& m, const ObservationSet& obs) {
  require_shape(m, obs, "complement_project");
  Matrix out = m;
  for (const auto& e : obs.entries) {
    out(e.i, e.j) = 0.0;
  }
  return out;
}

Matrix observed_dense(const ObservationSet& obs) {
  Matrix out = Matrix::Zero(obs.rows, obs.cols);
  for (const auto& e : obs.entries) {
    out(e.i, e.j) = e.y;
  }
  return out;
}

Matrix impose_observed(const Matrix& m, const ObservationSet& obs) {
  require_shape(m, obs, "impose_observed");
  Matrix out = m;
  for (const auto& e : obs.entries) {
    out(e.i, e.j) = e.y;
  }
  return out;
}

}  // namespace lrmc
