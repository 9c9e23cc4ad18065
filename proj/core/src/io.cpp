#include "lrmc/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace lrmc {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  return f;
}

struct Triplets {
  Index rows = 0;
  Index cols = 0;
  std::vector<Observation> entries;
};

Triplets read_triplets(std::istream& in) {
  Triplets t;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("triplet csv: missing header line");
  }
  long long declared_n = 0;
  {
    std::istringstream h(line);
    char c1 = 0, c2 = 0;
    if (!(h >> t.rows >> c1 >> t.cols >> c2 >> declared_n) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("triplet csv: malformed header, expected m,p,n");
    }
  }
  t.entries.reserve(static_cast<std::size_t>(declared_n));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long i = 0, j = 0;
    double y = 0.0;
    char c1 = 0, c2 = 0;
    if (!(row >> i >> c1 >> j >> c2 >> y) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("triplet csv: malformed row: " + line);
    }
    t.entries.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), y});
  }
  if (static_cast<long long>(t.entries.size()) != declared_n) {
    throw std::runtime_error("triplet csv: header count does not match row count");
  }
  return t;
}

void write_triplets(std::ostream& out, Index rows, Index cols,
                    const std::vector<Observation>& entries) {
  out << rows << ',' << cols << ',' << entries.size() << '\n';
  out << std::setprecision(17);
  for (const auto& e : entries) {
    out << (e.i + 1) << ',' << (e.j + 1) << ',' << e.y << '\n';
  }
}

}  // namespace

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  write_triplets(out, obs.rows, obs.cols, obs.entries);
}

void write_observations_csv(const std::string& path, const ObservationSet& obs) {
  auto f = open_out(path);
  write_observations_csv(f, obs);
}

ObservationSet read_observations_csv(std::istream& in) {
  Triplets t = read_triplets(in);
  ObservationSet obs{t.rows, t.cols, std::move(t.entries)};
  obs.validate();
  return obs;
}

ObservationSet read_observations_csv(const std::string& path) {
  auto f = open_in(path);
  return read_observations_csv(f);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  std::vector<Observation> entries;
  entries.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      entries.push_back({i, j, m(i, j)});
    }
  }
  write_triplets(out, m.rows(), m.cols(), entries);
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  auto f = open_out(path);
  write_matrix_csv(f, m);
}

Matrix read_matrix_csv(std::istream& in) {
  Triplets t = read_triplets(in);
  if (static_cast<Index>(t.entries.size()) != t.rows * t.cols) {
    throw std::runtime_error("matrix csv: expected every entry to be present");
  }
  Matrix m(t.rows, t.cols);
  for (const auto& e : t.entries) {
    if (e.i < 0 || e.i >= t.rows || e.j < 0 || e.j >= t.cols) {
      throw std::runtime_error("matrix csv: index out of range");
    }
    m(e.i, e.j) = e.y;
  }
  return m;
}

Matrix read_matrix_csv(const std::string& path) {
  auto f = open_in(path);
  return read_matrix_csv(f);
}

}  // namespace lrmc
