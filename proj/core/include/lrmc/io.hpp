#pragma once

#include "lrmc/types.hpp"

#include <iosfwd>
#include <string>

namespace lrmc {

/// Triplet CSV: one header line "m,p,n" followed by n lines "i,j,y".
/// Indices in files are 1-based; the in-memory representation is 0-based.
void write_observations_csv(std::ostream& out, const ObservationSet& obs);
void write_observations_csv(const std::string& path, const ObservationSet& obs);
ObservationSet read_observations_csv(std::istream& in);
ObservationSet read_observations_csv(const std::string& path);

/// Dense matrices use the same triplet format with every entry listed (n = m*p).
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::string& path);

}  // namespace lrmc
