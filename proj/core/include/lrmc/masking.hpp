#pragma once

#include "lrmc/types.hpp"

namespace lrmc {

/// P_Omega(M): keeps M on the observed index set, zero elsewhere.
Matrix mask_project(const Matrix& m, const ObservationSet& obs);

/// M - P_Omega(M): keeps M on the unobserved complement, zero on Omega.
Matrix complement_project(const Matrix& m, const ObservationSet& obs);

/// Embeds the observed values as a dense matrix: y on Omega, 0 elsewhere.
Matrix observed_dense(const ObservationSet& obs);

/// Completion that keeps the observations verbatim: y on Omega, m elsewhere.
Matrix impose_observed(const Matrix& m, const ObservationSet& obs);

}  // namespace lrmc
