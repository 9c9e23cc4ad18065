#pragma once

#include "lrmc/types.hpp"

namespace lrmc {

/// Per-entry error metrics of an estimate against the truth:
///   mse  = ||est - truth||_F^2 / (m p)
///   nmse = ||est - truth||_F^2 / ||truth||_F^2
///   pred = ||P_complement(est - truth)||_F^2 / (m p - n), absent when n = m p.
/// Throws if shapes mismatch or the truth is identically zero.
ErrorReport compute_errors(const Matrix& est, const Matrix& truth, const ObservationSet& obs);

}  // namespace lrmc
