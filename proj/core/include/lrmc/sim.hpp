#pragma once

#include "lrmc/rng.hpp"
#include "lrmc/types.hpp"

namespace lrmc {

enum class SimSetting { ExactLowRank, ApproxLowRank };

/// Synthetic problem description. `tau` is the fraction of entries NOT
/// observed, so n = round((1 - tau) * m * p).
struct SimSpec {
  Index m = 100;
  Index p = 100;
  Index r = 2;
  SimSetting setting = SimSetting::ExactLowRank;
  Index perturb_rank = 50;      // ApproxLowRank only
  double perturb_scale = 0.1;   // ApproxLowRank only
  double tau = 0.2;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exact setting: U* V*^T with i.i.d. standard normal factors (m x r, p x r).
/// Approximate setting adds perturb_scale * A B^T with A (m x perturb_rank)
/// and B (p x perturb_rank) i.i.d. standard normal.
Matrix gen_truth(const SimSpec& spec, RngStream& rng);

/// Picks exactly round((1 - tau) * m * p) index pairs uniformly without
/// replacement and observes y = truth + N(0, sigma^2) noise at each.
/// Entries are returned in row-major index order.
ObservationSet sample_observations(const Matrix& truth, double tau, double sigma,
                                   RngStream& rng);

}  // namespace lrmc
