#pragma once

#include <cstdint>
#include <random>

namespace lrmc {

/// Deterministic 64-bit mix of two values (seed derivation for sub-experiments).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Seeded random stream identified by (seed, stream id). Identical pairs
/// reproduce identical draw sequences within one build. Replicate k of an
/// experiment owns stream id k; further independent streams are derived with
/// substream(), never by sharing.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Derives an independent child stream; deterministic in (seed, stream, child).
  RngStream substream(std::uint64_t child) const;

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform integer on [0, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t hi);

  /// Standard normal draw.
  double normal();

  /// Gamma draw with given shape and *rate* (mean = shape / rate).
  double gamma(double shape, double rate);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lrmc
