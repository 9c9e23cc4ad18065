#include "lrmc/rng.hpp"

#include <stdexcept>

namespace lrmc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  // Two splitmix rounds decorrelate nearby (seed, stream) pairs before the
  // generator is seeded.
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0xa0761d6478bd642fULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(seed_, splitmix64(stream_ ^ splitmix64(child + 0xd6e8feb86659fd93ULL)));
}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

std::uint64_t RngStream::uniform_int(std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(0, hi)(engine_);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) {
    throw std::invalid_argument("gamma draw requires positive shape and rate");
  }
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

}  // namespace lrmc
