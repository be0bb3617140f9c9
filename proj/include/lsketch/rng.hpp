#pragma once

#include <cstdint>
#include <random>

namespace lsketch {

/// Splitmix64 finalizer, used to derive well-mixed seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (seed, stream id).
///
/// Every consumer that needs randomness gets its own stream id, so draws in
/// one place never shift the sequence seen by another.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id), engine_(mix64(mix64(seed) ^ mix64(stream_id + 0x5851f42d4c957f2dULL))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  /// A child stream; independent of this one and of siblings with other tags.
  RngStream split(std::uint64_t tag) const noexcept {
    return RngStream(seed_, mix64(stream_ * 0x100000001b3ULL + tag + 1));
  }

  std::mt19937_64& engine() noexcept { return engine_; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Stream ids for the distinct purposes randomness is used for.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kJitter = 3;
inline constexpr std::uint64_t kEval = 4;
inline constexpr std::uint64_t kData = 5;
inline constexpr std::uint64_t kSplit = 6;
}  // namespace streams

}  // namespace lsketch
