// Deterministic random streams.
//
// Every stream is a SplitMix64 sequence whose starting state is a mixed hash
// of (seed, index, role). Replicate r of a study therefore sees the same
// numbers no matter how many replicates run, or in which order.

#pragma once

#include <cstdint>
#include <limits>

namespace ordmed {

enum class StreamRole : std::uint64_t {
  exposure = 1,
  mediator = 2,
  outcome = 3,
  covariates = 4,
  resample = 5,
};

/// Name of the normal variate method, recorded in output metadata.
inline constexpr const char* kNormalMethod = "marsaglia-polar";

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, StreamRole role) {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (index + 0x632BE59BD9B4E019ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(role) * 0xD1B54A32D192ED03ULL));
  return h;
}

/// SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  SplitMix64(std::uint64_t seed, std::uint64_t index, StreamRole role)
      : state_(stream_key(seed, index, role)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n), unbiased (rejection).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ordmed
