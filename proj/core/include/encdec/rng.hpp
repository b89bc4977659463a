#pragma once

#include <array>
#include <cstdint>

namespace encdec {

// Deterministic, platform-independent random source: xoshiro256** seeded
// through splitmix64, with Box-Muller (and a cached spare) for Gaussians.
// Identical seed => identical draw sequence, which checkpoint determinism
// relies on. Not cryptographic.
class RngState {
 public:
  static constexpr const char* kAlgorithmId = "xoshiro256**+box-muller";

  explicit RngState(std::uint64_t seed);

  std::uint64_t next_u64();

  // Unbiased draw in [0, n); n must be >= 1.
  std::uint64_t next_below(std::uint64_t n);

  // Uniform in [0, 1), 53-bit resolution.
  double next_uniform();

  // Standard normal draw.
  double next_gaussian();

  // Independent stream derived from this seed and a stream tag.
  static RngState derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace encdec
