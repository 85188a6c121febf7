#pragma once

#include <array>
#include <cstdint>

namespace mareforge {

/// Philox4x32 with ten rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of counter and key.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream id). Draw i of stream k
/// does not depend on any other stream, so streams can be consumed in any
/// order or in parallel.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();

  /// Standard normal by inversion of uniform().
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
};

/// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double u);

}  // namespace mareforge
