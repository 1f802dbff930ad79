#pragma once

#include <cmath>
#include <cstdint>

namespace tarma {

/// Identifies one reproducible random stream.  Replicate k of a Monte Carlo
/// run draws from the stream (seed, k); identical (seed, replicate_id) values
/// reproduce identical draws regardless of thread scheduling, so parallel
/// experiments are order-independent by construction.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t replicate_id = 0;

  /// Derived stream for redraws of a failed replicate (attempt j >= 1).
  RngStream redraw(std::uint64_t attempt, std::uint64_t block) const {
    return RngStream{seed, replicate_id + attempt * block};
  }
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

/// xoshiro256++ generator seeded from an RngStream via splitmix64.
/// Gaussian draws use explicit Box-Muller (two uniforms per call) so the
/// draw sequence is identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(RngStream stream) {
    std::uint64_t x = stream.seed;
    const std::uint64_t a = detail::splitmix64(x);
    const std::uint64_t b = detail::splitmix64(x);
    std::uint64_t y = a ^ (stream.replicate_id * 0xD1342543DE82EF95ULL + b);
    for (auto& w : state_) w = detail::splitmix64(y);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace tarma
