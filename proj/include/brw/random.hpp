#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace brw {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256++ generator. Satisfies UniformRandomBitGenerator, so it plugs
/// into the <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0x853c49e6748fea9bULL) noexcept;

  /// Independent stream for one (master seed, index) pair. The state depends only
  /// on the pair, so any assignment of trees to workers reproduces the same draws.
  static RandomStream for_stream(std::uint64_t master_seed, std::uint64_t index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Fair coin, served from a cached 64-bit word.
  bool bit() noexcept {
    if (nbits_ == 0) {
      bits_ = (*this)();
      nbits_ = 64;
    }
    const bool b = bits_ & 1u;
    bits_ >>= 1;
    --nbits_;
    return b;
  }

  // Uniform integer in [0, n), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept;

  // Number of failures before the first success of a fair coin: P(k) = 2^-(k+1).
  int geometric_half() noexcept {
    int k = 0;
    for (;;) {
      const std::uint64_t w = (*this)();
      if (w != 0) return k + std::countr_zero(w);
      k += 64;
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t bits_ = 0;
  int nbits_ = 0;
};

}  // namespace brw
