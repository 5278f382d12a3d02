#include "brw/random.hpp"

namespace brw {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) noexcept {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

RandomStream RandomStream::for_stream(std::uint64_t master_seed, std::uint64_t index) noexcept {
  std::uint64_t a = master_seed;
  std::uint64_t key = splitmix64(a);
  std::uint64_t b = index ^ 0x6a09e667f3bcc909ULL;
  key ^= splitmix64(b);
  key = std::rotl(key, 17) + index;
  return RandomStream(key);
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace brw
