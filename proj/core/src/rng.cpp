#include "bmapinf/rng.hpp"

#include <cmath>

namespace bmapinf {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, StreamRole role) {
  std::uint64_t state = seed ^ (static_cast<std::uint64_t>(role) * 0xd1342543de82ef95ULL);
  std::uint32_t words[8];
  for (int i = 0; i < 8; i += 2) {
    const std::uint64_t x = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(x);
    words[i + 1] = static_cast<std::uint32_t>(x >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  engine_.seed(seq);
}

double Rng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

}  // namespace bmapinf
