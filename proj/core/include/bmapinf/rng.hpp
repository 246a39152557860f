#pragma once

#include <cstdint>
#include <random>

namespace bmapinf {

// Independent generator streams derived from one user seed. Changing how
// many draws one role makes never shifts another role's sequence.
enum class StreamRole : std::uint64_t { Dynamics = 1, Skeleton = 2, Service = 3 };

class Rng {
 public:
  Rng(std::uint64_t seed, StreamRole role);

  // Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential(double rate) noexcept;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace bmapinf
