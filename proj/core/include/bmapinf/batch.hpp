#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bmapinf {

enum class BatchFamily { Finite, Geometric, Zeta, LogHeavy };

std::string_view family_name(BatchFamily f) noexcept;

// Largest batch the sampler will return unless told otherwise.
inline constexpr std::uint64_t kDefaultMaxBatch = std::uint64_t{1} << 53;

// Law of the batch size B >= 1 of one arrival stream.
//
//   Finite(p_1..p_m)   p_k given explicitly
//   Geometric(p)       p_k = (1-p)^(k-1) p
//   Zeta(alpha)        p_k = k^-alpha / zeta(alpha),                      alpha > 1
//   LogHeavy(beta)     p_k ~ 1 / ((k+1) log(k+1+e)^beta),                 beta > 0
//
// LogHeavy weights are summable only for beta > 1. Smaller exponents are still
// representable (log_moment() reports +inf for them) but the object is marked
// improper and every probability query throws BadPmf.
//
// Instances are immutable and cheap to copy.
class BatchSizeDistribution {
 public:
  static BatchSizeDistribution finite(std::vector<double> pmf);
  static BatchSizeDistribution geometric(double p);
  static BatchSizeDistribution zeta(double alpha);
  static BatchSizeDistribution log_heavy(double beta);
  static BatchSizeDistribution single() { return finite({1.0}); }

  BatchFamily family() const noexcept;
  // p, alpha or beta; NaN for Finite.
  double parameter() const noexcept;
  // Explicit pmf for Finite (index 0 is P(B = 1)); empty otherwise.
  std::span<const double> finite_pmf() const noexcept;

  bool proper() const noexcept;
  // Normalizing constant of the parametric weights and its error bound
  // (1 and 0 for Finite/Geometric).
  double normalizer() const;
  double normalizer_error() const;

  double pmf(std::uint64_t k) const;
  // P(B >= k); equals 1 for k <= 1.
  double tail(std::uint64_t k) const;
  // E[z^B] for 0 <= z <= 1.
  double pgf(double z) const;
  double mean() const;

  // sum_k log(k+e) p_k, +inf when the series diverges.
  double log_moment() const;
  bool finite_log_moment() const noexcept;
  // sum_k log(1 + k/c) p_k for c > 0, +inf when divergent.
  double log_ratio_moment(double c) const;

  // Inverse-CDF draw driven by one uniform u in (0,1). Results above
  // max_batch are clamped to it.
  std::uint64_t sample(double u, std::uint64_t max_batch = kDefaultMaxBatch) const;

  std::string describe() const;

  class Impl;

 private:
  explicit BatchSizeDistribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace bmapinf
