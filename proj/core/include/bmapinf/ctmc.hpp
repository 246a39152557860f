#pragma once

#include <cstdint>
#include <vector>

#include "bmapinf/model.hpp"

namespace bmapinf {

// Level-blocked truncation of the generator of (L(t), J(t)) at level cap N.
//
//   block(k, k)   = D(0) - k mu I  (diagonal replaced, see below)
//   block(k, k-1) = k mu I
//   block(k, l)   = D*(l - k)                  for k < l < N
//   block(k, N)   = sum_{j >= N-k} D*(j)       (overflow folded into level N)
//
// At level N arrivals cannot raise the level, so only their phase changes
// survive. Every diagonal entry is the negated sum of its row's off-diagonal
// entries taken in column order, which makes row_sum() exactly zero.
class TruncatedGenerator {
 public:
  TruncatedGenerator(const BmapView& view, std::uint64_t cap);

  std::uint64_t cap() const noexcept { return cap_; }
  Eigen::Index phases() const noexcept { return d_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(cap_ + 1) * d_; }
  double service_rate() const noexcept { return mu_; }

  Matrix block(std::uint64_t k, std::uint64_t l) const;
  double entry(Eigen::Index row, Eigen::Index col) const;
  double diagonal(Eigen::Index row) const { return diag_(row); }
  // Off-diagonal entries summed in column order, then the diagonal added.
  double row_sum(Eigen::Index row) const;

  Matrix to_dense() const;
  // x Q for a row vector x of length size().
  Vector left_multiply(const Vector& x) const;

 private:
  double offdiag_row_sum(Eigen::Index row) const;
  const Matrix* upper_block(std::uint64_t k, std::uint64_t l) const;

  std::uint64_t cap_;
  Eigen::Index d_;
  double mu_;
  Matrix within_;      // D(0) with zero diagonal
  Matrix within_top_;  // D(0) + sum A with zero diagonal, used at level N
  std::vector<Matrix> up_;    // up_[m] = D*(m), m = 1..N-1
  std::vector<Matrix> fold_;  // fold_[k] = sum_{j >= N-k} D*(j), k = 0..N-1
  Vector diag_;
};

// Throws CapTooSmall for cap < 1 and NotSingleRate for a multi-rate view.
TruncatedGenerator build_truncated(const BmapView& view, std::int64_t cap);

struct StationarySolution {
  std::vector<Vector> pi;  // pi[k] is the row vector pi(k) over phases
  double residual = 0.0;   // || pi Q_N ||_inf
  double tail_mass = 0.0;  // pi(N) e
  bool used_profile_solver = false;

  std::uint64_t cap() const noexcept { return pi.empty() ? 0 : pi.size() - 1; }
  // pi(k) e for k = 0..N.
  Vector level_marginals() const;
  Vector flat() const;
};

struct SolveOptions {
  double residual_tolerance = 1e-10;
  // Above this many states the profile-storage elimination is used.
  Eigen::Index dense_limit = 5000;
};

// GTH state reduction on the flattened truncation. Throws NumericalFailure
// when the residual exceeds the tolerance.
StationarySolution solve_stationary(const TruncatedGenerator& q, const SolveOptions& options = {});

// GTH that stores each row only from the level below it onwards. Exploits the
// single sub-diagonal block: cost O(n^2 d) instead of O(n^3).
Vector gth_level_profile(const TruncatedGenerator& q);

// Total variation between the level marginals of two solutions (the shorter
// is padded with zeros).
double level_total_variation(const Vector& a, const Vector& b);

// Level total variation between the solutions at caps N and 2N. Small values
// mean N is past the point where truncation matters.
double truncation_tv(const BmapView& view, std::int64_t cap, const SolveOptions& options = {});

// ---------------------------------------------------- analytic cross-checks

struct PgfResidual {
  double z = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  // Bound on the defect caused by truncating at level N.
  double truncation_bound = 0.0;
};

inline const std::vector<double> kDefaultPgfSamples{0.1, 0.25, 0.5, 0.75, 0.9};

// Compares mu (1-z) d/dz pi^(z) e with pi^(z) sum_k (1 - z^k) D*(k) e at each
// z in [0, 1). The derivative is taken term by term from pi.
std::vector<PgfResidual> pgf_check(const StationarySolution& sol, const BmapView& view,
                                   const std::vector<double>& z_samples = kDefaultPgfSamples);

struct NecessityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::uint64_t harmonic_checked_up_to = 0;
  bool harmonic_chain_holds = false;
};

// First k in 1..k_max where H_k >= log(k+1) >= log(k+e) log2/log(1+e) fails,
// or 0 when the chain holds throughout. The k = 1 equality is accepted within
// 4 ulp.
std::uint64_t harmonic_chain_first_failure(std::uint64_t k_max);

// pi(0) sum_k log(k+e) D*(k) e  <=  mu log(1+e)/log 2 * (1 - pi(0) e).
// Throws NotStable when the verdict is unstable.
NecessityReport necessity_check(const StationarySolution& sol, const StabilityVerdict& verdict,
                                double mu, std::uint64_t harmonic_k_max = 10'000);

}  // namespace bmapinf
