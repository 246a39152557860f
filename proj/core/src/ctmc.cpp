#include "bmapinf/ctmc.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bmapinf/error.hpp"
#include "bmapinf/gth.hpp"

namespace bmapinf {

namespace {

Matrix zero_diagonal(Matrix m) {
  m.diagonal().setZero();
  return m;
}

}  // namespace

TruncatedGenerator::TruncatedGenerator(const BmapView& view, std::uint64_t cap)
    : cap_(cap), d_(view.phases()), mu_(view.service_rate()) {
  if (cap < 1) throw Error(ErrorCode::CapTooSmall, "level cap must be at least 1");
  within_ = zero_diagonal(view.d0);
  within_top_ = zero_diagonal(view.d0 + view.total_arrival_matrix());
  up_.resize(cap_);
  for (std::uint64_t m = 1; m < cap_; ++m) up_[m] = view.arrival_block(m);
  fold_.resize(cap_);
  for (std::uint64_t k = 0; k < cap_; ++k) fold_[k] = view.arrival_tail_block(cap_ - k);

  diag_ = Vector::Zero(size());
  for (Eigen::Index r = 0; r < size(); ++r) diag_(r) = -offdiag_row_sum(r);
}

const Matrix* TruncatedGenerator::upper_block(std::uint64_t k, std::uint64_t l) const {
  return l < cap_ ? &up_[l - k] : &fold_[k];
}

Matrix TruncatedGenerator::block(std::uint64_t k, std::uint64_t l) const {
  if (k > cap_ || l > cap_) throw Error(ErrorCode::InvalidInput, "block index beyond the level cap");
  if (l == k) {
    Matrix b = k == cap_ ? within_top_ : within_;
    for (Eigen::Index i = 0; i < d_; ++i) b(i, i) = diag_(static_cast<Eigen::Index>(k) * d_ + i);
    return b;
  }
  if (l + 1 == k) return static_cast<double>(k) * mu_ * Matrix::Identity(d_, d_);
  if (l > k) return *upper_block(k, l);
  return Matrix::Zero(d_, d_);
}

double TruncatedGenerator::entry(Eigen::Index row, Eigen::Index col) const {
  if (row == col) return diag_(row);
  const auto k = static_cast<std::uint64_t>(row / d_);
  const auto l = static_cast<std::uint64_t>(col / d_);
  const Eigen::Index i = row % d_;
  const Eigen::Index j = col % d_;
  if (l == k) return (k == cap_ ? within_top_ : within_)(i, j);
  if (l + 1 == k) return i == j ? static_cast<double>(k) * mu_ : 0.0;
  if (l > k) return (*upper_block(k, l))(i, j);
  return 0.0;
}

double TruncatedGenerator::offdiag_row_sum(Eigen::Index row) const {
  const auto k = static_cast<std::uint64_t>(row / d_);
  const Eigen::Index first = k >= 1 ? static_cast<Eigen::Index>(k - 1) * d_ : 0;
  double s = 0.0;
  for (Eigen::Index c = first; c < size(); ++c)
    if (c != row) s += entry(row, c);
  return s;
}

double TruncatedGenerator::row_sum(Eigen::Index row) const {
  return offdiag_row_sum(row) + diag_(row);
}

Matrix TruncatedGenerator::to_dense() const {
  const Eigen::Index n = size();
  Matrix q = Matrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto k = static_cast<std::uint64_t>(r / d_);
    const Eigen::Index first = k >= 1 ? static_cast<Eigen::Index>(k - 1) * d_ : 0;
    for (Eigen::Index c = first; c < n; ++c) q(r, c) = entry(r, c);
  }
  return q;
}

Vector TruncatedGenerator::left_multiply(const Vector& x) const {
  if (x.size() != size()) throw Error(ErrorCode::InvalidInput, "vector length does not match generator");
  Vector y = Vector::Zero(size());
  for (std::uint64_t k = 0; k <= cap_; ++k) {
    const auto off = static_cast<Eigen::Index>(k) * d_;
    const Eigen::RowVectorXd xk = x.segment(off, d_).transpose();
    const Matrix& w = k == cap_ ? within_top_ : within_;
    y.segment(off, d_) += (xk * w).transpose();
    y.segment(off, d_) += xk.transpose().cwiseProduct(diag_.segment(off, d_));
    if (k >= 1) y.segment(off - d_, d_) += static_cast<double>(k) * mu_ * xk.transpose();
    for (std::uint64_t l = k + 1; l <= cap_; ++l)
      y.segment(static_cast<Eigen::Index>(l) * d_, d_) += (xk * *upper_block(k, l)).transpose();
  }
  return y;
}

TruncatedGenerator build_truncated(const BmapView& view, std::int64_t cap) {
  if (cap < 1) throw Error(ErrorCode::CapTooSmall, "level cap must be at least 1");
  return TruncatedGenerator(view, static_cast<std::uint64_t>(cap));
}

// ------------------------------------------------------------------ solve

Vector StationarySolution::level_marginals() const {
  Vector m(static_cast<Eigen::Index>(pi.size()));
  for (std::size_t k = 0; k < pi.size(); ++k) m(static_cast<Eigen::Index>(k)) = pi[k].sum();
  return m;
}

Vector StationarySolution::flat() const {
  if (pi.empty()) return {};
  const Eigen::Index d = pi.front().size();
  Vector out(static_cast<Eigen::Index>(pi.size()) * d);
  for (std::size_t k = 0; k < pi.size(); ++k) out.segment(static_cast<Eigen::Index>(k) * d, d) = pi[k];
  return out;
}

Vector gth_level_profile(const TruncatedGenerator& q) {
  const Eigen::Index n = q.size();
  const Eigen::Index d = q.phases();
  // Row r keeps columns [lo(r), n): nothing left of the previous level is
  // ever nonzero, and elimination from the top preserves that profile.
  auto lo = [d](Eigen::Index r) { return r / d >= 1 ? (r / d - 1) * d : Eigen::Index{0}; };
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    auto& row = rows[static_cast<std::size_t>(r)];
    row.resize(static_cast<std::size_t>(n - lo(r)));
    for (Eigen::Index c = lo(r); c < n; ++c) row[static_cast<std::size_t>(c - lo(r))] = c == r ? 0.0 : q.entry(r, c);
  }
  auto at = [&](Eigen::Index r, Eigen::Index c) -> double& {
    return rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c - lo(r))];
  };

  for (Eigen::Index k = n - 1; k >= 1; --k) {
    const Eigen::Index lk = lo(k);
    double s = 0.0;
    for (Eigen::Index j = lk; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) throw Error(ErrorCode::SolveFailed, "generator is reducible (GTH pivot is zero)");
    for (Eigen::Index i = 0; i < k; ++i) {
      double& aik = at(i, k);
      aik /= s;
      if (aik == 0.0) continue;
      for (Eigen::Index j = lk; j < k; ++j) at(i, j) += aik * at(k, j);
    }
  }

  Vector x(n);
  x(0) = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) acc += x(i) * at(i, k);
    x(k) = acc;
  }
  return x / x.sum();
}

StationarySolution solve_stationary(const TruncatedGenerator& q, const SolveOptions& options) {
  StationarySolution sol;
  Vector x;
  if (q.size() <= options.dense_limit) {
    x = gth_stationary(q.to_dense());
  } else {
    x = gth_level_profile(q);
    sol.used_profile_solver = true;
  }
  if (!x.allFinite() || (x.array() < 0.0).any())
    throw Error(ErrorCode::NumericalFailure, "stationary vector is not a probability vector");
  sol.residual = q.left_multiply(x).cwiseAbs().maxCoeff();
  if (!(sol.residual <= options.residual_tolerance)) {
    std::ostringstream os;
    os << "stationary residual " << sol.residual << " exceeds " << options.residual_tolerance;
    throw Error(ErrorCode::NumericalFailure, os.str());
  }
  const Eigen::Index d = q.phases();
  sol.pi.reserve(q.cap() + 1);
  for (std::uint64_t k = 0; k <= q.cap(); ++k) sol.pi.push_back(x.segment(static_cast<Eigen::Index>(k) * d, d));
  sol.tail_mass = sol.pi.back().sum();
  return sol;
}

double level_total_variation(const Vector& a, const Vector& b) {
  const Eigen::Index n = std::max(a.size(), b.size());
  double tv = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = k < a.size() ? a(k) : 0.0;
    const double y = k < b.size() ? b(k) : 0.0;
    tv += std::abs(x - y);
  }
  return 0.5 * tv;
}

double truncation_tv(const BmapView& view, std::int64_t cap, const SolveOptions& options) {
  const Vector a = solve_stationary(build_truncated(view, cap), options).level_marginals();
  const Vector b = solve_stationary(build_truncated(view, 2 * cap), options).level_marginals();
  return level_total_variation(a, b);
}

// ------------------------------------------------------- cross-checks

std::vector<PgfResidual> pgf_check(const StationarySolution& sol, const BmapView& view,
                                   const std::vector<double>& z_samples) {
  const double mu = view.service_rate();
  const std::uint64_t cap = sol.cap();
  const Vector marg = sol.level_marginals();
  const Matrix total = view.total_arrival_matrix();
  const double total_rate_bound = (total.rowwise().sum()).maxCoeff();

  // Boundary mass that the truncated balance equations cannot see:
  //   sum_{m<N} pi(m) sum_nu A_nu e P(B_nu >= N-m)
  double overflow = 0.0;
  for (std::uint64_t m = 0; m < cap; ++m)
    overflow += sol.pi[m].dot(view.arrival_tail_block(cap - m).rowwise().sum());

  std::vector<PgfResidual> out;
  for (double z : z_samples) {
    if (!(z >= 0.0 && z < 1.0)) throw Error(ErrorCode::InvalidInput, "pgf samples must lie in [0, 1)");
    const Vector gap = view.batch_transform_gap(z);
    double deriv = 0.0;
    Vector pihat = Vector::Zero(view.phases());
    double zk = 1.0;  // z^k
    double zkm1 = 0.0;  // z^(k-1)
    for (std::uint64_t k = 0; k <= cap; ++k) {
      pihat += zk * sol.pi[k];
      if (k >= 1) deriv += static_cast<double>(k) * zkm1 * marg(static_cast<Eigen::Index>(k));
      zkm1 = zk;
      zk *= z;
    }
    PgfResidual r;
    r.z = z;
    r.lhs = mu * (1.0 - z) * deriv;
    r.rhs = pihat.dot(gap);
    r.residual = std::abs(r.lhs - r.rhs);
    const double zn = std::pow(z, static_cast<double>(cap));
    r.truncation_bound =
        zn * (mu * static_cast<double>(cap) * sol.tail_mass + overflow + 2.0 * sol.tail_mass * total_rate_bound);
    out.push_back(r);
  }
  return out;
}

std::uint64_t harmonic_chain_first_failure(std::uint64_t k_max) {
  using ld = long double;
  const ld ratio = std::log(ld{2}) / std::log(ld{1} + std::numbers::e_v<ld>);
  const ld slack = 4 * std::numeric_limits<ld>::epsilon();
  ld h = 0;
  for (std::uint64_t k = 1; k <= k_max; ++k) {
    const ld kk = static_cast<ld>(k);
    h += 1 / kk;
    const ld log_k1 = std::log(kk + 1);
    const ld scaled = std::log(kk + std::numbers::e_v<ld>) * ratio;
    if (!(h >= log_k1)) return k;
    if (!(log_k1 >= scaled * (1 - slack))) return k;
  }
  return 0;
}

NecessityReport necessity_check(const StationarySolution& sol, const StabilityVerdict& verdict,
                                double mu, std::uint64_t harmonic_k_max) {
  if (!verdict.stable) throw Error(ErrorCode::NotStable, "necessity inequality needs a stable model");
  NecessityReport r;
  const Vector& pi0 = sol.pi.front();
  r.lhs = pi0.dot(verdict.log_moment_vector);
  r.rhs = mu * std::log1p(std::numbers::e) / std::numbers::ln2 * (1.0 - pi0.sum());
  r.holds = r.lhs <= r.rhs;
  r.harmonic_checked_up_to = harmonic_k_max;
  r.harmonic_chain_holds = harmonic_chain_first_failure(harmonic_k_max) == 0;
  return r;
}

}  // namespace bmapinf
