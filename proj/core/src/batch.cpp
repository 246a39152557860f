#include "bmapinf/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bmapinf/error.hpp"
#include "bmapinf/series.hpp"

namespace bmapinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kE = std::numbers::e;
constexpr double kPmfTolerance = 1e-12;
// Relative stopping threshold for geometric-ratio tail bounds.
constexpr double kSeriesRelTol = 1e-17;

// log(e^t + a) for a >= 0, finite for any t.
double log_exp_plus(double t, double a) {
  if (t > 0.0) return t + std::log1p(a * std::exp(-t));
  return std::log(std::exp(t) + a);
}

// log(1 + e^t / c).
double log1p_exp_over(double t, double c) {
  const double lc = std::log(c);
  if (t > lc) return t - lc + std::log1p(c * std::exp(-t));
  return std::log1p(std::exp(t) / c);
}

[[noreturn]] void bad_pmf(const std::string& msg) { throw Error(ErrorCode::BadPmf, msg); }

}  // namespace

std::string_view family_name(BatchFamily f) noexcept {
  switch (f) {
    case BatchFamily::Finite: return "finite";
    case BatchFamily::Geometric: return "geometric";
    case BatchFamily::Zeta: return "zeta";
    case BatchFamily::LogHeavy: return "logheavy";
  }
  return "unknown";
}

class BatchSizeDistribution::Impl {
 public:
  virtual ~Impl() = default;
  virtual BatchFamily family() const = 0;
  virtual double parameter() const { return std::numeric_limits<double>::quiet_NaN(); }
  virtual std::span<const double> finite_pmf() const { return {}; }
  virtual bool proper() const { return true; }
  virtual double normalizer() const { return 1.0; }
  virtual double normalizer_error() const { return 0.0; }
  virtual double pmf(std::uint64_t k) const = 0;
  virtual double tail(std::uint64_t k) const = 0;
  virtual double pgf(double z) const = 0;
  virtual double mean() const = 0;
  virtual double log_moment() const = 0;
  virtual double log_ratio_moment(double c) const = 0;
  virtual std::uint64_t sample(double u, std::uint64_t max_batch) const = 0;
};

namespace {

// ---------------------------------------------------------------- Finite

class FiniteImpl final : public BatchSizeDistribution::Impl {
 public:
  explicit FiniteImpl(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) bad_pmf("finite pmf is empty");
    double total = 0.0;
    for (double p : pmf_) {
      if (!std::isfinite(p) || p < 0.0) bad_pmf("finite pmf has a negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kPmfTolerance) {
      std::ostringstream os;
      os << "finite pmf sums to " << total << ", not 1";
      bad_pmf(os.str());
    }
    // suffix_[k-1] = P(B >= k) for k = 1..m+1.
    suffix_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t i = pmf_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + pmf_[i];
  }

  BatchFamily family() const override { return BatchFamily::Finite; }
  std::span<const double> finite_pmf() const override { return pmf_; }

  double pmf(std::uint64_t k) const override {
    return (k >= 1 && k <= pmf_.size()) ? pmf_[k - 1] : 0.0;
  }
  double tail(std::uint64_t k) const override {
    if (k <= 1) return 1.0;
    return k - 1 < suffix_.size() ? suffix_[k - 1] : 0.0;
  }
  double pgf(double z) const override {
    double acc = 0.0;
    double zk = z;
    for (double p : pmf_) {
      acc += p * zk;
      zk *= z;
    }
    return acc;
  }
  double mean() const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) acc += static_cast<double>(i + 1) * pmf_[i];
    return acc;
  }
  double log_moment() const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      acc += std::log(static_cast<double>(i + 1) + kE) * pmf_[i];
    return acc;
  }
  double log_ratio_moment(double c) const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      acc += std::log1p(static_cast<double>(i + 1) / c) * pmf_[i];
    return acc;
  }
  std::uint64_t sample(double u, std::uint64_t max_batch) const override {
    // smallest k with P(B >= k+1) <= u
    std::size_t k = 1;
    while (k < pmf_.size() && suffix_[k] > u) ++k;
    return std::min<std::uint64_t>(k, max_batch);
  }

 private:
  std::vector<double> pmf_;
  std::vector<double> suffix_;
};

// ------------------------------------------------------------- Geometric

class GeometricImpl final : public BatchSizeDistribution::Impl {
 public:
  explicit GeometricImpl(double p) : p_(p) {
    if (!(p > 0.0 && p < 1.0)) bad_pmf("geometric success probability must lie in (0,1)");
    log_q_ = std::log1p(-p);
  }

  BatchFamily family() const override { return BatchFamily::Geometric; }
  double parameter() const override { return p_; }

  double pmf(std::uint64_t k) const override {
    if (k == 0) return 0.0;
    return p_ * std::exp(static_cast<double>(k - 1) * log_q_);
  }
  double tail(std::uint64_t k) const override {
    if (k <= 1) return 1.0;
    return std::exp(static_cast<double>(k - 1) * log_q_);
  }
  double pgf(double z) const override { return p_ * z / (1.0 - (1.0 - p_) * z); }
  double mean() const override { return 1.0 / p_; }

  double log_moment() const override {
    return ratio_bounded_sum([](double k) { return std::log(k + kE); },
                             [](double k) { return 1.0 + 1.0 / ((k + kE) * std::log(k + kE)); });
  }
  double log_ratio_moment(double c) const override {
    // log(1+(k+1)/c) <= (k+1)/k * log(1+k/c) by concavity
    return ratio_bounded_sum([c](double k) { return std::log1p(k / c); },
                             [](double k) { return (k + 1.0) / k; });
  }

  std::uint64_t sample(double u, std::uint64_t max_batch) const override {
    // smallest k with q^k <= u
    const double k = std::ceil(std::log(u) / log_q_);
    if (!(k < static_cast<double>(max_batch))) return max_batch;
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
  }

 private:
  // sum_k g(k) p_k where g(k+1)/g(k) <= growth(k), growth decreasing to 1.
  template <class G, class Growth>
  double ratio_bounded_sum(G g, Growth growth) const {
    const double q = 1.0 - p_;
    double acc = 0.0;
    double qk = 1.0;  // q^(k-1)
    for (std::uint64_t k = 1;; ++k) {
      const double kd = static_cast<double>(k);
      const double term = g(kd) * qk * p_;
      acc += term;
      const double rho = q * growth(kd + 1.0);
      if (rho < 1.0) {
        const double next = g(kd + 1.0) * qk * q * p_;
        if (next / (1.0 - rho) <= kSeriesRelTol * acc) break;
      }
      qk *= q;
      if (qk == 0.0) break;
    }
    return acc;
  }

  double p_;
  double log_q_;
};

// ----------------------------------------- tabulated heavy-tailed families

// Parametric law p_k = w(k)/Z with a smooth, decreasing weight w. The first
// kTable probabilities are cached as suffix sums so that tails and inverse-CDF
// draws in the bulk are exact table lookups; beyond the table the tail is the
// Euler-Maclaurin expression of the weight, inverted by safeguarded Newton.
class TabulatedImpl : public BatchSizeDistribution::Impl {
 public:
  static constexpr std::uint64_t kTable = 1u << 16;
  static constexpr std::uint64_t kSplitNormalizer = 4096;
  static constexpr std::uint64_t kSplitMoments = 4096;
  static constexpr std::uint64_t kSplitRatio = 1024;

  double normalizer() const override { return z_; }
  double normalizer_error() const override { return z_err_; }

  double pmf(std::uint64_t k) const override {
    require_proper();
    if (k == 0) return 0.0;
    if (k <= kTable) return table_pmf_[k];
    return weight(static_cast<double>(k)) / z_;
  }
  double tail(std::uint64_t k) const override {
    require_proper();
    if (k <= 1) return 1.0;
    if (k <= kTable + 1) return suffix_[k];
    return raw_tail(static_cast<double>(k)) / z_;
  }
  double pgf(double z) const override {
    require_proper();
    if (z >= 1.0) return 1.0;
    if (z <= 0.0) return 0.0;
    double acc = 0.0;
    double zk = z;
    for (std::uint64_t k = 1;; ++k) {
      const double pk = pmf(k);
      acc += pk * zk;
      // p_k is decreasing, so the rest is at most p_k z^(k+1) / (1-z).
      if (pk * zk * z / (1.0 - z) <= kSeriesRelTol * acc) break;
      zk *= z;
      if (zk == 0.0) break;
      if (k > 100'000'000) throw Error(ErrorCode::NumericalFailure, "pgf series did not converge");
    }
    return acc;
  }

  double log_moment() const override {
    if (!log_moment_converges()) return kInf;
    return weighted_sum([](double x) { return std::log(x + kE); },
                        [](double x) { return 1.0 / (x + kE); },
                        [](double t) { return log_exp_plus(t, kE); }, kSplitMoments);
  }
  double log_ratio_moment(double c) const override {
    if (!log_moment_converges()) return kInf;
    return weighted_sum([c](double x) { return std::log1p(x / c); },
                        [c](double x) { return 1.0 / (x + c); },
                        [c](double t) { return log1p_exp_over(t, c); }, kSplitRatio);
  }

  std::uint64_t sample(double u, std::uint64_t max_batch) const override {
    require_proper();
    // B = min{k : P(B >= k+1) <= u}
    if (suffix_[kTable + 1] <= u) {
      // suffix_ is non-increasing on [2, kTable+1]
      auto first = suffix_.begin() + 2;
      auto last = suffix_.begin() + static_cast<std::ptrdiff_t>(kTable) + 2;
      auto it = std::partition_point(first, last, [u](double s) { return s > u; });
      const auto k = static_cast<std::uint64_t>(it - suffix_.begin()) - 1;
      return std::min(k, max_batch);
    }
    if (max_batch <= kTable) return max_batch;
    const double target = u * z_;
    const double cap = static_cast<double>(max_batch) + 1.0;
    if (raw_tail(cap) > target) return max_batch;
    // Solve raw_tail(x) = target on [kTable+1, cap] in y = log x; raw_tail is
    // decreasing, so [lo, hi] stays a bracket.
    double lo = std::log(static_cast<double>(kTable + 1));
    double hi = std::log(cap);
    double y = initial_guess(target, lo, hi);
    const double log_target = std::log(target);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double x = std::exp(y);
      const double gx = raw_tail(x);
      const double phi = std::log(gx) - log_target;
      if (phi == 0.0) break;
      if (phi > 0) lo = y; else hi = y;
      const double slope = -x * weight(x) / gx;
      double next = y - phi / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const bool done = std::abs(next - y) <= 1e-15 * y;
      y = next;
      if (done) break;
    }
    const double xstar = std::exp(y);
    // Beyond ~1e12 consecutive tails differ by less than the resolution of u.
    if (xstar > 1e12) {
      const double k = std::floor(xstar);
      return k >= static_cast<double>(max_batch) ? max_batch : static_cast<std::uint64_t>(k);
    }
    auto k = std::max<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(xstar - 1.0)), kTable + 1);
    // Integer fix-up: tail(k+1) <= u < tail(k).
    while (raw_tail(static_cast<double>(k + 1)) > target) ++k;
    while (k > kTable + 1 && raw_tail(static_cast<double>(k)) <= target) --k;
    return std::min(k, max_batch);
  }

 protected:
  // Unnormalized weight and its derivative.
  virtual double weight(double x) const = 0;
  virtual double dweight(double x) const = 0;
  // e^t w(e^t), evaluated stably.
  virtual double log_space_weight(double t) const = 0;
  virtual bool weights_summable() const = 0;
  virtual bool log_moment_converges() const = 0;
  virtual double initial_guess(double target, double lo, double hi) const {
    (void)target;
    return 0.5 * (lo + hi);
  }

  // sum_{k >= x} w(k) for integer x beyond the table.
  virtual double raw_tail(double x) const {
    return series::em_tail(weight_summand(), x).value;
  }

  series::SmoothSummand weight_summand() const {
    return {[this](double x) { return weight(x); }, [this](double x) { return dweight(x); },
            [this](double t) { return log_space_weight(t); }};
  }

  void require_proper() const {
    if (!weights_summable()) bad_pmf("batch-size weights are not summable; " + label());
  }

  virtual std::string label() const = 0;

  // Called by the concrete constructors once parameters are set.
  void initialize() {
    if (!weights_summable()) {
      z_ = kInf;
      z_err_ = 0.0;
      return;
    }
    const series::Estimate z = series::sum(weight_summand(), 1, kSplitNormalizer);
    z_ = z.value;
    z_err_ = z.error_bound;
    table_pmf_.assign(kTable + 1, 0.0);
    for (std::uint64_t k = 1; k <= kTable; ++k) table_pmf_[k] = weight(static_cast<double>(k)) / z_;
    suffix_.assign(kTable + 2, 0.0);
    suffix_[kTable + 1] = raw_tail(static_cast<double>(kTable + 1)) / z_;
    for (std::uint64_t k = kTable; k >= 1; --k) suffix_[k] = suffix_[k + 1] + table_pmf_[k];
  }

  template <class G, class DG, class LG>
  double weighted_sum(G g, DG dg, LG log_g, std::uint64_t split) const {
    const double z = z_;
    series::SmoothSummand s{
        [this, g, z](double x) { return g(x) * weight(x) / z; },
        [this, g, dg, z](double x) { return (dg(x) * weight(x) + g(x) * dweight(x)) / z; },
        [this, log_g, z](double t) { return log_g(t) * log_space_weight(t) / z; }};
    return series::sum(s, 1, split).value;
  }

  double z_ = 1.0;
  double z_err_ = 0.0;
  std::vector<double> table_pmf_;
  std::vector<double> suffix_;
};

class ZetaImpl final : public TabulatedImpl {
 public:
  explicit ZetaImpl(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) bad_pmf("zeta exponent must exceed 1");
    initialize();
  }

  BatchFamily family() const override { return BatchFamily::Zeta; }
  double parameter() const override { return alpha_; }

  double mean() const override {
    if (alpha_ <= 2.0) return kInf;
    return zeta(alpha_ - 1.0) / z_;
  }

  // Riemann zeta by partial sums with a closed-form Euler-Maclaurin tail.
  static double zeta(double s) {
    constexpr std::uint64_t m = 1024;
    double acc = 0.0;
    for (std::uint64_t k = m - 1; k >= 1; --k) acc += std::pow(static_cast<double>(k), -s);
    return acc + closed_tail(s, static_cast<double>(m));
  }

 protected:
  double weight(double x) const override { return std::pow(x, -alpha_); }
  double dweight(double x) const override { return -alpha_ * std::pow(x, -alpha_ - 1.0); }
  double log_space_weight(double t) const override { return std::exp((1.0 - alpha_) * t); }
  bool weights_summable() const override { return true; }
  bool log_moment_converges() const override { return true; }
  std::string label() const override { return "zeta"; }

  double raw_tail(double x) const override { return closed_tail(alpha_, x); }

  double initial_guess(double target, double lo, double hi) const override {
    // x^(1-alpha)/(alpha-1) = target
    const double y = std::log(target * (alpha_ - 1.0)) / (1.0 - alpha_);
    return std::clamp(y, lo, hi);
  }

 private:
  // sum_{k >= x} k^-s through the f''' term; the next term is below 1e-25 for x >= 1024.
  static double closed_tail(double s, double x) {
    return std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s) +
           s * std::pow(x, -s - 1.0) / 12.0 -
           s * (s + 1.0) * (s + 2.0) * std::pow(x, -s - 3.0) / 720.0;
  }

  double alpha_;
};

class LogHeavyImpl final : public TabulatedImpl {
 public:
  explicit LogHeavyImpl(double beta) : beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) bad_pmf("logheavy exponent must be positive");
    initialize();
  }

  BatchFamily family() const override { return BatchFamily::LogHeavy; }
  double parameter() const override { return beta_; }
  bool proper() const override { return weights_summable(); }
  double mean() const override {
    require_proper();
    return kInf;
  }

 protected:
  double weight(double x) const override {
    return 1.0 / ((x + 1.0) * std::pow(std::log(x + 1.0 + kE), beta_));
  }
  double dweight(double x) const override {
    const double l = std::log(x + 1.0 + kE);
    return -weight(x) * (1.0 / (x + 1.0) + beta_ / ((x + 1.0 + kE) * l));
  }
  double log_space_weight(double t) const override {
    // e^t / ((e^t + 1) log(e^t + 1 + e)^beta)
    const double frac = t > 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (std::exp(t) + 1.0);
    return frac * std::pow(log_exp_plus(t, 1.0 + kE), -beta_);
  }
  bool weights_summable() const override { return beta_ > 1.0; }
  bool log_moment_converges() const override { return beta_ > 2.0; }
  std::string label() const override {
    std::ostringstream os;
    os << "logheavy(beta=" << beta_ << ") requires beta > 1";
    return os.str();
  }
  double initial_guess(double target, double lo, double hi) const override {
    // log(x)^(1-beta)/(beta-1) = target
    const double y = std::pow(target * (beta_ - 1.0), 1.0 / (1.0 - beta_));
    return std::isfinite(y) ? std::clamp(y, lo, hi) : hi;
  }

 private:
  double beta_;
};

}  // namespace

// ----------------------------------------------------------------- facade

BatchSizeDistribution BatchSizeDistribution::finite(std::vector<double> pmf) {
  return BatchSizeDistribution(std::make_shared<FiniteImpl>(std::move(pmf)));
}
BatchSizeDistribution BatchSizeDistribution::geometric(double p) {
  return BatchSizeDistribution(std::make_shared<GeometricImpl>(p));
}
BatchSizeDistribution BatchSizeDistribution::zeta(double alpha) {
  return BatchSizeDistribution(std::make_shared<ZetaImpl>(alpha));
}
BatchSizeDistribution BatchSizeDistribution::log_heavy(double beta) {
  return BatchSizeDistribution(std::make_shared<LogHeavyImpl>(beta));
}

BatchFamily BatchSizeDistribution::family() const noexcept { return impl_->family(); }
double BatchSizeDistribution::parameter() const noexcept { return impl_->parameter(); }
std::span<const double> BatchSizeDistribution::finite_pmf() const noexcept {
  return impl_->finite_pmf();
}
bool BatchSizeDistribution::proper() const noexcept { return impl_->proper(); }
double BatchSizeDistribution::normalizer() const { return impl_->normalizer(); }
double BatchSizeDistribution::normalizer_error() const { return impl_->normalizer_error(); }
double BatchSizeDistribution::pmf(std::uint64_t k) const { return impl_->pmf(k); }
double BatchSizeDistribution::tail(std::uint64_t k) const { return impl_->tail(k); }
double BatchSizeDistribution::pgf(double z) const { return impl_->pgf(z); }
double BatchSizeDistribution::mean() const { return impl_->mean(); }
double BatchSizeDistribution::log_moment() const { return impl_->log_moment(); }

bool BatchSizeDistribution::finite_log_moment() const noexcept {
  // Finite, Geometric and Zeta always have one; LogHeavy iff beta > 2.
  if (family() != BatchFamily::LogHeavy) return true;
  return parameter() > 2.0;
}

double BatchSizeDistribution::log_ratio_moment(double c) const {
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidInput, "log_ratio_moment needs c > 0");
  return impl_->log_ratio_moment(c);
}

std::uint64_t BatchSizeDistribution::sample(double u, std::uint64_t max_batch) const {
  if (max_batch == 0) max_batch = 1;
  return impl_->sample(u, max_batch);
}

std::string BatchSizeDistribution::describe() const {
  std::ostringstream os;
  os << family_name(family());
  if (family() == BatchFamily::Finite) {
    os << "(m=" << finite_pmf().size() << ")";
  } else {
    os << "(" << parameter() << ")";
  }
  return os.str();
}

}  // namespace bmapinf
