#include "bmapinf/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bmapinf/error.hpp"

namespace bmapinf {

namespace {

constexpr double kE = std::numbers::e;

double max_entry(const Vector& v) { return v.maxCoeff(); }

}  // namespace

double lyapunov_value(std::uint64_t k) noexcept { return std::log(static_cast<double>(k) + kE); }

Vector tail_drift_term(const BmapView& view, std::uint64_t k) {
  const double c = static_cast<double>(k) + kE;
  Vector out = Vector::Zero(view.phases());
  for (const auto& s : view.streams) {
    const double t = s.batch.log_ratio_moment(c);
    if (!std::isfinite(t))
      throw Error(ErrorCode::DivergentDrift,
                  "stream '" + s.label + "' batch law " + s.batch.describe() + " has no logarithmic moment");
    const Vector rates = s.rate_matrix.rowwise().sum();
    for (Eigen::Index i = 0; i < out.size(); ++i)
      if (rates(i) != 0.0) out(i) += rates(i) * t;
  }
  return out;
}

Vector drift_vector(const BmapView& view, std::uint64_t k) {
  if (k == 0) {
    const StabilityVerdict v = stability_verdict(view);
    if (!v.stable) throw Error(ErrorCode::DivergentDrift, "y(0) diverges: the log-moment condition fails");
    return view.d0.rowwise().sum() + v.log_moment_vector;
  }
  const double kk = static_cast<double>(k);
  const double service = kk * view.service_rate() * std::log1p(-1.0 / (kk + kE));
  return tail_drift_term(view, k).array() + service;
}

double delta_star(double mu) {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidInput, "service rate must be positive");
  return 0.5 * mu * (std::log1p(kE) - 1.0);
}

std::uint64_t find_K(const BmapView& view, double delta, std::uint64_t scan_limit) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidInput, "delta must be positive");
  auto ok = [&](std::uint64_t j) { return max_entry(tail_drift_term(view, j)) <= delta; };
  if (ok(1)) return 0;
  // Tail term is nonincreasing in k: gallop to a passing j, then bisect.
  std::uint64_t lo = 1, hi = 2;
  while (!ok(hi)) {
    if (hi > scan_limit) {
      std::ostringstream os;
      os << "tail drift term stays above delta = " << delta << " up to k = " << hi;
      throw Error(ErrorCode::NoSuchK, os.str());
    }
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi - 1;
}

DriftCertificate check_certificate(const BmapView& view, const CertificateOptions& options) {
  const StabilityVerdict verdict = stability_verdict(view);
  if (!verdict.stable) throw Error(ErrorCode::NotStable, "log-moment condition fails; no drift certificate exists");

  DriftCertificate cert;
  cert.delta = delta_star(view.service_rate());
  cert.K = find_K(view, cert.delta);
  cert.C = verdict.bound;
  cert.verified_range = options.range.value_or(10 * cert.K + 100);

  auto record = [&](std::uint64_t k, const char* which, const Vector& y, double bound) {
    const double excess = max_entry(y) - bound;
    if (excess > 0.0) cert.violations.push_back({k, which, excess});
  };

  Vector prev_tail;
  for (std::uint64_t k = 0; k <= cert.verified_range; ++k) {
    const Vector y = drift_vector(view, k);
    if (k <= options.report_limit) cert.drift_vectors.emplace(k, y);
    if (k == 0) {
      record(k, "y0", y, cert.C);
      continue;
    }
    if (k <= cert.K)
      record(k, "inner", y, -2.0 * cert.delta + cert.C);
    else
      record(k, "outer", y, -cert.delta);
    const Vector tail = tail_drift_term(view, k);
    if (prev_tail.size() > 0) {
      const double rise = (tail - prev_tail).maxCoeff();
      if (rise > 8 * std::numeric_limits<double>::epsilon() * prev_tail.cwiseAbs().maxCoeff()) cert.violations.push_back({k, "monotone", rise});
    }
    prev_tail = tail;
  }
  return cert;
}

DriftCertificate foster_certificate(const BmapView& view, const CertificateOptions& options) {
  DriftCertificate cert = check_certificate(view, options);
  if (!cert.violations.empty()) {
    const auto& v = cert.violations.front();
    std::ostringstream os;
    os << cert.violations.size() << " drift inequality violation(s); first at k = " << v.k << " (" << v.inequality
       << ", excess " << v.excess << ")";
    throw Error(ErrorCode::CertificateFailed, os.str());
  }
  return cert;
}

}  // namespace bmapinf
