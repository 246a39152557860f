#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmapinf/model.hpp"

namespace bmapinf {

// v(k, i) = log(k + e).
double lyapunov_value(std::uint64_t k) noexcept;

// y(k) = (Q v)(k), as a d-vector:
//   y(0) = D(0) e + sum_l log(l+e) D*(l) e
//   y(k) = k mu log(1 - 1/(k+e)) e + sum_l log(1 + l/(k+e)) D*(l) e,   k >= 1
// Throws DivergentDrift when a stream's batch law has no log moment.
Vector drift_vector(const BmapView& view, std::uint64_t k);

// sum_l log(1 + l/(k+e)) D*(l) e, the arrival part of y(k).
Vector tail_drift_term(const BmapView& view, std::uint64_t k);

// (mu/2)(log(1+e) - 1).
double delta_star(double mu);

inline constexpr std::uint64_t kDefaultKScanLimit = std::uint64_t{1} << 40;

// Smallest K with tail_drift_term(K+1) <= delta componentwise.
// Throws DivergentDrift or NoSuchK (no K below scan_limit).
std::uint64_t find_K(const BmapView& view, double delta, std::uint64_t scan_limit = kDefaultKScanLimit);

struct DriftViolation {
  std::uint64_t k = 0;
  std::string inequality;  // "y0", "inner", "outer" or "monotone"
  double excess = 0.0;     // max componentwise amount above the bound
};

struct DriftCertificate {
  double delta = 0.0;
  std::uint64_t K = 0;
  double C = 0.0;
  std::map<std::uint64_t, Vector> drift_vectors;
  std::uint64_t verified_range = 0;
  std::vector<DriftViolation> violations;
};

struct CertificateOptions {
  // Defaults to 10 K + 100.
  std::optional<std::uint64_t> range;
  // y(k) is stored for k = 0..min(report_limit, range).
  std::uint64_t report_limit = 50;
};

// Certificate Q v <= -delta e + (delta + C) 1_K with extremal delta and
// minimal K, checked for every k up to the verified range.
// Throws NotStable, or CertificateFailed if any inequality is violated.
DriftCertificate foster_certificate(const BmapView& view, const CertificateOptions& options = {});

// Same checks without throwing on violations; used by the CLI to report them.
DriftCertificate check_certificate(const BmapView& view, const CertificateOptions& options = {});

}  // namespace bmapinf
