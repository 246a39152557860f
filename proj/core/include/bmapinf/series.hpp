#pragma once

#include <cstdint>
#include <functional>

namespace bmapinf::series {

struct Estimate {
  double value = 0.0;
  double error_bound = 0.0;
};

// A summand that is smooth and eventually decreasing on [1, inf).
//
// `log_space(t)` must return e^t * f(e^t) and stay finite for every t >= 0;
// it is what the tail integral actually integrates, so families are expected
// to evaluate it in log form instead of composing f with exp().
struct SmoothSummand {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> log_space;
};

// Integral of f over [x, inf), computed in the variable t = log u.
Estimate tail_integral(const std::function<double(double)>& log_space, double x);

// Euler-Maclaurin estimate of sum_{k >= x} f(k) for integer-valued x >= 2:
//   int_x^inf f + f(x)/2 - f'(x)/12,
// with error bound |f'''(x)|/720 (f''' by central differences of f') plus the
// quadrature error.
Estimate em_tail(const SmoothSummand& s, double x);

// sum_{k >= first} f(k): direct partial sum up to split-1, Euler-Maclaurin
// tail from split.
Estimate sum(const SmoothSummand& s, std::uint64_t first, std::uint64_t split);

}  // namespace bmapinf::series
