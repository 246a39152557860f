#include "bmapinf/series.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>

namespace bmapinf::series {

Estimate tail_integral(const std::function<double(double)>& log_space, double x) {
  const double t0 = std::log(x);
  auto integrand = [&](double u) {
    const double v = log_space(t0 + u);
    return std::isfinite(v) ? v : 0.0;
  };
  static thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(
      integrand, std::sqrt(std::numeric_limits<double>::epsilon()) * 1e-6, &err, &l1);
  return {value, err + 4 * std::numeric_limits<double>::epsilon() * l1};
}

Estimate em_tail(const SmoothSummand& s, double x) {
  const Estimate integral = tail_integral(s.log_space, x);
  const double fx = s.f(x);
  const double dfx = s.df(x);
  const double d3 = s.df(x + 1.0) - 2.0 * dfx + s.df(x - 1.0);
  const double value = integral.value + 0.5 * fx - dfx / 12.0;
  return {value, integral.error_bound + std::abs(d3) / 720.0 +
                     std::numeric_limits<double>::epsilon() * std::abs(value)};
}

Estimate sum(const SmoothSummand& s, std::uint64_t first, std::uint64_t split) {
  if (split < first + 2) split = first + 2;
  double partial = 0.0;
  double comp = 0.0;  // Kahan compensation
  for (std::uint64_t k = first; k < split; ++k) {
    const double y = s.f(static_cast<double>(k)) - comp;
    const double t = partial + y;
    comp = (t - partial) - y;
    partial = t;
  }
  const Estimate tail = em_tail(s, static_cast<double>(split));
  const double value = partial + tail.value;
  return {value, tail.error_bound + 4 * std::numeric_limits<double>::epsilon() * std::abs(value)};
}

}  // namespace bmapinf::series
