#include "bmapinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bmapinf/error.hpp"
#include "bmapinf/gth.hpp"

namespace bmapinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::vector<bool> reachable(const Matrix& m, bool transpose) {
  const Eigen::Index d = m.rows();
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j == i || seen[static_cast<std::size_t>(j)]) continue;
      const double w = transpose ? m(j, i) : m(i, j);
      if (w > 0.0) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

bool strongly_connected(const Matrix& m) {
  if (m.rows() <= 1) return true;
  const auto fwd = reachable(m, false);
  const auto bwd = reachable(m, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

ValidatedModel validate(MbmapModel model, const ValidateOptions& options) {
  const Eigen::Index d = model.d0.rows();
  if (d < 1 || model.d0.cols() != d) fail(ErrorCode::InvalidInput, "D(0) must be a non-empty square matrix");
  if (!all_finite(model.d0)) fail(ErrorCode::InvalidInput, "D(0) has non-finite entries");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(model.d0(i, i) < 0.0)) fail(ErrorCode::NonGenerator, "D(0) must have a strictly negative diagonal");
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j && model.d0(i, j) < 0.0)
        fail(ErrorCode::NonGenerator, "D(0) must have nonnegative off-diagonal entries");
  }
  if (model.streams.empty()) fail(ErrorCode::NoArrivals, "model has no arrival streams");

  Matrix generator = model.d0;
  for (std::size_t nu = 0; nu < model.streams.size(); ++nu) {
    ArrivalStream& s = model.streams[nu];
    if (s.label.empty()) s.label = "class" + std::to_string(nu + 1);
    if (s.rate_matrix.rows() != d || s.rate_matrix.cols() != d)
      fail(ErrorCode::InvalidInput, "stream '" + s.label + "' rate matrix has the wrong shape");
    if (!all_finite(s.rate_matrix) || (s.rate_matrix.array() < 0.0).any())
      fail(ErrorCode::InvalidInput, "stream '" + s.label + "' rate matrix must be finite and nonnegative");
    if (!(s.rate_matrix.array() > 0.0).any())
      fail(ErrorCode::NoArrivals, "stream '" + s.label + "' has zero total arrival rate");
    if (!(s.service_rate > 0.0) || !std::isfinite(s.service_rate))
      fail(ErrorCode::InvalidInput, "stream '" + s.label + "' service rate must be positive");
    if (!s.batch.proper())
      fail(ErrorCode::BadPmf, "stream '" + s.label + "' batch law " + s.batch.describe() +
                                  " is not normalizable");
    generator += s.rate_matrix;
  }
  for (std::size_t a = 0; a < model.streams.size(); ++a)
    for (std::size_t b = a + 1; b < model.streams.size(); ++b)
      if (model.streams[a].label == model.streams[b].label)
        fail(ErrorCode::InvalidInput, "duplicate stream label '" + model.streams[a].label + "'");

  const double residual = generator.rowwise().sum().cwiseAbs().maxCoeff();
  if (!(residual <= options.generator_tolerance)) {
    std::ostringstream os;
    os << "row sums of D = D(0) + sum A deviate from 0 by " << residual << " (tolerance "
       << options.generator_tolerance << ")";
    fail(ErrorCode::NonGenerator, os.str());
  }
  if (!strongly_connected(generator))
    fail(ErrorCode::Reducible, "background generator D is not irreducible");

  ValidatedModel v;
  v.model_ = std::move(model);
  v.generator_ = std::move(generator);
  v.residual_ = residual;
  return v;
}

Vector background_stationary(const ValidatedModel& model) {
  Vector theta = gth_stationary(model.generator());
  const double res = (theta.transpose() * model.generator()).cwiseAbs().maxCoeff();
  if (!(res <= 1e-12) || !(theta.array() > 0.0).all())
    throw Error(ErrorCode::SolveFailed, "background stationary solve did not converge");
  return theta;
}

std::vector<double> class_batch_rates(const ValidatedModel& model) {
  const Vector theta = background_stationary(model);
  std::vector<double> rates;
  for (const auto& s : model.streams()) rates.push_back(theta.dot(s.rate_matrix.rowwise().sum()));
  return rates;
}

// ------------------------------------------------------------ views

std::string_view queue_name(QueueSelector q) noexcept {
  switch (q) {
    case QueueSelector::Original: return "original";
    case QueueSelector::Queue1: return "q1";
    case QueueSelector::Queue2: return "q2";
  }
  return "original";
}

QueueSelector parse_queue(std::string_view name) {
  if (name == "original") return QueueSelector::Original;
  if (name == "q1") return QueueSelector::Queue1;
  if (name == "q2") return QueueSelector::Queue2;
  throw Error(ErrorCode::InvalidInput, "unknown queue selector '" + std::string(name) + "'");
}

bool BmapView::single_rate() const noexcept { return min_rate() == max_rate(); }

double BmapView::service_rate() const {
  if (!single_rate())
    throw Error(ErrorCode::NotSingleRate,
                "the original multiclass queue has distinct service rates; use q1 or q2");
  return streams.front().service_rate;
}

double BmapView::min_rate() const noexcept {
  double m = kInf;
  for (const auto& s : streams) m = std::min(m, s.service_rate);
  return m;
}

double BmapView::max_rate() const noexcept {
  double m = 0.0;
  for (const auto& s : streams) m = std::max(m, s.service_rate);
  return m;
}

Matrix BmapView::arrival_block(std::uint64_t k) const {
  Matrix out = Matrix::Zero(phases(), phases());
  if (k == 0) return out;
  for (const auto& s : streams) {
    const double p = s.batch.pmf(k);
    if (p != 0.0) out += p * s.rate_matrix;
  }
  return out;
}

Matrix BmapView::arrival_tail_block(std::uint64_t m) const {
  Matrix out = Matrix::Zero(phases(), phases());
  for (const auto& s : streams) {
    const double g = s.batch.tail(m);
    if (g != 0.0) out += g * s.rate_matrix;
  }
  return out;
}

Matrix BmapView::total_arrival_matrix() const { return arrival_tail_block(1); }

Vector BmapView::batch_transform_gap(double z) const {
  Vector out = Vector::Zero(phases());
  for (const auto& s : streams) out += (1.0 - s.batch.pgf(z)) * s.rate_matrix.rowwise().sum();
  return out;
}

BmapView make_view(const ValidatedModel& model, QueueSelector which) {
  BmapView v;
  v.which = which;
  v.d0 = model.d0();
  v.streams = model.streams();
  if (which != QueueSelector::Original) {
    double lo = kInf, hi = 0.0;
    for (const auto& s : v.streams) {
      lo = std::min(lo, s.service_rate);
      hi = std::max(hi, s.service_rate);
    }
    const double mu = which == QueueSelector::Queue1 ? lo : hi;
    for (auto& s : v.streams) s.service_rate = mu;
  }
  return v;
}

FlattenedViews flatten(const ValidatedModel& model) {
  return {make_view(model, QueueSelector::Original), make_view(model, QueueSelector::Queue1),
          make_view(model, QueueSelector::Queue2)};
}

// ------------------------------------------------------- stability

double log_moment(const BatchSizeDistribution& batch) { return batch.log_moment(); }

namespace {

StabilityVerdict verdict_for(Eigen::Index d, const std::vector<ArrivalStream>& streams) {
  StabilityVerdict v;
  v.log_moment_vector = Vector::Zero(d);
  for (const auto& s : streams) {
    const double lm = log_moment(s.batch);
    const Vector rates = s.rate_matrix.rowwise().sum();
    if (!std::isfinite(lm)) v.divergent_streams.push_back(s.label);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (rates(i) == 0.0) continue;  // 0 * inf contributes nothing
      v.log_moment_vector(i) += std::isfinite(lm) ? rates(i) * lm : kInf;
    }
  }
  v.stable = v.log_moment_vector.allFinite();
  v.bound = v.stable ? v.log_moment_vector.maxCoeff() : kInf;
  return v;
}

}  // namespace

StabilityVerdict stability_verdict(const ValidatedModel& model) {
  return verdict_for(model.phases(), model.streams());
}

StabilityVerdict stability_verdict(const BmapView& view) {
  return verdict_for(view.phases(), view.streams);
}

}  // namespace bmapinf
