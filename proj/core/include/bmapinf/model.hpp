#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "bmapinf/batch.hpp"

namespace bmapinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One customer class: arrivals of batch size k that move the background
// chain from i to j happen at rate rate_matrix(i, j) * batch.pmf(k).
struct ArrivalStream {
  std::string label;
  Matrix rate_matrix;
  BatchSizeDistribution batch = BatchSizeDistribution::single();
  double service_rate = 1.0;
};

// MBMAP {D(0), D_nu(k)} with class-dependent exponential service. The
// single-class BMAP is the case streams.size() == 1.
struct MbmapModel {
  Matrix d0;
  std::vector<ArrivalStream> streams;
};

struct ValidateOptions {
  // Absolute tolerance on the row sums of D = D(0) + sum_nu A_nu.
  double generator_tolerance = 1e-12;
};

class ValidatedModel {
 public:
  const MbmapModel& model() const noexcept { return model_; }
  const Matrix& d0() const noexcept { return model_.d0; }
  const std::vector<ArrivalStream>& streams() const noexcept { return model_.streams; }
  Eigen::Index phases() const noexcept { return model_.d0.rows(); }
  std::size_t classes() const noexcept { return model_.streams.size(); }
  // D, the generator of the background chain.
  const Matrix& generator() const noexcept { return generator_; }
  double generator_residual() const noexcept { return residual_; }

 private:
  friend ValidatedModel validate(MbmapModel model, const ValidateOptions& options);
  ValidatedModel() = default;

  MbmapModel model_;
  Matrix generator_;
  double residual_ = 0.0;
};

// Checks every structural assumption of the model and returns an immutable
// handle. Throws Error with NonGenerator, Reducible, NoArrivals, BadPmf or
// InvalidInput.
ValidatedModel validate(MbmapModel model, const ValidateOptions& options = {});

// Whether the off-diagonal support of a square matrix is strongly connected.
bool strongly_connected(const Matrix& m);

// Stationary law theta of the background chain: theta D = 0, theta e = 1.
Vector background_stationary(const ValidatedModel& model);

// Mean batch-arrival rate per unit time under theta, split by class.
std::vector<double> class_batch_rates(const ValidatedModel& model);

// ------------------------------------------------------------ views

enum class QueueSelector { Original, Queue1, Queue2 };

std::string_view queue_name(QueueSelector q) noexcept;
QueueSelector parse_queue(std::string_view name);

// A queue fed by the model's arrival process. Queue1 serves everyone at
// mu_min, Queue2 at mu_max; Original keeps the per-class rates. All three
// share D(0) and D*(k) = sum_nu A_nu p_nu(k).
struct BmapView {
  QueueSelector which = QueueSelector::Original;
  Matrix d0;
  std::vector<ArrivalStream> streams;

  Eigen::Index phases() const noexcept { return d0.rows(); }
  bool single_rate() const noexcept;
  // The common service rate; throws NotSingleRate for a multi-rate Original.
  double service_rate() const;
  double min_rate() const noexcept;
  double max_rate() const noexcept;

  // D*(k) for k >= 1.
  Matrix arrival_block(std::uint64_t k) const;
  // sum_{j >= m} D*(j).
  Matrix arrival_tail_block(std::uint64_t m) const;
  // sum_nu A_nu.
  Matrix total_arrival_matrix() const;
  // sum_k (1 - z^k) D*(k) e.
  Vector batch_transform_gap(double z) const;
};

struct FlattenedViews {
  BmapView original;
  BmapView queue1;
  BmapView queue2;
};

FlattenedViews flatten(const ValidatedModel& model);
BmapView make_view(const ValidatedModel& model, QueueSelector which);

// ------------------------------------------------------- stability

struct StabilityVerdict {
  bool stable = false;
  // sum_k log(k+e) D*(k) e, entrywise; +inf where divergent.
  Vector log_moment_vector;
  // max entry of log_moment_vector when stable, +inf otherwise.
  double bound = 0.0;
  std::vector<std::string> divergent_streams;
};

// sum_k log(k+e) p_k; +inf when divergent.
double log_moment(const BatchSizeDistribution& batch);

StabilityVerdict stability_verdict(const ValidatedModel& model);
StabilityVerdict stability_verdict(const BmapView& view);

}  // namespace bmapinf
