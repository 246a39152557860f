#include "bmapinf/gth.hpp"

#include "bmapinf/error.hpp"

namespace bmapinf {

Eigen::VectorXd gth_stationary(Eigen::MatrixXd q) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index n = q.rows();
  if (n == 0 || q.cols() != n) throw Error(ErrorCode::InvalidInput, "GTH needs a square matrix");
  RowMajor a = std::move(q);

  for (Eigen::Index k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) s += a(k, j);
    if (!(s > 0.0)) throw Error(ErrorCode::SolveFailed, "generator is reducible (GTH pivot is zero)");
    for (Eigen::Index i = 0; i < k; ++i) a(i, k) /= s;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double f = a(i, k);
      if (f == 0.0) continue;
      double* row = a.row(i).data();
      const double* pivot = a.row(k).data();
      for (Eigen::Index j = 0; j < k; ++j) row[j] += f * pivot[j];
    }
  }

  Eigen::VectorXd x(n);
  x(0) = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) acc += x(i) * a(i, k);
    x(k) = acc;
  }
  return x / x.sum();
}

}  // namespace bmapinf
