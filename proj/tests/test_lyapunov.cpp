#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bmapinf/error.hpp"
#include "bmapinf/lyapunov.hpp"
#include "oracles.hpp"

using namespace bmapinf;

namespace {

constexpr double kE = std::numbers::e;

BmapView scalar_view(double lambda, BatchSizeDistribution batch, double mu) {
  BmapView v;
  v.d0 = Matrix::Constant(1, 1, -lambda);
  v.streams.push_back({"s", Matrix::Constant(1, 1, lambda), batch, mu});
  return v;
}

BmapView corpus_view(const std::string& f) { return make_view(oracle::load(f), QueueSelector::Queue1); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bmapinf::Error thrown";
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST(LyapunovValue, Values) {
  EXPECT_EQ(lyapunov_value(0), 1.0);
  EXPECT_NEAR(lyapunov_value(1), 1.313262, 1e-6);
  for (std::uint64_t k = 1; k < 1000; ++k) {
    ASSERT_GT(lyapunov_value(k), lyapunov_value(k - 1));
    ASSERT_LE(lyapunov_value(k + 1) - lyapunov_value(k), lyapunov_value(k) - lyapunov_value(k - 1));
  }
}

TEST(Drift, LevelZeroSingleArrivals) {
  const BmapView v = corpus_view("finite.json");
  BmapView single = v;
  single.streams[0].batch = BatchSizeDistribution::single();
  const Matrix& a = single.streams[0].rate_matrix;
  const Vector want = single.d0.rowwise().sum() + std::log(1 + kE) * a.rowwise().sum();
  EXPECT_LT((drift_vector(single, 0) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Drift, NoArrivalsLimit) {
  BmapView v = scalar_view(1.0, BatchSizeDistribution::single(), 1.5);
  v.streams[0].rate_matrix.setZero();
  v.d0.setZero();
  double prev = 0.0;
  for (std::uint64_t k = 1; k < 2000; ++k) {
    const double y = drift_vector(v, k)(0);
    ASSERT_LT(y, prev);
    prev = y;
  }
  EXPECT_NEAR(drift_vector(v, 100'000'000)(0), -1.5, 1e-7);
}

TEST(Drift, GeometricAgainstDirectSum) {
  const BmapView v = scalar_view(1.0, BatchSizeDistribution::geometric(0.5), 1.0);
  EXPECT_NEAR(drift_vector(v, 5)(0), oracle::drift_direct(v, 5)(0), 1e-10);
}

TEST(Property, DriftFormulasAgree) {
  for (const char* f : {"poisson2.json", "finite.json", "geometric.json", "zeta25.json", "logheavy30.json"}) {
    const BmapView v = corpus_view(f);
    for (std::uint64_t k = 1; k <= 50; k += 7) {
      const Vector diff = drift_vector(v, k) - oracle::drift_direct(v, k);
      EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-9) << f << " k=" << k;
    }
  }
}

TEST(Drift, DivergentLogMoment) {
  const BmapView v = corpus_view("logheavy15.json");
  EXPECT_EQ(code_of([&] { drift_vector(v, 3); }), ErrorCode::DivergentDrift);
  EXPECT_EQ(code_of([&] { drift_vector(v, 0); }), ErrorCode::DivergentDrift);
  EXPECT_EQ(code_of([&] { find_K(v, 0.1); }), ErrorCode::DivergentDrift);
}

TEST(DeltaStar, ExtremalValue) {
  EXPECT_NEAR(delta_star(1.0), 0.156631, 1e-6);
  EXPECT_DOUBLE_EQ(delta_star(2.0), 2 * delta_star(1.0));
  EXPECT_NEAR(delta_star(1.0), oracle::delta_scan(1.0, 100'000), 1e-12);
  const double at2 = 2 * std::log1p(-1 / (2 + kE));
  EXPECT_NEAR(at2, -0.476, 1e-3);
  EXPECT_LT(at2, -2 * delta_star(1.0));
}

TEST(Property, ServiceTermBounds) {
  double prev = 1.0;
  for (std::uint64_t k = 1; k <= 100'000; ++k) {
    const double kk = static_cast<double>(k);
    const double s = kk * std::log1p(-1 / (kk + kE));
    ASSERT_GT(s, -1.0);
    ASSERT_LE(s, 1 - std::log(1 + kE) + 1e-15);
    ASSERT_LT(s, prev);
    prev = s;
  }
}

TEST(FindK, SingleArrivalsLargeDelta) {
  const BmapView v = corpus_view("finite.json");
  BmapView single = v;
  single.streams[0].batch = BatchSizeDistribution::single();
  const double delta = std::log1p(1 / (1 + kE)) * single.streams[0].rate_matrix.rowwise().sum().maxCoeff();
  EXPECT_EQ(find_K(single, delta), 0u);
}

TEST(FindK, TinyDeltaExhaustsScan) {
  const BmapView v = scalar_view(1.0, BatchSizeDistribution::geometric(0.5), 1.0);
  EXPECT_EQ(code_of([&] { find_K(v, 1e-9, 1000); }), ErrorCode::NoSuchK);
}

TEST(FindK, GeometricMatchesLinearScan) {
  const BmapView v = scalar_view(1.0, BatchSizeDistribution::geometric(0.5), 1.0);
  const double delta = delta_star(1.0);
  std::uint64_t j = 1;
  for (;; ++j) {
    const double c = static_cast<double>(j) + kE;
    if (oracle::log_shift_moment(v.streams[0].batch, c) - std::log(c) <= delta) break;
  }
  EXPECT_EQ(find_K(v, delta), j - 1);
}

TEST(Property, TailTermVanishesMonotonically) {
  for (const char* f : {"geometric.json", "zeta25.json", "logheavy30.json"}) {
    const BmapView v = corpus_view(f);
    Vector prev = tail_drift_term(v, 1);
    for (std::uint64_t k = 2; k <= 200; ++k) {
      const Vector t = tail_drift_term(v, k);
      ASSERT_TRUE((t.array() <= prev.array()).all()) << f << " k=" << k;
      prev = t;
    }
    EXPECT_LT(tail_drift_term(v, std::uint64_t{1} << 60).maxCoeff(), 0.05) << f;
  }
}

TEST(Certificate, StableCorpus) {
  for (const char* f : {"poisson2.json", "finite.json", "geometric.json", "zeta25.json", "logheavy30.json"}) {
    const BmapView v = corpus_view(f);
    const DriftCertificate c = foster_certificate(v);
    EXPECT_TRUE(c.violations.empty()) << f;
    EXPECT_EQ(c.verified_range, 10 * c.K + 100) << f;
    EXPECT_NEAR(c.delta, delta_star(v.service_rate()), 0.0);
    // k > K: y(k) <= -delta.
    EXPECT_LE(drift_vector(v, c.K + 1).maxCoeff(), -c.delta) << f;
  }
}

TEST(Certificate, PoissonConstants) {
  const DriftCertificate c = foster_certificate(corpus_view("poisson2.json"));
  EXPECT_NEAR(c.delta, 0.1566, 1e-4);
  EXPECT_NEAR(c.C, 2 * std::log(1 + kE), 1e-15);
  EXPECT_LT(c.K, 50u);
  EXPECT_EQ(c.drift_vectors.size(), 51u);
}

TEST(Certificate, UnstableRejected) {
  EXPECT_EQ(code_of([] { foster_certificate(corpus_view("logheavy15.json")); }), ErrorCode::NotStable);
}

TEST(Certificate, RangeOverride) {
  CertificateOptions o;
  o.range = 7;
  const auto c = foster_certificate(corpus_view("geometric.json"), o);
  EXPECT_EQ(c.verified_range, 7u);
  EXPECT_EQ(c.drift_vectors.size(), 8u);
}
