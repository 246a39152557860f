#include <gtest/gtest.h>

#include <boost/math/special_functions/zeta.hpp>

#include <cmath>
#include <numbers>

#include "bmapinf/batch.hpp"
#include "bmapinf/error.hpp"
#include "oracles.hpp"

using bmapinf::BatchSizeDistribution;
using bmapinf::ErrorCode;

namespace {

constexpr double kE = std::numbers::e;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const bmapinf::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bmapinf::Error thrown";
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST(Finite, PmfTailPgfMean) {
  auto b = BatchSizeDistribution::finite({0.5, 0.3, 0.0, 0.0, 0.2});
  EXPECT_DOUBLE_EQ(b.pmf(1), 0.5);
  EXPECT_DOUBLE_EQ(b.pmf(5), 0.2);
  EXPECT_EQ(b.pmf(6), 0.0);
  EXPECT_EQ(b.pmf(0), 0.0);
  EXPECT_DOUBLE_EQ(b.tail(0), 1.0);
  EXPECT_DOUBLE_EQ(b.tail(2), 0.5);
  EXPECT_DOUBLE_EQ(b.tail(5), 0.2);
  EXPECT_EQ(b.tail(6), 0.0);
  EXPECT_NEAR(b.mean(), 0.5 + 0.6 + 1.0, 1e-15);
  EXPECT_NEAR(b.pgf(0.5), 0.5 * 0.5 + 0.3 * 0.25 + 0.2 * std::pow(0.5, 5), 1e-15);
  EXPECT_NEAR(b.log_moment(), 0.5 * std::log(1 + kE) + 0.3 * std::log(2 + kE) + 0.2 * std::log(5 + kE), 1e-15);
}

TEST(Finite, RejectsBadPmf) {
  EXPECT_EQ(code_of([] { BatchSizeDistribution::finite({0.5, 0.4}); }), ErrorCode::BadPmf);
  EXPECT_EQ(code_of([] { BatchSizeDistribution::finite({1.2, -0.2}); }), ErrorCode::BadPmf);
  EXPECT_EQ(code_of([] { BatchSizeDistribution::finite({}); }), ErrorCode::BadPmf);
}

TEST(Finite, SampleInvertsCdf) {
  auto b = BatchSizeDistribution::finite({0.5, 0.3, 0.0, 0.0, 0.2});
  EXPECT_EQ(b.sample(0.9), 1u);
  EXPECT_EQ(b.sample(0.4), 2u);
  EXPECT_EQ(b.sample(0.1), 5u);
  EXPECT_EQ(b.sample(0.1, 3), 3u);
}

TEST(Geometric, MatchesClosedForms) {
  auto b = BatchSizeDistribution::geometric(0.3);
  EXPECT_NEAR(b.pmf(4), std::pow(0.7, 3) * 0.3, 1e-16);
  EXPECT_NEAR(b.tail(4), std::pow(0.7, 3), 1e-15);
  EXPECT_NEAR(b.mean(), 1 / 0.3, 1e-13);
  EXPECT_NEAR(b.pgf(0.5), 0.3 * 0.5 / (1 - 0.7 * 0.5), 1e-15);
  EXPECT_NEAR(b.log_moment(), oracle::log_shift_moment(b, kE), 1e-13);
  EXPECT_EQ(code_of([] { BatchSizeDistribution::geometric(1.0); }), ErrorCode::BadPmf);
  EXPECT_EQ(code_of([] { BatchSizeDistribution::geometric(0.0); }), ErrorCode::BadPmf);
}

TEST(Zeta, NormalizerAndMoments) {
  for (double a : {1.5, 2.5, 3.5}) {
    auto b = BatchSizeDistribution::zeta(a);
    EXPECT_NEAR(b.normalizer() / boost::math::zeta(a), 1.0, 1e-12) << a;
    EXPECT_NEAR(b.log_moment(), oracle::log_shift_moment(b, kE), 1e-10) << a;
    EXPECT_NEAR(b.pmf(3), std::pow(3.0, -a) / boost::math::zeta(a), 1e-14);
  }
  auto b = BatchSizeDistribution::zeta(3.5);
  EXPECT_NEAR(b.mean(), boost::math::zeta(2.5) / boost::math::zeta(3.5), 1e-10);
  EXPECT_TRUE(std::isinf(BatchSizeDistribution::zeta(1.8).mean()));
}

TEST(LogHeavy, NormalizerAndMoments) {
  for (double beta : {2.5, 3.0, 4.0}) {
    auto b = BatchSizeDistribution::log_heavy(beta);
    EXPECT_NEAR(b.normalizer() / oracle::normalizer(b), 1.0, 1e-11) << beta;
    EXPECT_NEAR(b.log_moment(), oracle::log_shift_moment(b, kE), 1e-10) << beta;
  }
}

TEST(LogHeavy, DivergentAndImproper) {
  for (double beta : {1.5, 2.0}) {
    auto b = BatchSizeDistribution::log_heavy(beta);
    EXPECT_TRUE(b.proper());
    EXPECT_FALSE(b.finite_log_moment());
    EXPECT_TRUE(std::isinf(b.log_moment()));
    EXPECT_TRUE(std::isinf(b.log_ratio_moment(10.0)));
  }
  for (double beta : {0.5, 1.0}) {
    auto b = BatchSizeDistribution::log_heavy(beta);
    EXPECT_FALSE(b.proper());
    EXPECT_TRUE(std::isinf(b.log_moment()));
    EXPECT_EQ(code_of([&] { b.pmf(1); }), ErrorCode::BadPmf);
    EXPECT_EQ(code_of([&] { b.sample(0.5); }), ErrorCode::BadPmf);
  }
}

TEST(LogRatioMoment, MatchesOracle) {
  for (auto b : {BatchSizeDistribution::zeta(2.5), BatchSizeDistribution::log_heavy(3.0),
                 BatchSizeDistribution::geometric(0.5)}) {
    for (double c : {kE, 10 + kE, 1000 + kE, 1e6 + kE}) {
      const double want = oracle::log_shift_moment(b, c) - std::log(c);
      EXPECT_NEAR(b.log_ratio_moment(c), want, 1e-10) << b.describe() << " c=" << c;
    }
  }
}

TEST(Property, LogMomentDecreasesWithTailExponent) {
  double prev = INFINITY;
  for (double beta = 2.2; beta <= 6.0; beta += 0.4) {
    const double lm = BatchSizeDistribution::log_heavy(beta).log_moment();
    EXPECT_LT(lm, prev) << beta;
    prev = lm;
  }
  prev = INFINITY;
  for (double a = 1.2; a <= 5.0; a += 0.3) {
    const double lm = BatchSizeDistribution::zeta(a).log_moment();
    EXPECT_LT(lm, prev) << a;
    prev = lm;
  }
}

TEST(Property, PmfAndTailAgree) {
  for (auto b : {BatchSizeDistribution::zeta(2.5), BatchSizeDistribution::log_heavy(1.5),
                 BatchSizeDistribution::log_heavy(3.0), BatchSizeDistribution::geometric(0.2)}) {
    double acc = 0.0;
    for (std::uint64_t k = 1; k <= 2000; ++k) {
      acc += b.pmf(k);
      if (k % 250 == 0) EXPECT_NEAR(acc + b.tail(k + 1), 1.0, 1e-12) << b.describe() << " k=" << k;
    }
    // Beyond the tabulated range as well; the difference cancels to about eps * tail(k).
    for (std::uint64_t k : {70'000ull, 1'000'000ull, 1'000'000'000ull})
      EXPECT_NEAR(b.tail(k) - b.tail(k + 1), b.pmf(k), 1e-12 * b.pmf(k) + 16 * 2.3e-16 * b.tail(k))
          << b.describe() << " k=" << k;
  }
}

TEST(Property, SampleIsGeneralizedInverse) {
  for (auto b : {BatchSizeDistribution::zeta(2.5), BatchSizeDistribution::log_heavy(1.2),
                 BatchSizeDistribution::log_heavy(3.0), BatchSizeDistribution::geometric(0.5)}) {
    for (double u : {0.9, 0.5, 0.1, 1e-3, 1e-6, 1e-9}) {
      const std::uint64_t k = b.sample(u);
      ASSERT_GE(k, 1u);
      if (k >= bmapinf::kDefaultMaxBatch) continue;
      const double slack = 1e-9 * u;
      EXPECT_LE(b.tail(k + 1), u + slack) << b.describe() << " u=" << u;
      EXPECT_GT(b.tail(k), u - slack) << b.describe() << " u=" << u;
    }
  }
}
