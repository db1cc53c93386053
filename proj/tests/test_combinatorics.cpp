#include <gtest/gtest.h>

#include "test_support.hpp"

namespace hyperttsv {
namespace {

TEST(Stirling, SmallValuesMatchPartitionEnumeration) {
  EXPECT_EQ(stirling2(4, 2), 7);
  for (unsigned n = 0; n <= 9; ++n) {
    for (unsigned k = 0; k <= n; ++k) {
      EXPECT_EQ(stirling2<std::uint64_t>(n, k), testing::count_set_partitions(n, k)) << n << "," << k;
    }
  }
}

TEST(Stirling, EdgeRows) {
  for (unsigned n = 1; n <= 40; ++n) {
    EXPECT_EQ(stirling2(n, n), 1);
    EXPECT_EQ(stirling2(n, 0), 0);
  }
  EXPECT_EQ(stirling2(0, 0), 1);
}

TEST(Stirling, FixedWidthOverflowIsReported) {
  try {
    stirling2<std::uint64_t>(100, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::overflow);
  }
  EXPECT_GT(stirling2(100, 50), BigInt(0));
}

TEST(BlowupSize, Examples) {
  EXPECT_EQ(blowup_size(2, 4), 14);
  EXPECT_EQ(blowup_size(4, 4), 24);
  EXPECT_EQ(blowup_size(1, 3), 1);
}

TEST(BlowupSize, MatchesSurjectionCount) {
  for (unsigned N = 1; N <= 9; ++N) {
    for (unsigned k = 1; k <= N; ++k) {
      EXPECT_EQ(blowup_size<std::uint64_t>(k, N), testing::count_surjections(k, N)) << k << "," << N;
    }
  }
}

TEST(BlowupSize, SurjectionDecompositionIdentity) {
  for (unsigned N = 1; N <= 10; ++N) {
    BigInt total = 0;
    BigInt binom = 1;  // C(N, k)
    for (unsigned k = 1; k <= N; ++k) {
      binom = binom * (N - k + 1) / k;
      total += binom * blowup_size(k, N);
    }
    BigInt power = 1;
    for (unsigned i = 0; i < N; ++i) power *= N;
    EXPECT_EQ(total, power) << N;
  }
}

TEST(BlowupSize, RejectsBadSizes) {
  EXPECT_THROW(blowup_size(0, 3), Error);
  EXPECT_THROW(blowup_size(4, 3), Error);
}

TEST(FactorialReal, ExactAndRounded) {
  EXPECT_EQ(factorial_real(0), 1.0);
  EXPECT_EQ(factorial_real(5), 120.0);
  double prod = 1.0;
  for (unsigned d = 1; d <= 22; ++d) {
    prod *= d;
    EXPECT_EQ(factorial_real(d), prod) << d;
  }
  // correctly rounded from the exact integer (values from an extended-precision product)
  EXPECT_EQ(factorial_real(23), 2.585201673888498e+22);
  EXPECT_EQ(factorial_real(25), 1.5511210043330986e+25);
  EXPECT_EQ(factorial_real(50), 3.0414093201713376e+64);
  EXPECT_EQ(factorial_real(99), 9.332621544394415e+155);
  EXPECT_EQ(factorial_real(170), 7.257415615307999e+306);
  EXPECT_TRUE(std::isfinite(factorial_real(170)));
}

TEST(FactorialReal, RejectsBeyond170) {
  try {
    factorial_real(171);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::order_too_large);
  }
}

TEST(BlowupTable, ConsistentWithExact) {
  for (const unsigned N : {1u, 2u, 4u, 30u, 100u, 170u}) {
    const BlowupTable t(N);
    EXPECT_EQ(t.exact(N), factorial(N));
    for (unsigned k = 1; k <= N; ++k) {
      EXPECT_EQ(t.exact(k), blowup_size(k, N));
      if (N <= 100) {
        EXPECT_TRUE(std::isfinite(t.size(k)));
        EXPECT_NEAR(t.scaled_value(k, 3.0) * t.size(k), 3.0, 1e-12);
      }
      EXPECT_GT(t.leaf_scale(k), 0.0);
      EXPECT_TRUE(std::isfinite(t.leaf_scale(k)));
    }
  }
  EXPECT_THROW(BlowupTable(171), Error);
  // the top-order edge always has |beta| = N!, so its leaf scale is 1/N
  EXPECT_NEAR(BlowupTable(170).leaf_scale(170), 1.0 / 170.0, 1e-15);
  EXPECT_NEAR(BlowupTable(4).leaf_scale(2), 6.0 / 14.0, 1e-15);
}

}  // namespace
}  // namespace hyperttsv
