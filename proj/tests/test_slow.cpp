// Longer statistical checks, labelled "slow" in ctest.

#include <gtest/gtest.h>

#include <cmath>

#include "sarcs/experiment.hpp"
#include "sarcs/replica.hpp"

using namespace sarcs;

// Regression band from a pilot run (200 trials, seed 2024): mean P_c/N at
// N = 128 was 0.848 with standard error 0.003.
TEST(Slow, CriticalRatioAt128RegressionBand) {
  const auto e = estimate_alpha_c_at_n(128, 200, {0.5, 0.0}, {}, stream_seed(2024, 128));
  EXPECT_EQ(e.aborted, 0u);
  EXPECT_GT(e.alpha_c_n, 0.835);
  EXPECT_LT(e.alpha_c_n, 0.861);
}

// alpha_c(N) should approach its limit from above as N grows.
TEST(Slow, FiniteSizeRatioDecreasesWithN) {
  for (double r : {0.0, 0.5}) {
    const auto small = estimate_alpha_c_at_n(64, 200, {0.5, r}, {}, stream_seed(2024, 64));
    const auto large = estimate_alpha_c_at_n(256, 200, {0.5, r}, {}, stream_seed(2024, 256));
    EXPECT_GT(small.alpha_c_n, large.alpha_c_n)
        << "r=" << r << ": alpha_c(64)=" << small.alpha_c_n << " +- " << small.stderr
        << ", alpha_c(256)=" << large.alpha_c_n << " +- " << large.stderr;
  }
}

// Halving the Monte Carlo chain length barely moves the fixed point.
TEST(Slow, ReplicaFiniteSizeInsensitivity) {
  ReplicaConfig a;
  a.n = 1000;
  a.seed = 17;
  ReplicaConfig b = a;
  b.n = 2000;
  const auto fa = solve_alpha_c({0.5, 0.0}, a);
  const auto fb = solve_alpha_c({0.5, 0.0}, b);
  ASSERT_TRUE(fa.converged && fb.converged);
  const double se = std::hypot(fa.alpha_stderr, fb.alpha_stderr);
  EXPECT_LT(std::abs(fa.alpha - fb.alpha), 3.0 * se)
      << fa.alpha << " +- " << fa.alpha_stderr << " vs " << fb.alpha << " +- " << fb.alpha_stderr;
}
