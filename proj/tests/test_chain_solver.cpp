#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sarcs/chain_solver.hpp"
#include "sarcs/random.hpp"

using namespace sarcs;

namespace {

std::vector<double> random_field(RandomStream& rng, std::size_t n, double scale) {
  std::vector<double> h(n);
  for (auto& v : h) v = scale * rng.normal();
  return h;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(SolveChain, ConstantField) {
  const auto x = solve_chain({{1.5, 1.5, 1.5, 1.5}, 3.0});
  for (double v : x) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(SolveChain, SingleSite) {
  EXPECT_EQ(solve_chain({{5.0}, 2.0}), (std::vector<double>{2.5}));
}

TEST(SolveChain, TwoSitesSplit) {
  const auto x = solve_chain({{3.0, -3.0}, 1.0});
  EXPECT_NEAR(x[0], 2.0, 1e-12);
  EXPECT_NEAR(x[1], -2.0, 1e-12);
  // Brute force: grid then coordinate refinement of the 2-d objective.
  auto f = [](double a, double b) { return 0.5 * (a * a + b * b) - 3 * a + 3 * b + std::abs(b - a); };
  double ba = 0, bb = 0, best = f(0, 0);
  for (double a = -5; a <= 5; a += 0.01)
    for (double b = -5; b <= 5; b += 0.01)
      if (f(a, b) < best) best = f(a, b), ba = a, bb = b;
  for (double step = 0.01; step > 1e-9; step *= 0.5)
    for (int k = 0; k < 50; ++k)
      for (auto [da, db] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}})
        if (f(ba + da, bb + db) < f(ba, bb)) ba += da, bb += db;
  EXPECT_NEAR(x[0], ba, 1e-6);
  EXPECT_NEAR(x[1], bb, 1e-6);
}

TEST(SolveChain, TwoSitesFuse) {
  // |h1 - h2| / 2 <= 1: the pair fuses at the mean.
  const auto x = solve_chain({{1.0, -0.5}, 1.0});
  EXPECT_EQ(x[0], x[1]);
  EXPECT_NEAR(x[0], 0.25, 1e-15);
}

TEST(SolveChain, RejectsBadInput) {
  EXPECT_THROW(solve_chain({{1.0}, 0.0}), DomainError);
  EXPECT_THROW(solve_chain({{1.0}, -1.0}), DomainError);
  EXPECT_THROW(solve_chain({{}, 1.0}), ShapeError);
  EXPECT_THROW(solve_chain({{std::nan("")}, 1.0}), DomainError);
}

TEST(SolveChain, MatchesDualOracleSmall) {
  RandomStream rng(2024, 0);
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10);
    const double q = 0.2 + 3.0 * rng.uniform();
    const auto h = random_field(rng, n, 2.0);
    const auto x = solve_chain({h, q});
    const auto ref = oracle::chain_dual_pg(h, q);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(x[i], ref[i], 1e-6) << inst;
    ASSERT_LT(oracle::chain_certificate(h, q, x), 1e-8) << inst;
  }
}

TEST(SolveChain, CertificateOnLongChains) {
  RandomStream rng(77, 0);
  ChainWorkspace ws;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 1000;
    const double q = 0.05 + rng.uniform();
    const auto h = random_field(rng, n, 3.0);
    std::vector<double> x(n);
    solve_chain(h, q, x, ws);
    EXPECT_LT(oracle::chain_certificate(h, q, x), 1e-8);
  }
}

TEST(SolveChain, InPlaceMatchesOutOfPlace) {
  RandomStream rng(3, 0);
  auto h = random_field(rng, 300, 2.0);
  const auto expect = solve_chain({h, 0.7});
  ChainWorkspace ws;
  solve_chain(h, 0.7, h, ws);
  EXPECT_EQ(h, expect);
}

TEST(SolveChain, Nonexpansive) {
  RandomStream rng(8, 0);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 60);
    const double q = 0.1 + 2.0 * rng.uniform();
    const auto h = random_field(rng, n, 2.0);
    auto h2 = h;
    for (auto& v : h2) v += 0.5 * rng.normal();
    const auto a = solve_chain({h, q}), b = solve_chain({h2, q});
    EXPECT_LE(l2(a, b), l2(h, h2) / q + 1e-12);
  }
}

TEST(SolveChain, LargeCurvatureBound) {
  RandomStream rng(9, 0);
  for (double q : {1.0, 10.0, 1000.0}) {
    const auto h = random_field(rng, 100, 5.0 * q);
    const auto x = solve_chain({h, q});
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_LE(std::abs(x[i] - h[i] / q), 2.0 / q + 1e-12);
  }
}

TEST(SolveChain, MonotoneInField) {
  RandomStream rng(10, 0);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    const auto h = random_field(rng, n, 1.5);
    auto h2 = h;
    h2[static_cast<std::size_t>(rng.uniform() * n)] += 2.0 * rng.uniform();
    const auto a = solve_chain({h, 0.8}), b = solve_chain({h2, 0.8});
    for (std::size_t j = 0; j < n; ++j) EXPECT_GE(b[j], a[j] - 1e-12);
  }
}

TEST(CountBlocks, Examples) {
  EXPECT_EQ(count_blocks(std::vector<double>{1, 1, 1}, 0.0), 1u);
  EXPECT_EQ(count_blocks(std::vector<double>{1, 2, 3}, 0.0), 3u);
  EXPECT_EQ(count_blocks(std::vector<double>{1, 1 + 1e-12, 5}, 1e-9), 2u);
  EXPECT_EQ(count_blocks(std::vector<double>{}, 0.0), 0u);
}

TEST(AtMetric, Examples) {
  // All distinct: h far apart so nothing fuses.
  ChainProblem p{{0.0, 10.0, 20.0, 30.0}, 2.0};
  auto x = solve_chain(p);
  EXPECT_DOUBLE_EQ(at_metric(p, x), 0.25);
  // Constant field: one block.
  ChainProblem c{std::vector<double>(10, 0.3), 1.0};
  x = solve_chain(c);
  EXPECT_DOUBLE_EQ(at_metric(c, x), 0.1);
  ChainProblem one{{4.0}, 3.0};
  EXPECT_DOUBLE_EQ(at_metric(one, solve_chain(one)), 1.0 / 9.0);
}

TEST(AtMetric, MatchesFiniteDifferenceJacobian) {
  RandomStream rng(11, 0);
  int checked = 0;
  for (int inst = 0; inst < 200 && checked < 40; ++inst) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    const double q = 0.3 + rng.uniform();
    const auto h = random_field(rng, n, 2.0);
    const ChainProblem p{h, q};
    const auto x = solve_chain(p);
    const auto u = oracle::chain_multipliers(h, q, x);
    bool degenerate = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = std::abs(x[i + 1] - x[i]);
      if ((d == 0.0 && std::abs(u[i]) > 1.0 - 1e-3) || (d != 0.0 && d < 1e-3)) degenerate = true;
    }
    if (degenerate) continue;
    ++checked;
    const auto jac = oracle::fd_jacobian([q](const std::vector<double>& hh) { return solve_chain({hh, q}); }, h, 1e-6);
    const double fro = jac.squaredNorm() / static_cast<double>(n);
    EXPECT_NEAR(at_metric(p, x) / fro, 1.0, 1e-4);
  }
  EXPECT_GE(checked, 20);
}

// ---------------------------------------------------------------------------

TEST(LimitChain, StrictlyIncreasingSignal) {
  const std::size_t n = 12;
  Signal x0;
  std::vector<double> z(n);
  RandomStream rng(12, 0);
  for (std::size_t i = 0; i < n; ++i) {
    x0.values.push_back(static_cast<double>(i));
    z[i] = rng.normal();
  }
  const double chi = 2.3;
  const auto xh = solve_limit_chain({x0, z, chi});
  const auto smooth = oracle::limit_chain_smoothed(x0.values, [&] {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::sqrt(chi) * z[i];
    return g;
  }(), 1e-6);
  for (std::size_t i = 0; i < n; ++i) {
    double expect = std::sqrt(chi) * z[i];
    if (i == 0) expect += 1.0;
    if (i == n - 1) expect -= 1.0;
    EXPECT_NEAR(xh[i], expect, 1e-12);
    EXPECT_NEAR(smooth[i], expect, 1e-9);
  }
}

TEST(LimitChain, ConstantSignalZeroField) {
  const Signal x0{std::vector<double>(20, 0.4)};
  const auto xh = solve_limit_chain({x0, std::vector<double>(20, 0.0), 3.0});
  for (double v : xh) EXPECT_EQ(v, 0.0);
}

TEST(LimitChain, ConstantSignalReducesToChain) {
  RandomStream rng(13, 0);
  const Signal x0{std::vector<double>(40, -1.2)};
  const auto z = random_field(rng, 40, 1.0);
  const double chi = 4.0;
  std::vector<double> h(40);
  for (std::size_t i = 0; i < 40; ++i) h[i] = 2.0 * z[i];
  EXPECT_EQ(solve_limit_chain({x0, z, chi}), solve_chain({h, 1.0}));
}

TEST(LimitChain, MatchesSmoothedOracle) {
  RandomStream rng(14, 0);
  for (int inst = 0; inst < 60; ++inst) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 80);
    const Signal x0 = generate_signal({0.5, 0.3}, n, stream_seed(14, inst));
    const auto z = random_field(rng, n, 1.0);
    const double chi = 0.5 + 10.0 * rng.uniform();
    const auto xh = solve_limit_chain({x0, z, chi});
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::sqrt(chi) * z[i];
    const auto ref = oracle::limit_chain_smoothed(x0.values, g, 1e-6);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(xh[i], ref[i], 1e-4) << inst << ' ' << i;
  }
}

TEST(LimitChain, IncrementClassificationAgrees) {
  const Signal x0 = generate_signal({0.5, 0.5}, 500, 15);
  std::vector<double> inc(500);
  inc[0] = x0[0];
  for (std::size_t i = 1; i < 500; ++i) inc[i] = x0[i] - x0[i - 1];
  EXPECT_EQ(classify_edges(x0.values), classify_edges_from_increments(inc));
}

TEST(LimitChain, ShapeMismatch) {
  EXPECT_THROW(solve_limit_chain({Signal{{1.0, 2.0}}, {0.0}, 1.0}), ShapeError);
  EXPECT_THROW(solve_limit_chain({Signal{{1.0}}, {0.0}, 0.0}), DomainError);
}

TEST(LimitChain, BlockCountFusesOnlyPauses) {
  // Jump edge with equal xhat values still separates blocks.
  const std::vector<EdgeKind> edges{EdgeKind::kPause, EdgeKind::kUp, EdgeKind::kPause};
  const std::vector<double> xh{0.5, 0.5, 0.5, 0.7};
  EXPECT_EQ(count_limit_blocks(edges, xh), 3u);
}
