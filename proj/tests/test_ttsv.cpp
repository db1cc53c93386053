#include <gtest/gtest.h>

#include <thread>

#include "test_support.hpp"

namespace hyperttsv {
namespace {

using testing::fig1;
using testing::rel_error;

TtsvReport run_engine(const Hypergraph& h, std::span<const double> b, Algo algo, int workers = 1,
                      bool deterministic = false) {
  TtsvOptions o = testing::fft_everywhere();
  o.workers = workers;
  o.deterministic = deterministic;
  return TtsvEngine(h, algo, o).run(b);
}

std::uint64_t direct_count(const Hypergraph& h) {
  std::uint64_t c = 0;
  for (const Edge& e : h.edges()) c += e.size() >= 2 ? e.size() * (e.size() - 1) : 0;
  return c;
}

TEST(Engines, Fig1Degrees) {
  const Hypergraph h = fig1();
  const std::vector<double> ones(8, 1.0);
  for (const Algo a : testing::fast_engines()) {
    const auto s = run_engine(h, ones, a).s;
    for (std::size_t v = 0; v < 8; ++v) EXPECT_NEAR(s[v], testing::kFig1Degrees[v], 1e-12) << to_string(a);
  }
}

TEST(Engines, PairEdgeOrderTwo) {
  const Hypergraph h = testing::from_lists(2, {{1, 2}});
  for (const Algo a : {Algo::aay, Algo::direct, Algo::fft, Algo::memo, Algo::oracle}) {
    const auto s = run_engine(h, std::vector<double>{3, 5}, a).s;
    EXPECT_NEAR(s[0], 5.0, 1e-14) << to_string(a);
    EXPECT_NEAR(s[1], 3.0, 1e-14) << to_string(a);
  }
}

TEST(Engines, MatchOracleOnRandomSmall) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const Hypergraph h = testing::random_small(seed);
    const ExplicitBlowup t = build_explicit(h);
    for (std::uint64_t bs = 0; bs < 3; ++bs) {
      const auto b = testing::random_b(h.n(), seed * 31 + bs);
      const auto want = ttsv1_oracle(t, b);
      for (const Algo a : testing::fast_engines()) {
        EXPECT_LE(rel_error(run_engine(h, b, a).s, want), 1e-9) << to_string(a) << " seed " << seed;
      }
    }
  }
}

TEST(Engines, WeightedEdgesMatchOracle) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Hypergraph base = testing::random_small(seed);
    std::vector<Edge> edges = base.edges();
    for (Edge& e : edges) e.weight = 0.25 + 4.0 * std::uniform_real_distribution<double>()(rng);
    const Hypergraph h(base.n(), edges);
    const auto b = testing::random_b(h.n(), seed);
    const auto want = ttsv1_oracle(build_explicit(h), b);
    for (const Algo a : testing::fast_engines()) EXPECT_LE(rel_error(run_engine(h, b, a).s, want), 1e-9);
    const auto ones = run_engine(h, std::vector<double>(h.n(), 1.0), Algo::memo).s;
    EXPECT_LE(rel_error(ones, degrees(h)), 1e-12);
  }
}

TEST(Engines, CrossAgreementOnSynthetic) {
  const Hypergraph h = generate_synthetic({300, 400, 20, 3});
  const auto b = testing::random_b(h.n(), 8);
  const auto ref = run_engine(h, b, Algo::aay).s;
  for (const Algo a : {Algo::direct, Algo::fft, Algo::memo}) EXPECT_LE(rel_error(run_engine(h, b, a).s, ref), 1e-9);
  const std::vector<double> ones(h.n(), 1.0);
  for (const Algo a : testing::fast_engines()) EXPECT_LE(rel_error(run_engine(h, ones, a).s, degrees(h)), 1e-12);
}

TEST(Engines, HighOrderDegreeIdentity) {
  // rank 100 as in the largest real dataset; rank 170 at the supported limit
  for (const std::size_t rank : {100u, 170u}) {
    std::vector<Edge> edges;
    const std::size_t n = rank + 20;
    std::mt19937_64 rng(rank);
    for (const std::size_t k : {std::size_t{2}, std::size_t{7}, std::size_t{40}, rank}) {
      edges.push_back(make_edge(detail::random_subset(n, k, rng)));
    }
    const Hypergraph h(n, edges);
    const std::vector<double> ones(n, 1.0);
    for (const Algo a : {Algo::aay, Algo::direct, Algo::memo}) {
      EXPECT_LE(rel_error(run_engine(h, ones, a).s, degrees(h)), 1e-9) << to_string(a) << " rank " << rank;
    }
  }
}

TEST(Engines, FftMatchesDirectAcrossEdgeSizesAtOrderHundred) {
  // sizes just below the rank are the hardest case for the transform
  const std::size_t n = 130;
  for (std::size_t k = 2; k < 100; k += 7) {
    std::mt19937_64 rng(k);
    const Hypergraph h(n, {make_edge(detail::random_subset(n, 100, rng)), make_edge(detail::random_subset(n, k, rng))});
    for (const bool uniform : {true, false}) {
      const auto b = uniform ? std::vector<double>(n, 1.0) : testing::random_b(n, k);
      const auto want = run_engine(h, b, Algo::direct).s;
      EXPECT_LE(rel_error(run_engine(h, b, Algo::fft).s, want), 1e-9) << "k " << k;
    }
  }
}

TEST(Engines, ScaleLaw) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Hypergraph h = testing::random_small(seed);
    const auto b = testing::random_b(h.n(), seed);
    const double p = static_cast<double>(h.rank()) - 1.0;
    for (const double alpha : {2.0, 0.5}) {
      std::vector<double> ab(b);
      for (double& x : ab) x *= alpha;
      for (const Algo a : testing::fast_engines()) {
        auto base = run_engine(h, b, a).s;
        for (double& x : base) x *= std::pow(alpha, p);
        EXPECT_LE(rel_error(run_engine(h, ab, a).s, base), 1e-9);
      }
    }
  }
}

TEST(Counters, Fig1) {
  const Hypergraph h = fig1();
  const std::vector<double> ones(8, 1.0);
  EXPECT_EQ(run_engine(h, ones, Algo::direct).conv_count, 56u);
  EXPECT_EQ(run_engine(h, ones, Algo::fft).conv_count, 56u);
  EXPECT_EQ(run_engine(h, ones, Algo::aay).conv_count, 56u);
  const CcssForest f = build_ccss(h);
  EXPECT_EQ(run_engine(h, ones, Algo::memo).conv_count, f.node_count() - f.root_count());
}

TEST(Counters, SingleEdge) {
  for (std::size_t k = 2; k <= 10; ++k) {
    const Hypergraph h = testing::single_edge(k);
    const std::vector<double> ones(k, 1.0);
    EXPECT_EQ(run_engine(h, ones, Algo::memo).conv_count, k * (k + 1) / 2 - 3);
    EXPECT_EQ(run_engine(h, ones, Algo::direct).conv_count, k * k - k);
  }
  const Hypergraph h3 = testing::single_edge(3);
  EXPECT_EQ(run_engine(h3, std::vector<double>(3, 1.0), Algo::memo).conv_count, 3u);
}

TEST(Counters, RandomCorpus) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Hypergraph h = testing::random_small(seed, 10, 6, 10);
    const auto b = testing::random_b(h.n(), seed);
    const auto direct = run_engine(h, b, Algo::direct).conv_count;
    const auto memo = run_engine(h, b, Algo::memo).conv_count;
    const CcssForest f = build_ccss(h);
    EXPECT_EQ(direct, direct_count(h));
    EXPECT_EQ(memo, f.node_count() - f.root_count());
    if (h.rank() >= 3) {
      EXPECT_LT(memo, direct);
    }
  }
}

TEST(Counters, Sunflower) {
  const Hypergraph h = testing::sunflower(50, 10, 5);
  const auto b = testing::random_b(h.n(), 1);
  const auto direct = run_engine(h, b, Algo::direct);
  const auto memo = run_engine(h, b, Algo::memo);
  EXPECT_EQ(direct.conv_count, 4500u);
  EXPECT_LT(memo.conv_count, direct.conv_count);
  EXPECT_LE(rel_error(memo.s, direct.s), 1e-9);
  ::testing::Test::RecordProperty("memo_conv_count", std::to_string(memo.conv_count));
}

TEST(Parallel, DeterministicIsBitIdentical) {
  const Hypergraph h = generate_synthetic({200, 600, 15, 5});
  const auto b = testing::random_b(h.n(), 2);
  for (const Algo a : testing::fast_engines()) {
    const auto ref = run_engine(h, b, a, 1, true).s;
    for (const int w : {2, 3, 4, 8}) EXPECT_EQ(run_engine(h, b, a, w, true).s, ref) << to_string(a) << " w=" << w;
  }
}

TEST(Parallel, DefaultModeAgrees) {
  const Hypergraph h = generate_synthetic({200, 600, 15, 6});
  const auto b = testing::random_b(h.n(), 3);
  for (const Algo a : testing::fast_engines()) {
    const auto ref = run_engine(h, b, a, 1).s;
    for (const int w : {2, 8}) EXPECT_LE(rel_error(run_engine(h, b, a, w).s, ref), 1e-9);
  }
}

TEST(Parallel, AccumulateHasNoLostUpdates) {
  std::vector<double> s(4, 0.0);
  parallel_for(20000, 8, [&](std::size_t, int) { accumulate(s, 3, 1.0); });
  EXPECT_EQ(s[3], 20000.0);
}

TEST(Parallel, ExceptionsPropagate) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i, int) {
                              if (i == 57) throw Error(Errc::invalid_argument, "boom");
                            }),
               Error);
}

TEST(Parallel, CancelAndTimeout) {
  const Hypergraph h = generate_synthetic({200, 600, 15, 5});
  const auto b = testing::random_b(h.n(), 2);
  std::atomic<bool> cancel{true};
  StopCondition stop;
  stop.cancel = &cancel;
  TtsvOptions o;
  o.stop = &stop;
  try {
    TtsvEngine(h, Algo::memo, o).run(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::cancelled);
  }
  StopCondition late;
  late.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  o.stop = &late;
  try {
    TtsvEngine(h, Algo::direct, o).run(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::timeout);
  }
}

TEST(Errors, DimensionAndForestMismatch) {
  const Hypergraph h = fig1();
  try {
    ttsv1(h, std::vector<double>(7, 1.0), Algo::memo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
  const CcssForest other = build_ccss(testing::random_small(3));
  try {
    ttsv1_ccss_memo(other, h, std::vector<double>(8, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::forest_mismatch);
  }
  std::mt19937_64 rng(1);
  std::vector<Edge> edges{make_edge(detail::random_subset(200, 171, rng))};
  const Hypergraph big(200, edges);
  try {
    ttsv1(big, std::vector<double>(200, 1.0), Algo::aay);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::order_too_large);
  }
}

TEST(Engines, EmptyAndSingletonOnly) {
  const Hypergraph empty(3, {});
  for (const Algo a : testing::fast_engines()) {
    EXPECT_EQ(run_engine(empty, std::vector<double>(3, 2.0), a).s, (std::vector<double>{0, 0, 0}));
  }
  const Hypergraph singles = testing::from_lists(2, {{1}, {2}, {2}});
  for (const Algo a : testing::fast_engines()) {
    EXPECT_EQ(run_engine(singles, std::vector<double>{3, 5}, a).s, (std::vector<double>{1, 2}));
  }
}

TEST(Engines, SavedForestIsReusable) {
  const Hypergraph h = fig1();
  std::stringstream buf;
  write_ccss(buf, build_ccss(h));
  const TtsvEngine engine(h, read_ccss(buf), Algo::memo);
  const auto b = testing::random_b(8, 5);
  EXPECT_LE(rel_error(engine.run(b).s, ttsv1_oracle(build_explicit(h), b)), 1e-9);
}

}  // namespace
}  // namespace hyperttsv
