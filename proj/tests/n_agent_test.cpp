#include <gtest/gtest.h>

#include <vector>

#include "pas/n_agent.hpp"

using namespace pas;

namespace {

std::vector<Rational> R(std::initializer_list<long long> xs) {
  std::vector<Rational> out;
  for (long long x : xs) out.emplace_back(x);
  return out;
}

std::vector<Rational> random_values(Rng& rng, std::size_t m, std::uint64_t hi) {
  std::vector<Rational> v;
  for (std::size_t j = 0; j < m; ++j) v.emplace_back(static_cast<long long>(rng.below(hi)));
  return v;
}

// Distinct values, so every induced ordering is unambiguous.
std::vector<Rational> random_distinct(Rng& rng, std::size_t m) {
  std::vector<Item> perm(m);
  for (std::size_t j = 0; j < m; ++j) perm[j] = j;
  rng.shuffle(perm);
  std::vector<Rational> v(m);
  for (std::size_t r = 0; r < m; ++r) v[perm[r]] = Rational(static_cast<long long>(10 + r + rng.below(3) * m));
  return v;
}

}  // namespace

TEST(TentativeRoundRobin, ReversesAfterFirstRound) {
  std::vector<Ordering> ords(3, Ordering::identity(6));
  auto a = tentative_rr({0, 1, 2}, Bundle::range(6), ords, 3);
  EXPECT_EQ(a[0], (Bundle{0, 5}));
  EXPECT_EQ(a[1], (Bundle{1, 4}));
  EXPECT_EQ(a[2], (Bundle{2, 3}));
}

TEST(LargePhase, Examples) {
  auto v = R({6, 5, 4, 3, 2, 1});
  std::vector<std::vector<Rational>> rep(3, v);
  auto preds = PredictionProfile<Rational>::from_values(rep);
  Allocation x;
  x.bundles.assign(3, Bundle{});
  auto ph = allocate_large(rep, preds, x);
  EXPECT_EQ(ph.mu[0], Rational(7));
  ASSERT_EQ(ph.picks.size(), 3u);
  EXPECT_EQ(ph.picks[0], (std::pair<Agent, Item>{0, 0}));
  EXPECT_EQ(ph.picks[1], (std::pair<Agent, Item>{1, 1}));
  EXPECT_EQ(ph.picks[2], (std::pair<Agent, Item>{2, 2}));
  // Everyone left; the last agent to leave takes the rest.
  EXPECT_EQ(*ph.leftover_agent, 2u);
  EXPECT_EQ(x[2], (Bundle{2, 3, 4, 5}));
  EXPECT_TRUE(x.is_complete(6));

  auto w = R({4, 1, 1, 1, 1});
  std::vector<std::vector<Rational>> rep2(2, w);
  Allocation y;
  y.bundles.assign(2, Bundle{});
  auto ph2 = allocate_large(rep2, PredictionProfile<Rational>::from_values(rep2), y);
  ASSERT_EQ(ph2.picks.size(), 1u);
  EXPECT_EQ(ph2.picks[0], (std::pair<Agent, Item>{0, 0}));
  EXPECT_EQ(ph2.live, (std::vector<Agent>{1}));
}

TEST(LargePhase, NeedsValuesOrMask) {
  std::vector<std::vector<Rational>> rep(2, R({1, 1}));
  auto preds = PredictionProfile<Rational>::from_orderings({Ordering::identity(2), Ordering::identity(2)});
  EXPECT_THROW(allocate_n_agent(rep, preds), InputError);
  preds.large_mask = std::vector<std::vector<bool>>(2, std::vector<bool>(2, false));
  EXPECT_NO_THROW(allocate_n_agent(rep, preds));
}

TEST(NAgent, GoldenAllOnes) {
  std::vector<std::vector<Rational>> rep(3, std::vector<Rational>(9, Rational(1)));
  auto out = allocate_n_agent(rep, PredictionProfile<Rational>::from_values(rep));
  EXPECT_EQ(out.allocation[0], (Bundle{0, 5, 8}));
  EXPECT_EQ(out.allocation[1], (Bundle{1, 4, 7}));
  EXPECT_EQ(out.allocation[2], (Bundle{2, 3, 6}));
}

TEST(NAgent, DepthAndTraceForFourAgents) {
  // With m = n every top item is large by value, so switch the phase off by mask.
  std::vector<std::vector<Rational>> rep(4, std::vector<Rational>(4, Rational(1)));
  auto preds = PredictionProfile<Rational>::from_orderings(std::vector<Ordering>(4, Ordering::identity(4)));
  preds.large_mask = std::vector<std::vector<bool>>(4, std::vector<bool>(4, false));
  auto out = allocate_n_agent(rep, preds);
  EXPECT_EQ(out.trace.depth, 2);
  EXPECT_TRUE(out.allocation.is_complete(4));
  for (Agent i = 0; i < 4; ++i) EXPECT_EQ(out.allocation[i].size(), 1u);
}

// With accurate predictions and nothing large, the steals undo the plants.
TEST(NAgent, AccurateFixedPointWithoutLargeItems) {
  Rng rng(41);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.below(4);
    const std::size_t m = 2 * n + rng.below(8);
    std::vector<std::vector<Rational>> rep;
    for (Agent i = 0; i < n; ++i) rep.push_back(random_distinct(rng, m));
    auto preds = PredictionProfile<Rational>::from_values(rep);
    auto out = allocate_n_agent(rep, preds);
    if (!out.trace.large.picks.empty()) continue;
    ++checked;
    for (Agent i = 0; i < n; ++i) EXPECT_EQ(out.allocation[i], out.trace.tentative[i]) << "n=" << n << " m=" << m;
  }
  EXPECT_GT(checked, 50);
}

TEST(NAgent, PropertiesOnRandomInstances) {
  Rng rng(42);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t m = rng.below(3 * n + 6);
    if (m == 0) continue;
    std::vector<std::vector<Rational>> rep, pv;
    for (Agent i = 0; i < n; ++i) {
      rep.push_back(random_values(rng, m, 12));
      pv.push_back(random_values(rng, m, 12));
    }
    auto preds = PredictionProfile<Rational>::from_values(pv);
    NAgentOptions opt;
    opt.odd_plant = trial % 2 ? OddPlantTarget::kSecondAgent : OddPlantTarget::kLastOfOpposite;
    auto out = allocate_n_agent(rep, preds, opt);
    ASSERT_TRUE(out.allocation.is_complete(m));
    const std::size_t k = relaxed_k(n);
    for (Agent i : out.trace.large.live) {
      EXPECT_LE(out.trace.gray[i], k - 1);
      std::span<const Rational> vi(rep[i]);
      Rational best(0);
      for (Item it : out.allocation[i]) best = std::max(best, vi[it]);
      EXPECT_GE(best, kth_value(vi, k));
    }
  }
}

TEST(NAgent, TwoAgentsGetTopTwoItem) {
  Rng rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng.below(9);
    std::vector<std::vector<Rational>> rep{random_values(rng, m, 9), random_values(rng, m, 9)};
    auto preds = PredictionProfile<Rational>::from_values({random_values(rng, m, 9), random_values(rng, m, 9)});
    auto out = allocate_n_agent(rep, preds);
    for (Agent i = 0; i < 2; ++i) {
      std::span<const Rational> vi(rep[i]);
      Rational best(0);
      for (Item it : out.allocation[i]) best = std::max(best, vi[it]);
      EXPECT_GE(best, kth_value(vi, 2));
    }
  }
}

TEST(NAgent, ReportCarriesRelaxedRatios) {
  Instance<Rational> inst(std::vector<std::vector<Rational>>(3, std::vector<Rational>(9, Rational(1))));
  auto rep = run_n_agent_mechanism(inst, accurate_predictions(inst));
  EXPECT_EQ(rep.report.mechanism, "N-Agent-MMS");
  EXPECT_EQ(rep.k_relaxed, 5u);
  EXPECT_FALSE(rep.relaxed_bound_vacuous);
  EXPECT_EQ(rep.mu_relaxed[0], Rational(1));
  for (Agent i = 0; i < 3; ++i) EXPECT_EQ(rep.report.values[i], Rational(3));
  Instance<Rational> small(std::vector<std::vector<Rational>>(3, std::vector<Rational>(4, Rational(1))));
  EXPECT_TRUE(run_n_agent_mechanism(small, accurate_predictions(small)).relaxed_bound_vacuous);
  EXPECT_THROW(allocate_n_agent(std::vector<std::vector<Rational>>{R({1})}, accurate_predictions(Instance<Rational>({R({1})}))),
               PreconditionError);
}
