#include <gtest/gtest.h>

#include <vector>

#include "pas/two_agent.hpp"

using namespace pas;

namespace {

std::vector<Rational> R(std::initializer_list<long long> xs) {
  std::vector<Rational> out;
  for (long long x : xs) out.emplace_back(x);
  return out;
}

std::vector<Rational> Q(std::initializer_list<std::pair<long long, long long>> xs) {
  std::vector<Rational> out;
  for (auto [n, d] : xs) out.emplace_back(n, d);
  return out;
}

Ordering random_ordering(Rng& rng, std::size_t m) {
  std::vector<Item> v(m);
  for (std::size_t j = 0; j < m; ++j) v[j] = j;
  rng.shuffle(v);
  return Ordering(v);
}

std::vector<Rational> random_values(Rng& rng, std::size_t m, std::uint64_t hi) {
  std::vector<Rational> v;
  for (std::size_t j = 0; j < m; ++j) v.emplace_back(static_cast<long long>(rng.below(hi)));
  return v;
}

}  // namespace

TEST(BalancedRoundRobin, Examples) {
  auto id4 = Ordering::identity(4);
  EXPECT_EQ(balanced_round_robin(Bundle::range(4), id4, id4), (TwoWaySplit{{0, 2}, {1, 3}}));
  auto id5 = Ordering::identity(5);
  EXPECT_EQ(balanced_round_robin(Bundle::range(5), id5, id5.reversed()), (TwoWaySplit{{0, 1, 2}, {3, 4}}));
  auto id1 = Ordering::identity(1);
  EXPECT_EQ(balanced_round_robin(Bundle::range(1), id1, id1), (TwoWaySplit{{0}, {}}));
}

TEST(OneTwoRoundRobin, Examples) {
  auto id6 = Ordering::identity(6);
  EXPECT_EQ(one_two_round_robin(Bundle::range(6), id6, id6), (TwoWaySplit{{0, 3}, {1, 2, 4, 5}}));
  auto id2 = Ordering::identity(2);
  EXPECT_EQ(one_two_round_robin(Bundle::range(2), id2, id2), (TwoWaySplit{{0}, {1}}));
  auto id3 = Ordering::identity(3);
  auto s = one_two_round_robin(Bundle::range(3), id3, id3);
  EXPECT_EQ(s.first.size(), 1u);
  EXPECT_EQ(s.second.size(), 2u);
}

// Size and pick-rank contracts of both round robins.
TEST(RoundRobin, SizeAndPickRankContracts) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = rng.below(14);
    Ordering p1 = random_ordering(rng, m), p2 = random_ordering(rng, m);
    auto b = balanced_round_robin(Bundle::range(m), p1, p2);
    EXPECT_EQ(b.first.size(), (m + 1) / 2);
    EXPECT_EQ(b.second.size(), m / 2);
    auto o = one_two_round_robin(Bundle::range(m), p1, p2);
    EXPECT_EQ(o.first.size(), (m + 2) / 3);
    EXPECT_EQ(o.second.size(), 2 * m / 3);
    // The k-th pick of agent 1 in balanced RR lies in their top 2k - 1.
    std::vector<std::size_t> pos;
    for (Item it : b.first) pos.push_back(p1.position(it));
    std::sort(pos.begin(), pos.end());
    for (std::size_t k = 0; k < pos.size(); ++k) EXPECT_LE(pos[k] + 1, 2 * (k + 1));
  }
}

TEST(WaterFilling, Examples) {
  auto v = Q({{4, 10}, {3, 10}, {2, 10}, {1, 10}});
  std::span<const Rational> s(v);
  EXPECT_EQ(water_filling(Bundle::range(4), s, s), (TwoWaySplit{{0, 1}, {2, 3}}));
  auto a = R({1, 0, 0}), b = R({0, 0, 1});
  EXPECT_EQ(water_filling(Bundle::range(3), std::span<const Rational>(a), std::span<const Rational>(b)),
            (TwoWaySplit{{0}, {1, 2}}));
  EXPECT_EQ(water_filling(Bundle::range(3), std::span<const Rational>(b), std::span<const Rational>(a)),
            (TwoWaySplit{{1, 2}, {0}}));
  auto z = R({0, 0});
  EXPECT_THROW(water_filling(Bundle::range(2), std::span<const Rational>(z), std::span<const Rational>(z)),
               InputError);
}

// A heavy item at the stopping index hands everything to agent 1, so the
// scan alone does not give agent 2 half of its MMS.
TEST(WaterFilling, HeavyLastItemEmptiesSecondSide) {
  auto v = R({1, 1, 1, 1, 1, 100});
  std::span<const Rational> s(v);
  const auto split = water_filling(Bundle::range(6), s, s);
  EXPECT_EQ(split.first, Bundle::range(6));
  EXPECT_TRUE(split.second.empty());
}

TEST(CutAndBalance, Examples) {
  auto ones = R({1, 1, 1, 1});
  std::span<const Rational> s(ones);
  auto split = cut_and_balance(s, s, Rational(1, 4));
  EXPECT_EQ(split.first.size(), 2u);
  EXPECT_EQ(split.second.size(), 2u);
  auto v = R({4, 3, 2, 1});
  std::span<const Rational> sv(v);
  auto s2 = cut_and_balance(sv, sv, Rational(1, 2));
  EXPECT_EQ(bundle_value(sv, s2.first), Rational(5));
  EXPECT_EQ(bundle_value(sv, s2.second), Rational(5));
  auto two = R({1, 1});
  auto s3 = cut_and_balance(std::span<const Rational>(two), std::span<const Rational>(two), Rational(1, 4));
  EXPECT_EQ(s3.first.size(), 1u);
  EXPECT_EQ(s3.second.size(), 1u);
}

TEST(CutAndBalance, BalancedSizes) {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(16);
    auto v1 = random_values(rng, m, 50), v2 = random_values(rng, m, 50);
    auto s = cut_and_balance(std::span<const Rational>(v1), std::span<const Rational>(v2), Rational(1, 4));
    EXPECT_TRUE((Allocation{{s.first, s.second}}).is_complete(m));
    for (const Bundle* b : {&s.first, &s.second}) {
      EXPECT_GE(b->size(), m / 2);
      EXPECT_LE(b->size(), (m + 1) / 2);
    }
  }
}

TEST(PlantAndSteal, WorkedExample) {
  auto v = R({10, 9, 1, 1});
  Instance<Rational> inst({v, v});
  auto rev = Ordering({3, 2, 1, 0});
  auto preds = PredictionProfile<Rational>::from_orderings({rev, rev});
  auto rep = run_named_mechanism("B-RR-PAS", inst, preds);
  const auto& tr = *rep.trace;
  EXPECT_EQ(tr.initial, (TwoWaySplit{{1, 3}, {0, 2}}));
  EXPECT_EQ(*tr.planted1, 3u);
  EXPECT_EQ(*tr.planted2, 2u);
  EXPECT_EQ(tr.planted, (TwoWaySplit{{1, 2}, {0, 3}}));
  EXPECT_EQ(*tr.stolen1, 0u);
  EXPECT_EQ(*tr.stolen2, 1u);
  EXPECT_EQ(tr.final, (TwoWaySplit{{0, 2}, {1, 3}}));
  EXPECT_EQ(rep.values, (std::vector<Rational>{11, 10}));
  EXPECT_EQ(rep.mu, (std::vector<Rational>{10, 10}));
}

TEST(PlantAndSteal, DegeneratePools) {
  auto p = Ordering::identity(0);
  std::vector<Rational> none;
  auto t0 = plant_and_steal(TwoWaySplit{}, p, p, std::span<const Rational>(none), std::span<const Rational>(none));
  EXPECT_TRUE(t0.final.first.empty() && t0.final.second.empty());
  auto p1 = Ordering::identity(1);
  auto one = R({5});
  auto t1 = plant_and_steal(TwoWaySplit{{}, {0}}, p1, p1, std::span<const Rational>(one),
                            std::span<const Rational>(one));
  EXPECT_EQ(t1.final, (TwoWaySplit{{}, {0}}));
  // Empty side with m >= 2: the owner's lowest-predicted item moves over first.
  auto p3 = Ordering::identity(3);
  auto three = R({3, 2, 1});
  auto t3 = plant_and_steal(TwoWaySplit{{0, 1, 2}, {}}, p3, p3, std::span<const Rational>(three),
                            std::span<const Rational>(three));
  ASSERT_TRUE(t3.padding.has_value());
  EXPECT_EQ(t3.padding->first, 2u);
  EXPECT_TRUE((Allocation{{t3.final.first, t3.final.second}}).is_complete(3));
}

TEST(PlantAndSteal, TraceInvariantsAndTopTwo) {
  Rng rng(33);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 2 + rng.below(10);
    auto v1 = random_values(rng, m, 20), v2 = random_values(rng, m, 20);
    Instance<Rational> inst({v1, v2});
    auto preds = PredictionProfile<Rational>::from_values({random_values(rng, m, 20), random_values(rng, m, 20)});
    for (auto mech : {Mechanism::kBrrPas, Mechanism::kOneTwoRrPas, Mechanism::kWfPas, Mechanism::kCbPas,
                      Mechanism::kPartitionPlantSteal}) {
      if (mech == Mechanism::kWfPas) {
        bool zero = true;
        for (auto& row : *preds.values) {
          Rational t(0);
          for (auto& x : row) t += x;
          zero = zero && t > 0;
        }
        if (!zero) continue;
      }
      auto out = allocate_two_agent(mech, inst.valuations(), preds);
      const auto& tr = out.trace;
      ASSERT_TRUE(out.allocation.is_complete(m));
      TwoWaySplit a = tr.initial;
      if (tr.padding) {
        auto [it, to] = *tr.padding;
        (to == 0 ? a.second : a.first).erase(it);
        (to == 0 ? a.first : a.second).insert(it);
      }
      Bundle t1 = a.first, t2 = a.second;
      t1.erase(*tr.planted1);
      t1.insert(*tr.planted2);
      t2.erase(*tr.planted2);
      t2.insert(*tr.planted1);
      EXPECT_EQ(tr.planted, (TwoWaySplit{t1, t2}));
      Bundle x1 = t1, x2 = t2;
      x1.insert(*tr.stolen1);
      x2.erase(*tr.stolen1);
      x2.insert(*tr.stolen2);
      x1.erase(*tr.stolen2);
      EXPECT_EQ(tr.final, (TwoWaySplit{x1, x2}));
      for (Agent i = 0; i < 2; ++i) {
        std::span<const Rational> vi = inst.values(i);
        // Holds one of the two best items by value.
        Rational best(0);
        for (Item it : out.allocation[i]) best = std::max(best, vi[it]);
        EXPECT_GE(best, kth_value(vi, 2)) << mechanism_name(mech);
      }
    }
  }
}

TEST(PlantAndSteal, AccurateBrrMatchesRoundRobin) {
  Rng rng(34);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng.below(10);
    // Distinct values so that reports and predictions induce the same order.
    std::vector<Rational> v1, v2;
    Ordering o1 = random_ordering(rng, m), o2 = random_ordering(rng, m);
    v1.resize(m);
    v2.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
      v1[o1[r]] = Rational(static_cast<long long>(m - r));
      v2[o2[r]] = Rational(static_cast<long long>(m - r));
    }
    Instance<Rational> inst({v1, v2});
    auto out = allocate_two_agent(Mechanism::kBrrPas, inst.valuations(), accurate_predictions(inst));
    auto rr = balanced_round_robin(Bundle::range(m), o1, o2);
    EXPECT_EQ(out.allocation[0], rr.first);
    EXPECT_EQ(out.allocation[1], rr.second);
  }
}

TEST(NamedMechanisms, ConsistencyExamples) {
  auto v = R({4, 1, 1, 1, 1});
  Instance<Rational> inst({v, v});
  auto preds = accurate_predictions(inst);
  auto rep = run_named_mechanism("B-RR-PAS", inst, preds);
  for (Agent i = 0; i < 2; ++i) EXPECT_GE(rep.values[i] * 2, rep.mu[i]);
  auto rep12 = run_named_mechanism("1-2-RR-PAS", inst, preds);
  for (Agent i = 0; i < 2; ++i) EXPECT_GE(rep12.values[i] * 3, rep12.mu[i] * 2);
}

TEST(NamedMechanisms, ErrorsAndNames) {
  auto v = R({1, 1});
  Instance<Rational> three({v, v, v});
  auto preds3 = accurate_predictions(three);
  EXPECT_THROW(run_named_mechanism("B-RR-PAS", three, preds3), UnsupportedError);
  Instance<Rational> two({v, v});
  EXPECT_THROW(run_named_mechanism("Nope", two, accurate_predictions(two)), InputError);
  for (auto name : kMechanismNames) EXPECT_EQ(mechanism_name(*parse_mechanism(name)), name);
  auto ord_only = PredictionProfile<Rational>::from_orderings({Ordering::identity(2), Ordering::identity(2)});
  EXPECT_THROW(run_named_mechanism("Partition", two, ord_only), InputError);
}

TEST(NamedMechanisms, PartitionBaseline) {
  auto v1 = R({5, 4, 3, 2, 1});
  auto v2 = R({0, 0, 0, 1, 1});
  auto split = partition_cut_and_choose(Bundle::range(5), std::span<const Rational>(v1), std::span<const Rational>(v2));
  // Greedy: 5->1, 4->2, 3->2, 2->1, 1->1 gives {0,3,4} (8) and {1,2} (7).
  EXPECT_EQ(split.second, (Bundle{0, 3, 4}));
  EXPECT_EQ(split.first, (Bundle{1, 2}));
}

// Each item lands in agent 1's half with frequency close to 1/2.
TEST(NamedMechanisms, RandomSplitIsBalanced) {
  const std::size_t m = 6;
  const int trials = 10000;
  std::vector<int> hits(m, 0);
  for (int s = 0; s < trials; ++s) {
    auto split = random_split(Bundle::range(m), derive_seed(99, {static_cast<std::uint64_t>(s)}));
    EXPECT_EQ(split.first.size(), 3u);
    for (Item it : split.first) ++hits[it];
  }
  const double sigma = std::sqrt(trials * 0.25);
  for (int h : hits) EXPECT_NEAR(h, trials / 2.0, 3 * sigma);
}
