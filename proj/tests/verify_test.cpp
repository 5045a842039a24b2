#include <gtest/gtest.h>

#include <vector>

#include "pas/verify.hpp"

using namespace pas;

TEST(Fuzz, ExhaustiveSmallSpacePasses) {
  for (auto name : {"B-RR-PAS", "1-2-RR-PAS", "WF-PAS", "CB-PAS"}) {
    FuzzSpec spec;
    spec.mechanism = name;
    spec.max_m = 3;
    spec.panel = 6;
    auto rep = fuzz_truthfulness_exhaustive(spec);
    EXPECT_TRUE(rep.pass()) << name;
    EXPECT_FALSE(rep.partial);
    // m = 1..3: 2 agents x m! other reports x 6 predictions x 4^m truths.
    EXPECT_EQ(rep.instances, 2u * 6 * (1 * 4 + 2 * 16 + 6 * 64));
  }
}

TEST(Fuzz, MutantIsCaught) {
  FuzzSpec spec;
  spec.mechanism = std::string(kMutantMechanismName);
  spec.min_m = 2;
  spec.trials = 1000;
  spec.stop_at_first = true;
  auto rep = fuzz_truthfulness_sampled(spec);
  ASSERT_FALSE(rep.pass());
  EXPECT_LT(*rep.first_violation_trial, 1000u);
  const Violation& v = rep.violations.front();
  ASSERT_TRUE(v.misreport.has_value());
  // Replaying the recorded counterexample reproduces the gain.
  std::vector<std::vector<long long>> truth;
  for (const auto& row : v.valuations) {
    truth.emplace_back();
    for (const auto& x : row) truth.back().push_back(boost::rational_cast<long long>(x));
  }
  std::vector<std::vector<long long>> pv;
  for (const auto& row : *v.prediction_values) {
    pv.emplace_back();
    for (const auto& x : row) pv.back().push_back(boost::rational_cast<long long>(x));
  }
  PredictionProfile<long long> preds;
  preds.orderings = v.predictions;
  preds.values = pv;
  const auto mech = resolve_mechanism(kMutantMechanismName);
  auto honest = allocate_by_name(mech, truth, preds)[v.agent];
  auto lie = truth;
  lie[v.agent].clear();
  for (const auto& x : *v.misreport) lie[v.agent].push_back(boost::rational_cast<long long>(x));
  auto gained = allocate_by_name(mech, lie, preds)[v.agent];
  std::span<const long long> tv(truth[v.agent]);
  EXPECT_GT(bundle_value(tv, gained), bundle_value(tv, honest));
}

TEST(Fuzz, NAgentSampledPasses) {
  FuzzSpec spec;
  spec.mechanism = std::string(kNAgentMechanismName);
  spec.n = 3;
  spec.max_m = 4;
  spec.trials = 300;
  auto rep = fuzz_truthfulness_sampled(spec);
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.instances, 300u);
}

TEST(Fuzz, BudgetMarksPartialReport) {
  FuzzSpec spec;
  spec.mechanism = "B-RR-PAS";
  spec.max_m = 4;
  spec.panel = 4;
  spec.budget = 500;
  auto rep = fuzz_truthfulness_exhaustive(spec);
  EXPECT_TRUE(rep.partial);
  EXPECT_LE(rep.evaluations, 500u);
  spec.trials = 100000;
  auto rep2 = fuzz_truthfulness_sampled(spec);
  EXPECT_TRUE(rep2.partial);
  EXPECT_LE(rep2.evaluations, 500u);
}

TEST(Fuzz, UnknownMechanismIsRejected) {
  FuzzSpec spec;
  spec.mechanism = "Nope";
  EXPECT_THROW(fuzz_truthfulness_sampled(spec), InputError);
}

TEST(PermutationReports, CoverAllOrders) {
  auto perms = detail::permutation_reports(4);
  ASSERT_EQ(perms.size(), 24u);
  std::set<std::vector<Item>> orders;
  for (const auto& p : perms) orders.insert(induced_ordering(std::span<const long long>(p)).items());
  EXPECT_EQ(orders.size(), 24u);
}

TEST(Consistency, ProvenBoundsHoldOnSmallSample) {
  for (auto name : {"B-RR-PAS", "1-2-RR-PAS", "WF-PAS", "CB-PAS"}) {
    CheckSpec spec;
    spec.mechanism = name;
    spec.trials = 150;
    spec.max_m = 9;
    auto rep = check_consistency(spec);
    EXPECT_TRUE(rep.pass()) << name;
    EXPECT_FALSE(rep.lower_bound_only);
  }
  CheckSpec spec;
  spec.mechanism = std::string(kNAgentMechanismName);
  spec.agents = {3, 4};
  spec.trials = 100;
  spec.max_m = 9;
  EXPECT_TRUE(check_consistency(spec).pass());
}

// Footnote instance: (m-1, 1, ..., 1) with the second agent at ratio near 2.
TEST(Consistency, TightBoundIsViolated) {
  CheckSpec spec;
  spec.mechanism = "B-RR-PAS";
  spec.trials = 300;
  spec.max_m = 9;
  spec.bound = Rational(101, 100);
  EXPECT_FALSE(check_consistency(spec).pass());

  const std::size_t m = 9;
  std::vector<Rational> row(m, Rational(1));
  row[0] = Rational(static_cast<long long>(m - 1));
  Instance<Rational> inst({row, row});
  auto rep = run_named_mechanism("B-RR-PAS", inst, accurate_predictions(inst));
  EXPECT_EQ(rep.mu[1], Rational(8));
  EXPECT_GT(rep.ratios[1].value, Rational(101, 100));
  EXPECT_TRUE(rep.ratios[1].at_most(Rational(2)));
}

TEST(Consistency, BaselinesNeedAnExplicitBound) {
  CheckSpec spec;
  spec.mechanism = "Partition";
  EXPECT_THROW(check_consistency(spec), UnsupportedError);
}

TEST(Robustness, ProvenBoundsHoldOnSmallSample) {
  for (auto name : {"B-RR-PAS", "1-2-RR-PAS", "WF-PAS", "CB-PAS"}) {
    CheckSpec spec;
    spec.mechanism = name;
    spec.trials = 100;
    spec.max_m = 9;
    auto rep = check_robustness(spec);
    EXPECT_TRUE(rep.pass()) << name;
    EXPECT_EQ(rep.instances, 100u * 5);
  }
}

TEST(Robustness, BoundValues) {
  EXPECT_EQ(*robustness_bound("B-RR-PAS", 7, 2), Rational(4));
  EXPECT_EQ(*robustness_bound("1-2-RR-PAS", 7, 2), Rational(4));
  EXPECT_EQ(*robustness_bound("WF-PAS", 7, 2), Rational(6));
  EXPECT_EQ(*robustness_bound("N-Agent-MMS", 9, 3), Rational(3));
  EXPECT_FALSE(robustness_bound("N-Agent-MMS", 6, 3).has_value());
  EXPECT_EQ(robustness_k("N-Agent-MMS", 4), 6u);
  EXPECT_EQ(*consistency_bound("CB-PAS", Rational(1, 4)), Rational(9, 4));
}

TEST(Adversary, ReverseIsAtMaximumDistance) {
  Rng rng(51);
  std::vector<Rational> row;
  for (long long x : {5, 3, 9, 1, 7}) row.emplace_back(x);
  Instance<Rational> inst({row, row});
  auto truth = adversarial_predictions(inst, Adversary::kTruth, rng);
  auto rev = adversarial_predictions(inst, Adversary::kReverse, rng);
  auto tied = adversarial_predictions(inst, Adversary::kTied, rng);
  EXPECT_EQ(kendall_tau(truth.orderings[0], rev.orderings[0]), 10u);
  EXPECT_EQ(tied.orderings[0], Ordering::identity(5));
  EXPECT_EQ(induced_ordering(std::span<const Rational>((*rev.values)[1])), rev.orderings[1]);
}

TEST(Noise, ExactBoundChecks) {
  EXPECT_TRUE(within_noise_bound(Rational(2), Rational(1), 0));
  EXPECT_TRUE(within_noise_bound(Rational(6), Rational(1), 0));
  EXPECT_FALSE(within_noise_bound(Rational(7), Rational(1), 0));
  EXPECT_TRUE(within_noise_bound(Rational(8), Rational(1), 1));
  EXPECT_FALSE(within_noise_bound(Rational(9), Rational(1), 1));
  EXPECT_TRUE(within_noise_bound(Rational(10), Rational(1), 4));
  EXPECT_FALSE(within_noise_bound(Rational(1), Rational(0), 100));
  EXPECT_TRUE(within_noise_bound(Rational(0), Rational(0), 0));
}

TEST(Noise, EvenRanksAndShortfall) {
  std::vector<Rational> v;
  for (long long x : {1, 6, 4, 5, 2, 3}) v.emplace_back(x);
  std::span<const Rational> s(v);
  EXPECT_EQ(even_rank_items(s), (Bundle{0, 3, 5}));  // values 5, 3, 1 at ranks 2, 4, 6
  EXPECT_EQ(threshold_shortfall(s, Bundle{1, 3, 2}, Bundle{3, 5, 0}), 0);
  EXPECT_EQ(threshold_shortfall(s, Bundle{0, 4, 5}, Bundle{3, 2, 1}), 3);
}

TEST(Noise, SmallSweepPasses) {
  NoiseSpec spec;
  spec.ms = {6, 7};
  spec.per_d = 30;
  auto curve = check_noise_curve(spec);
  EXPECT_TRUE(curve.report.pass());
  EXPECT_EQ(curve.points.size(), 16u + 22u);
  for (const auto& p : curve.points) EXPECT_LE(p.max_ratio, p.bound);
  EXPECT_LE(curve.points.front().max_ratio, 2.0);
}

TEST(LowerBoundFixture, MaximinShareIsOne) {
  auto inst = lower_bound_fixture();
  EXPECT_EQ(mms_exact(inst.values(0), 2).mu, Rational(1));
}
