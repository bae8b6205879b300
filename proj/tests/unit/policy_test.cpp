// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "asyncrx/error.hpp"
#include "asyncrx/policy.hpp"

namespace asyncrx {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GroupLayout deepsic_layout(int users = 4, int iterations = 3, std::size_t params = 100) {
  GroupLayout l;
  for (int k = 0; k < users; ++k) {
    l.users.push_back({k});
    l.modules.push_back(iterations);
    l.parameters.push_back(params + static_cast<std::size_t>(k));
  }
  return l;
}

// Evidence whose error rate per user is drawn fresh on every call.
struct RandomEvidence {
  std::mt19937_64 rng;
  explicit RandomEvidence(std::uint64_t seed) : rng(seed) {}
  DetectorEvidence operator()(std::span<const int> users) {
    DetectorEvidence ev;
    std::uniform_real_distribution<double> u(0, 1);
    const double rate = u(rng) * 0.3;
    for (std::size_t k = 0; k < users.size(); ++k)
      for (int i = 0; i < 50; ++i) {
        const int s = static_cast<int>(rng() & 1U);
        ev.truth.push_back(s);
        ev.decisions.push_back(u(rng) < rate ? 1 - s : s);
      }
    ev.probs.resize(static_cast<Eigen::Index>(ev.truth.size()), 2);
    for (std::size_t i = 0; i < ev.truth.size(); ++i) {
      const double p = 0.5 + 0.5 * u(rng);
      ev.probs(static_cast<Eigen::Index>(i), ev.truth[i]) = p;
      ev.probs(static_cast<Eigen::Index>(i), 1 - ev.truth[i]) = 1 - p;
    }
    ev.magnitudes.assign(20, 1.0 + u(rng));
    return ev;
  }
};

std::vector<RetrainPlan> drive(TrainingPolicy& policy, int blocks, std::uint64_t seed) {
  RandomEvidence source(seed);
  EvidenceSource evidence = [&](std::span<const int> users) { return source(users); };
  std::vector<RetrainPlan> plans;
  for (int t = 1; t <= blocks; ++t) {
    const BlockDecision d = policy.decide(t, evidence);
    policy.commit(d.plan);
    plans.push_back(d.plan);
  }
  return plans;
}

TEST(PolicySpec, ParsesIdsAndLabels) {
  EXPECT_EQ(parse_policy("always").label(), "Always");
  EXPECT_EQ(parse_policy("periodic:7").period, 7);
  EXPECT_EQ(parse_policy("periodic:7").label(), "Periodic(7)");
  EXPECT_EQ(parse_policy("modular:hotelling").label(), "Modular HT");
  EXPECT_EQ(parse_policy("unstructured:ddm").id(), "unstructured:ddm");
  EXPECT_THROW(parse_policy("periodic:0"), ConfigError);
  EXPECT_THROW(parse_policy("sometimes"), ConfigError);
  EXPECT_THROW(parse_policy("modular:cusum"), ConfigError);
}

TEST(Policy, AlwaysRetrainsEverythingEveryBlock) {
  TrainingPolicy p(parse_policy("always"), deepsic_layout(), 2);
  const auto plans = drive(p, 100, 1);
  for (const auto& plan : plans) EXPECT_EQ(plan.groups, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(p.ledger().retrain_events, 100);
  EXPECT_EQ(p.ledger().detections, 0);
  EXPECT_DOUBLE_EQ(compression_ratio(p.ledger(), 100, 12), 1.0);
}

TEST(Policy, PeriodicRetrainsOnMultiples) {
  TrainingPolicy p(parse_policy("periodic:10"), deepsic_layout(), 2);
  const auto plans = drive(p, 100, 1);
  for (int t = 1; t <= 100; ++t) EXPECT_EQ(!plans[static_cast<std::size_t>(t - 1)].empty(), t % 10 == 0) << t;
  EXPECT_EQ(p.ledger().retrain_events, 10);
}

TEST(Policy, BlocksMustBeSequential) {
  TrainingPolicy p(parse_policy("always"), deepsic_layout(), 2);
  RandomEvidence src(1);
  EvidenceSource ev = [&](std::span<const int> u) { return src(u); };
  EXPECT_THROW(p.decide(2, ev), ConfigError);
}

TEST(Ledger, EmptyPlanAddsOnlyDetections) {
  const GroupLayout l = deepsic_layout();
  ComplexityLedger led;
  led = account(led, make_plan(1, {}, l, 4), l.parameters);
  EXPECT_EQ(led.detections, 4);
  EXPECT_EQ(led.params_retrained, 0);
  EXPECT_EQ(led.retrain_events, 0);
  EXPECT_DOUBLE_EQ(compression_ratio(led, 1, 12), 0.0);
}

TEST(Ledger, ExclusiveSingleGroupRetrainsSaveFactorM) {
  const GroupLayout l = deepsic_layout(4, 1);
  ComplexityLedger led;
  for (int t = 1; t <= 40; ++t) led = account(led, make_plan(t, {t % 4}, l), l.parameters);
  EXPECT_DOUBLE_EQ(compression_ratio(led, 40, 4), 40.0 / (40.0 * 4));
  EXPECT_DOUBLE_EQ(led.retrain_probability(1), 0.25);
}

TEST(Ledger, NineFullRetrainsOverHundredBlocks) {
  const GroupLayout l{{{0}}, {1}, {500}};
  ComplexityLedger led;
  for (int t = 1; t <= 100; ++t) led = account(led, make_plan(t, t % 11 == 0 ? std::vector<int>{0} : std::vector<int>{}, l), l.parameters);
  EXPECT_EQ(led.retrain_events, 9);
  EXPECT_DOUBLE_EQ(compression_ratio(led, 100, 1), 0.09);
  EXPECT_THROW(compression_ratio(led, 0, 1), ConfigError);
}

TEST(Policy, AlwaysFiringDetectorsReproduceAlwaysPlans) {
  const GroupLayout l = deepsic_layout();
  TrainingPolicy always(parse_policy("always"), l, 2);
  const auto reference = drive(always, 30, 4);
  for (const char* id : {"unstructured:ddm", "unstructured:pht", "unstructured:hotelling", "modular:ddm",
                         "modular:hotelling", "unstructured:posterior", "modular:posterior"}) {
    PolicySpec spec = parse_policy(id);
    spec.params.lambda = spec.detector == DetectorKind::kPosterior ? kInf : -kInf;
    TrainingPolicy p(spec, l, 2, {}, RetrainTiming::kSameBlock);
    const auto plans = drive(p, 30, 4);
    for (std::size_t t = 0; t < plans.size(); ++t) {
      EXPECT_EQ(plans[t].groups, reference[t].groups) << id << " block " << t + 1;
      EXPECT_EQ(plans[t].modules, reference[t].modules);
      EXPECT_EQ(plans[t].params_retrained, reference[t].params_retrained);
    }
  }
}

TEST(Policy, NeverFiringDetectorsNeverRetrain) {
  for (const char* id : {"unstructured:ddm", "unstructured:pht", "modular:hotelling", "modular:posterior"}) {
    for (RetrainTiming timing : {RetrainTiming::kSameBlock, RetrainTiming::kConsecutiveBlock}) {
      PolicySpec spec = parse_policy(id);
      spec.params.lambda = spec.detector == DetectorKind::kPosterior ? -kInf : kInf;
      TrainingPolicy p(spec, deepsic_layout(), 2, {}, timing);
      drive(p, 40, 5);
      EXPECT_EQ(p.ledger().retrain_events, 0) << id;
      EXPECT_GT(p.ledger().detections, 0);
    }
  }
}

TEST(Policy, ConsecutiveTimingDelaysByOneBlock) {
  PolicySpec spec = parse_policy("modular:ddm");
  spec.params.lambda = -kInf;
  TrainingPolicy p(spec, deepsic_layout(), 2, {}, RetrainTiming::kConsecutiveBlock);
  const auto plans = drive(p, 4, 1);
  EXPECT_TRUE(plans[0].empty());
  EXPECT_EQ(plans[1].groups, (std::vector<int>{0, 1, 2, 3}));
  // Groups being trained skip detection, so the schedule alternates.
  EXPECT_TRUE(plans[2].empty());
  EXPECT_EQ(plans[3].groups, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Policy, BudgetIsNeverExceeded) {
  std::mt19937_64 rng(77);
  const char* ids[] = {"always", "periodic:3", "unstructured:ddm", "modular:ddm", "modular:hotelling",
                       "unstructured:pht", "modular:posterior"};
  for (int trial = 0; trial < 100; ++trial) {
    const int users = 1 + static_cast<int>(rng() % 5);
    const int iterations = 1 + static_cast<int>(rng() % 3);
    PolicySpec spec = parse_policy(ids[rng() % 7]);
    spec.params.lambda = std::uniform_real_distribution<double>(-1.0, 2.0)(rng);
    if (spec.detector == DetectorKind::kPosterior) spec.params.lambda = 0.9;
    Budget budget;
    budget.limit = static_cast<long>(rng() % 60);
    const RetrainTiming timing = rng() & 1U ? RetrainTiming::kSameBlock : RetrainTiming::kConsecutiveBlock;
    TrainingPolicy p(spec, deepsic_layout(users, iterations), 2, budget, timing);
    const auto plans = drive(p, 50, rng());
    long used = 0;
    for (const auto& plan : plans) used += plan.modules;
    EXPECT_LE(used, budget.limit) << spec.id();
    EXPECT_EQ(used, p.budget().spent);
  }
}

TEST(Policy, BudgetKeepsMostUrgentGroups) {
  PolicySpec spec = parse_policy("modular:ddm");
  spec.params.lambda = -1e3;  // always fires, urgency varies with sigma
  Budget budget;
  budget.limit = 6;
  TrainingPolicy p(spec, deepsic_layout(), 2, budget, RetrainTiming::kSameBlock);
  RandomEvidence src(3);
  EvidenceSource ev = [&](std::span<const int> u) { return src(u); };
  const BlockDecision d = p.decide(1, ev);
  EXPECT_EQ(d.plan.modules, 6);
  ASSERT_EQ(d.plan.groups.size(), 2U);
  std::vector<double> urgency;
  for (const auto& o : d.outcomes) urgency.push_back(o.outcome.urgency);
  for (int g : d.plan.groups)
    for (int other = 0; other < 4; ++other)
      if (std::find(d.plan.groups.begin(), d.plan.groups.end(), other) == d.plan.groups.end())
        EXPECT_GE(urgency[static_cast<std::size_t>(g)], urgency[static_cast<std::size_t>(other)]);
  p.commit(d.plan);
  EXPECT_THROW(p.commit(make_plan(2, {0}, p.layout())), std::logic_error);
}

TEST(Policy, UnstructuredBudgetIsAllOrNothing) {
  PolicySpec spec = parse_policy("unstructured:ddm");
  spec.params.lambda = -kInf;
  Budget budget;
  budget.limit = 11;
  TrainingPolicy p(spec, deepsic_layout(), 2, budget, RetrainTiming::kSameBlock);
  const auto plans = drive(p, 5, 1);
  for (const auto& plan : plans) EXPECT_TRUE(plan.empty());
}

TEST(Policy, ModularNeverCostsMoreThanForcedUnstructured) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    PolicySpec spec = parse_policy(rng() & 1U ? "modular:ddm" : "modular:hotelling");
    spec.params.lambda = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const GroupLayout l = deepsic_layout(4, 3);
    TrainingPolicy p(spec, l, 2);
    const auto plans = drive(p, 40, rng());
    ComplexityLedger forced;
    for (const auto& plan : force_unstructured(plans, l)) forced = account(forced, plan, l.parameters);
    EXPECT_LE(compression_ratio(p.ledger(), 40, 12), compression_ratio(forced, 40, 12));
    EXPECT_LE(p.ledger().params_retrained, forced.params_retrained);
  }
}

TEST(Policy, RetrainTimingNames) {
  EXPECT_EQ(parse_retrain_timing("same_block"), RetrainTiming::kSameBlock);
  EXPECT_EQ(to_string(RetrainTiming::kConsecutiveBlock), "consecutive");
  EXPECT_THROW(parse_retrain_timing("later"), ConfigError);
}

}  // namespace
}  // namespace asyncrx
