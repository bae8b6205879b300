// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "asyncrx/detectors.hpp"
#include "asyncrx/error.hpp"
#include "oracles.hpp"

namespace asyncrx {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-column BPSK posteriors with P(true symbol) given per pilot.
Matrix confidences(const std::vector<int>& truth, const std::vector<double>& p_true) {
  Matrix m(static_cast<Eigen::Index>(truth.size()), 2);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, truth[i]) = p_true[i];
    m(r, 1 - truth[i]) = 1.0 - p_true[i];
  }
  return m;
}

TEST(Ddm, HandEvaluatedExample) {
  std::vector<int> truth(500, 0);
  std::vector<int> decisions(500, 0);
  std::fill(decisions.begin(), decisions.begin() + 50, 1);
  DdmState ref{0.05, std::sqrt(0.05 * 0.95 / 500), 3.0, 0.2, true};
  const DdmStep step = ddm_step(ref, decisions, truth);
  EXPECT_DOUBLE_EQ(step.mu, 0.1);
  EXPECT_NEAR(step.sigma, 0.013416, 1e-6);
  EXPECT_NEAR(ref.sigma, 0.009747, 1e-6);
  EXPECT_NEAR(step.statistic, 0.11342, 1e-5);
  EXPECT_NEAR(step.bound, 0.07924, 1e-5);
  EXPECT_TRUE(step.retrain);
  EXPECT_EQ(step.state.mu, ref.mu);  // reference frozen on retrain
}

TEST(Ddm, ErrorFreeBlocksNeverRetrain) {
  std::vector<int> truth(100, 1);
  DdmState s;
  for (int t = 0; t < 20; ++t) {
    const DdmStep step = ddm_step(s, truth, truth);
    EXPECT_FALSE(step.retrain);
    s = step.state;
  }
}

TEST(Ddm, MomentsMatchBinomialOracleAndDecisionIsMonotoneInLambda) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 300);
    std::bernoulli_distribution err(std::uniform_real_distribution<double>(0, 0.5)(rng));
    std::vector<int> truth(static_cast<std::size_t>(n)), dec(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1U);
      dec[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] ^ (err(rng) ? 1 : 0);
    }
    const auto o = oracle::error_moments(dec, truth);
    DdmState ref{0.1, 0.02, 0.0, 0.3, true};
    bool previous = true;
    for (double lambda : {-kInf, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0, kInf}) {
      ref.lambda = lambda;
      const DdmStep step = ddm_step(ref, dec, truth);
      EXPECT_EQ(step.mu, o.mu);
      EXPECT_EQ(step.sigma, o.sigma);
      EXPECT_LE(step.retrain, previous);
      previous = step.retrain;
    }
  }
}

TEST(Ddm, BlendsReferenceOnlyWithoutRetrain) {
  std::vector<int> truth(100, 0), dec(100, 0);
  dec[0] = 1;
  DdmState ref{0.05, 0.02, 3.0, 0.25, true};
  const DdmStep step = ddm_step(ref, dec, truth);
  ASSERT_FALSE(step.retrain);
  EXPECT_DOUBLE_EQ(step.state.mu, 0.25 * 0.01 + 0.75 * 0.05);
  EXPECT_DOUBLE_EQ(step.state.sigma, 0.25 * std::sqrt(0.01 * 0.99 / 100) + 0.75 * 0.02);
}

TEST(Ddm, RejectsBadInput) {
  EXPECT_THROW(ddm_step({}, std::vector<int>{0}, std::vector<int>{0}), DimensionError);
  EXPECT_THROW(ddm_step({}, std::vector<int>{0, 1}, std::vector<int>{0}), DimensionError);
}

TEST(Pht, ConstantStreamNeverRetrains) {
  const std::vector<double> mags(50, 2.0);
  PhtState s{0, 0, 1e-9, 0.2, 0.0, false};
  for (int t = 0; t < 10; ++t) {
    const PhtStep step = pht_step(s, mags);
    EXPECT_EQ(step.distance, 0.0);
    EXPECT_FALSE(step.retrain);
    s = step.state;
  }
}

TEST(Pht, BetaOneTracksCurrentMean) {
  PhtState s{5.0, 0, 50, 1.0, 0.1, true};
  const std::vector<double> mags{1.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(pht_step(s, mags).mu, 7.0 / 3.0);
}

TEST(Pht, LevelShiftScenario) {
  const std::vector<double> ones(100, 1.0), threes(100, 3.0);
  auto oracle_distance = [](const std::vector<double>& m, double mu, double delta) {
    double d = 0.0;
    for (double v : m) d += std::abs(v - mu) - delta;
    return std::max(0.0, d);
  };
  // With beta = 1 the reference mean jumps with the data, so the distance stays 0.
  PhtState s{0, 0, 10.0, 1.0, 0.5, false};
  PhtStep first = pht_step(s, ones);
  PhtStep second = pht_step(first.state, threes);
  EXPECT_EQ(first.distance, oracle_distance(ones, 1.0, 0.5));
  EXPECT_EQ(second.distance, oracle_distance(threes, 3.0, 0.5));
  EXPECT_FALSE(second.retrain);
  // Partial forgetting leaves mu between the levels and the shift crosses lambda.
  s.beta = 0.5;
  first = pht_step(s, ones);
  second = pht_step(first.state, threes);
  EXPECT_DOUBLE_EQ(second.mu, 2.0);
  EXPECT_DOUBLE_EQ(second.distance, oracle_distance(threes, 2.0, 0.5));
  EXPECT_DOUBLE_EQ(second.statistic, 50.0);
  EXPECT_TRUE(second.retrain);
  EXPECT_DOUBLE_EQ(second.state.mu, 3.0);
}

TEST(Pht, DistanceNonNegativeAndHugeDeltaNeverFires) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> e(1.0);
  PhtState s{0, 0, 0.5, 0.3, 1e9, false};
  PhtState t{0, 0, 0.5, 0.3, 0.0, false};
  for (int b = 0; b < 30; ++b) {
    std::vector<double> m(40);
    for (double& v : m) v = e(rng) * (1 + b % 5);
    const PhtStep a = pht_step(s, m);
    const PhtStep c = pht_step(t, m);
    EXPECT_FALSE(a.retrain);
    EXPECT_GE(c.distance, 0.0);
    s = a.state;
    t = c.state;
  }
}

TEST(Pht, OutputMagnitudesAreRowNorms) {
  Matrix rx(2, 2);
  rx << 3, 4, 0, -2;
  EXPECT_EQ(output_magnitudes(rx), (std::vector<double>{5.0, 2.0}));
}

TEST(Posterior, WeightedMeanExample) {
  std::vector<int> truth;
  std::vector<double> p;
  for (int i = 0; i < 300; ++i) truth.push_back(0), p.push_back(0.9);
  for (int i = 0; i < 200; ++i) truth.push_back(1), p.push_back(0.6);
  const PosteriorStep step = posterior_step(SoftStats::empty(2, 0.8, 0.2), confidences(truth, p), truth);
  EXPECT_NEAR(step.mu, 0.78, 1e-12);
  EXPECT_TRUE(step.retrain);
}

TEST(Posterior, UniformAndPerfectCases) {
  const std::vector<int> truth{0, 1, 1, 0};
  EXPECT_TRUE(posterior_step(SoftStats::empty(2, 0.6, 0.2), Matrix::Constant(4, 2, 0.5), truth).retrain);
  EXPECT_DOUBLE_EQ(posterior_step(SoftStats::empty(2, 0.6, 0.2), Matrix::Constant(4, 2, 0.5), truth).mu, 0.5);
  const PosteriorStep perfect = posterior_step(SoftStats::empty(2, 0.999, 0.2), confidences(truth, {1, 1, 1, 1}), truth);
  EXPECT_DOUBLE_EQ(perfect.mu, 1.0);
  EXPECT_FALSE(perfect.retrain);
}

TEST(Posterior, MatchesBruteForceAndIgnoresOrder) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 80);
    std::vector<int> truth(static_cast<std::size_t>(n));
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1U), p[static_cast<std::size_t>(i)] = u(rng);
    const Matrix probs = confidences(truth, p);
    const double mu = posterior_step(SoftStats::empty(2, 0.5, 0.2), probs, truth).mu;
    EXPECT_NEAR(mu, oracle::brute_force_confidence(probs, truth), 1e-12);
    EXPECT_GE(mu, 0.0);
    EXPECT_LE(mu, 1.0);
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> t2;
    std::vector<double> p2;
    for (auto i : perm) t2.push_back(truth[i]), p2.push_back(p[i]);
    EXPECT_NEAR(posterior_step(SoftStats::empty(2, 0.5, 0.2), confidences(t2, p2), t2).mu, mu, 1e-12);
  }
}

TEST(Hotelling, HandEvaluatedExample) {
  EXPECT_NEAR(two_sample_statistic(100, 0.9, 0.01, 100, 0.7, 0.01), 200.0, 1e-9);
}

TEST(Hotelling, MatchesTextbookTSquared) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const int na = 2 + static_cast<int>(rng() % 9);
    const int nb = 2 + static_cast<int>(rng() % 9);
    std::vector<double> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
    const double shift = g(rng);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = g(rng) + shift;
    const double ours = two_sample_statistic(na, oracle::mean(a), oracle::sample_variance(a), nb, oracle::mean(b),
                                             oracle::sample_variance(b));
    const double ref = oracle::textbook_t_squared(a, b);
    EXPECT_LE(std::abs(ours - ref), 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Hotelling, IdenticalBlocksGiveZero) {
  const std::vector<int> truth{0, 0, 1, 1, 0, 1};
  const Matrix probs = confidences(truth, {0.9, 0.8, 0.7, 0.95, 0.85, 0.6});
  const HotellingStep first = hotelling_step(SoftStats::empty(2, 1.0, 0.2), probs, truth);
  EXPECT_EQ(first.statistic, 0.0);
  const HotellingStep second = hotelling_step(first.state, probs, truth);
  EXPECT_NEAR(second.statistic, 0.0, 1e-20);
  EXPECT_FALSE(second.retrain);
}

TEST(Hotelling, LocationInvarianceAndNonNegativity) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.2, 0.7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(12), b(15);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    const double base =
        two_sample_statistic(12, oracle::mean(a), oracle::sample_variance(a), 15, oracle::mean(b), oracle::sample_variance(b));
    for (double& v : a) v += 0.25;
    for (double& v : b) v += 0.25;
    const double shifted =
        two_sample_statistic(12, oracle::mean(a), oracle::sample_variance(a), 15, oracle::mean(b), oracle::sample_variance(b));
    EXPECT_NEAR(base, shifted, 1e-9 * std::max(1.0, base));
    EXPECT_GE(base, 0.0);
  }
}

TEST(Hotelling, WeightedStatisticAndBlendedReference) {
  const std::vector<int> t1{0, 0, 0, 1, 1, 1};
  const std::vector<int> t2{0, 0, 1, 1, 1, 1};
  const Matrix p1 = confidences(t1, {0.9, 0.8, 0.7, 0.9, 0.8, 0.7});
  const Matrix p2 = confidences(t2, {0.6, 0.5, 0.9, 0.8, 0.7, 0.8});
  const HotellingStep ref = hotelling_step(SoftStats::empty(2, 100.0, 0.5), p1, t1);
  const HotellingStep step = hotelling_step(ref.state, p2, t2);
  const double s0 = oracle::textbook_t_squared({0.6, 0.5}, {0.9, 0.8, 0.7});
  const double s1 = oracle::textbook_t_squared({0.9, 0.8, 0.7, 0.8}, {0.9, 0.8, 0.7});
  EXPECT_NEAR(step.symbol_statistic[0], s0, 1e-9);
  EXPECT_NEAR(step.symbol_statistic[1], s1, 1e-9);
  EXPECT_NEAR(step.statistic, (2.0 / 6) * s0 + (4.0 / 6) * s1, 1e-9);
  ASSERT_FALSE(step.retrain);
  EXPECT_NEAR(step.state.mean[0], 0.5 * 0.55 + 0.5 * 0.8, 1e-12);
}

TEST(Detector, RetrainCountMonotoneInLambda) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<DetectorEvidence> stream;
  for (int t = 0; t < 40; ++t) {
    DetectorEvidence ev;
    const double level = t < 20 ? 0.95 : 0.75;
    for (int i = 0; i < 60; ++i) {
      ev.truth.push_back(static_cast<int>(rng() & 1U));
      const double p = std::min(1.0, level * u(rng) / 0.75);
      ev.decisions.push_back(p > 0.5 ? ev.truth.back() : 1 - ev.truth.back());
      ev.magnitudes.push_back(p * 2);
    }
    std::vector<double> conf;
    for (int i = 0; i < 60; ++i) conf.push_back(std::min(1.0, level * u(rng) / 0.75));
    ev.probs = confidences(ev.truth, conf);
    stream.push_back(std::move(ev));
  }
  auto count = [&](DetectorKind kind, double lambda) {
    DriftDetector d(kind, {lambda, 0.2, 0.05}, 2);
    int fired = 0;
    for (const auto& ev : stream) {
      const DetectorOutcome o = d.observe(ev);
      if (o.retrain) {
        ++fired;
        d.rebaseline();
      }
    }
    return fired;
  };
  EXPECT_EQ(count(DetectorKind::kDdm, -kInf), 40);
  EXPECT_EQ(count(DetectorKind::kDdm, kInf), 0);
  EXPECT_EQ(count(DetectorKind::kHotelling, -kInf), 40);
  EXPECT_EQ(count(DetectorKind::kHotelling, kInf), 0);
  EXPECT_EQ(count(DetectorKind::kPosterior, kInf), 40);
  EXPECT_EQ(count(DetectorKind::kPosterior, -kInf), 0);
  EXPECT_EQ(count(DetectorKind::kPht, -kInf), 40);
  for (DetectorKind k : {DetectorKind::kDdm, DetectorKind::kHotelling, DetectorKind::kPht}) {
    int previous = 1000;
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
      const int c = count(k, lambda);
      EXPECT_LE(c, previous) << to_string(k) << " lambda " << lambda;
      previous = c;
    }
  }
}

TEST(Detector, ReplayIsDeterministic) {
  DetectorEvidence ev;
  ev.truth = {0, 1, 0, 1};
  ev.decisions = {0, 1, 1, 1};
  ev.probs = confidences(ev.truth, {0.9, 0.6, 0.4, 0.8});
  ev.magnitudes = {1.0, 2.0};
  for (DetectorKind k : {DetectorKind::kDdm, DetectorKind::kPht, DetectorKind::kPosterior, DetectorKind::kHotelling}) {
    DriftDetector a(k, {}, 2), b(k, {}, 2);
    for (int t = 0; t < 5; ++t) {
      const auto x = a.observe(ev);
      const auto y = b.observe(ev);
      EXPECT_EQ(x.retrain, y.retrain);
      EXPECT_EQ(x.statistic, y.statistic);
    }
  }
}

TEST(Detector, ParamsAreValidated) {
  EXPECT_THROW(DriftDetector(DetectorKind::kDdm, {3.0, 1.5, 0.0}, 2), ConfigError);
  EXPECT_THROW(DriftDetector(DetectorKind::kPht, {3.0, 0.2, -1.0}, 2), ConfigError);
  EXPECT_THROW(parse_detector_kind("adwin"), ConfigError);
}

TEST(Detector, EventLogFormat) {
  std::ostringstream out;
  const std::vector<DetectorEvent> events{{3, "ddm", 0.5, 0.25, true}};
  write_event_log(out, events);
  EXPECT_EQ(out.str(), "block,detector,statistic,threshold,decision\n3,ddm,0.5,0.25,1\n");
}

}  // namespace
}  // namespace asyncrx
