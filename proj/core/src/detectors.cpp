// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "asyncrx/error.hpp"

namespace asyncrx {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kDdm: return "ddm";
    case DetectorKind::kPht: return "pht";
    case DetectorKind::kPosterior: return "posterior";
    case DetectorKind::kHotelling: return "hotelling";
  }
  return "ddm";
}

DetectorKind parse_detector_kind(std::string_view name) {
  for (DetectorKind k : {DetectorKind::kDdm, DetectorKind::kPht, DetectorKind::kPosterior, DetectorKind::kHotelling})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

namespace {

double blend(double beta, double current, double previous) { return beta * current + (1.0 - beta) * previous; }

}  // namespace

DdmStep ddm_step(const DdmState& state, std::span<const int> decisions, std::span<const int> truth) {
  if (decisions.size() != truth.size()) throw DimensionError("ddm: decisions and pilots differ in length");
  if (truth.size() < 2) throw DimensionError("ddm: needs at least two pilots");
  const auto n = static_cast<double>(truth.size());
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += decisions[i] != truth[i] ? 1 : 0;

  DdmStep out;
  out.mu = static_cast<double>(errors) / n;
  out.sigma = std::sqrt(out.mu * (1.0 - out.mu) / n);
  out.statistic = out.mu + out.sigma;
  const double ref_mu = state.has_reference ? state.mu : out.mu;
  const double ref_sigma = state.has_reference ? state.sigma : out.sigma;
  out.bound = std::isinf(state.lambda) ? state.lambda : ref_mu + state.lambda * ref_sigma;
  out.retrain = out.statistic > out.bound;

  out.state = state;
  if (!out.retrain) {
    if (state.has_reference) {
      out.state.mu = blend(state.beta, out.mu, state.mu);
      out.state.sigma = blend(state.beta, out.sigma, state.sigma);
    } else {
      out.state.mu = out.mu;
      out.state.sigma = out.sigma;
      out.state.has_reference = true;
    }
  }
  return out;
}

std::vector<double> output_magnitudes(const Matrix& rx) {
  std::vector<double> mags(static_cast<std::size_t>(rx.rows()));
  for (Eigen::Index i = 0; i < rx.rows(); ++i) mags[static_cast<std::size_t>(i)] = rx.row(i).norm();
  return mags;
}

PhtStep pht_step(const PhtState& state, std::span<const double> magnitudes) {
  if (magnitudes.empty()) throw DimensionError("pht: empty block");
  double plain = 0.0;
  for (double m : magnitudes) plain += m;
  plain /= static_cast<double>(magnitudes.size());

  PhtStep out;
  out.mu = state.has_reference ? blend(state.beta, plain, state.mu) : plain;
  double dist = 0.0;
  for (double m : magnitudes) dist += std::abs(m - out.mu) - state.delta;
  out.distance = std::max(0.0, dist);
  const double d_prev = state.has_reference ? state.d_prev : out.distance;
  out.statistic = std::abs(out.distance - d_prev);
  out.retrain = out.statistic > state.lambda;

  out.state = state;
  out.state.mu = out.retrain ? plain : out.mu;
  out.state.d_prev = out.distance;
  out.state.has_reference = true;
  return out;
}

SoftStats SoftStats::empty(int symbols, double lambda, double beta) {
  SoftStats s;
  s.mean.assign(static_cast<std::size_t>(symbols), 0.0);
  s.var.assign(static_cast<std::size_t>(symbols), 0.0);
  s.count.assign(static_cast<std::size_t>(symbols), 0);
  s.lambda = lambda;
  s.beta = beta;
  return s;
}

SymbolMoments symbol_moments(const Matrix& probs, std::span<const int> truth) {
  if (static_cast<std::size_t>(probs.rows()) != truth.size())
    throw DimensionError("soft detector: posterior rows and pilot count differ");
  const auto symbols = static_cast<std::size_t>(probs.cols());
  SymbolMoments m{std::vector<int>(symbols, 0), std::vector<double>(symbols, 0.0), std::vector<double>(symbols, 0.0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto s = static_cast<std::size_t>(truth[i]);
    if (s >= symbols) throw DimensionError("soft detector: pilot symbol index out of range");
    ++m.count[s];
    m.mean[s] += probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
  }
  for (std::size_t s = 0; s < symbols; ++s)
    if (m.count[s] > 0) m.mean[s] /= m.count[s];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto s = static_cast<std::size_t>(truth[i]);
    const double d = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) - m.mean[s];
    m.var[s] += d * d;
  }
  for (std::size_t s = 0; s < symbols; ++s) m.var[s] = m.count[s] > 1 ? m.var[s] / (m.count[s] - 1) : 0.0;
  return m;
}

namespace {

void check_soft_state(const SoftStats& state, const Matrix& probs) {
  if (state.mean.size() != static_cast<std::size_t>(probs.cols()) || state.var.size() != state.mean.size() ||
      state.count.size() != state.mean.size())
    throw DimensionError("soft detector: state and posterior alphabet sizes differ");
}

// Blends current moments into the reference, carrying absent symbols forward.
SoftStats absorb(const SoftStats& state, const SymbolMoments& m, bool with_var) {
  SoftStats next = state;
  for (std::size_t s = 0; s < m.count.size(); ++s) {
    if (m.count[s] == 0) continue;
    if (state.has_reference && state.count[s] > 0) {
      next.mean[s] = blend(state.beta, m.mean[s], state.mean[s]);
      if (with_var) next.var[s] = blend(state.beta, m.var[s], state.var[s]);
    } else {
      next.mean[s] = m.mean[s];
      next.var[s] = m.var[s];
    }
    next.count[s] = m.count[s];
  }
  next.has_reference = true;
  return next;
}

}  // namespace

PosteriorStep posterior_step(const SoftStats& state, const Matrix& probs, std::span<const int> truth) {
  if (truth.empty()) throw DimensionError("posterior detector: no pilots");
  check_soft_state(state, probs);
  const SymbolMoments m = symbol_moments(probs, truth);
  const auto n = static_cast<double>(truth.size());

  PosteriorStep out;
  out.symbol_mean = m.mean;
  for (std::size_t s = 0; s < m.count.size(); ++s) out.mu += (m.count[s] / n) * m.mean[s];
  out.retrain = out.mu < state.lambda;
  out.state = out.retrain ? state : absorb(state, m, false);
  return out;
}

double two_sample_statistic(int n_a, double mean_a, double var_a, int n_b, double mean_b, double var_b,
                            double variance_floor) {
  if (n_a < 2 || n_b < 2) return 0.0;
  const double pooled = ((n_a - 1) * var_a + (n_b - 1) * var_b) / (n_a + n_b - 2);
  const double diff = mean_a - mean_b;
  return (static_cast<double>(n_a) * n_b / (n_a + n_b)) * diff * diff / std::max(pooled, variance_floor);
}

HotellingStep hotelling_step(const SoftStats& state, const Matrix& probs, std::span<const int> truth) {
  if (truth.empty()) throw DimensionError("hotelling detector: no pilots");
  check_soft_state(state, probs);
  const SymbolMoments m = symbol_moments(probs, truth);
  const auto n = static_cast<double>(truth.size());

  HotellingStep out;
  out.symbol_statistic.assign(m.count.size(), 0.0);
  if (state.has_reference) {
    for (std::size_t s = 0; s < m.count.size(); ++s) {
      out.symbol_statistic[s] =
          two_sample_statistic(m.count[s], m.mean[s], m.var[s], state.count[s], state.mean[s], state.var[s]);
      out.statistic += (m.count[s] / n) * out.symbol_statistic[s];
    }
  }
  out.retrain = out.statistic > state.lambda;
  out.state = out.retrain ? state : absorb(state, m, true);
  return out;
}

DriftDetector::DriftDetector(DetectorKind kind, DetectorParams params, int symbols)
    : kind_(kind), params_(params) {
  if (!(params.beta >= 0.0 && params.beta <= 1.0)) throw ConfigError("forgetting factor beta must lie in [0, 1]");
  if (std::isnan(params.lambda)) throw ConfigError("threshold lambda is NaN");
  switch (kind) {
    case DetectorKind::kDdm:
      state_ = DdmState{0.0, 0.0, params.lambda, params.beta, false};
      break;
    case DetectorKind::kPht:
      if (!(params.delta >= 0.0)) throw ConfigError("PHT change factor delta must be nonnegative");
      state_ = PhtState{0.0, 0.0, params.lambda, params.beta, params.delta, false};
      break;
    case DetectorKind::kPosterior:
    case DetectorKind::kHotelling:
      state_ = SoftStats::empty(symbols, params.lambda, params.beta);
      break;
  }
}

DetectorOutcome DriftDetector::observe(const DetectorEvidence& evidence) {
  DetectorOutcome out;
  switch (kind_) {
    case DetectorKind::kDdm: {
      const DdmStep step = ddm_step(std::get<DdmState>(state_), evidence.decisions, evidence.truth);
      state_ = step.state;
      out = {step.retrain, step.statistic, step.bound, step.statistic - step.bound};
      break;
    }
    case DetectorKind::kPht: {
      const PhtStep step = pht_step(std::get<PhtState>(state_), evidence.magnitudes);
      state_ = step.state;
      out = {step.retrain, step.statistic, params_.lambda, step.statistic - params_.lambda};
      break;
    }
    case DetectorKind::kPosterior: {
      const PosteriorStep step = posterior_step(std::get<SoftStats>(state_), evidence.probs, evidence.truth);
      state_ = step.state;
      out = {step.retrain, step.mu, params_.lambda, params_.lambda - step.mu};
      break;
    }
    case DetectorKind::kHotelling: {
      const HotellingStep step = hotelling_step(std::get<SoftStats>(state_), evidence.probs, evidence.truth);
      state_ = step.state;
      out = {step.retrain, step.statistic, params_.lambda, step.statistic - params_.lambda};
      break;
    }
  }
  return out;
}

void DriftDetector::rebaseline() {
  if (auto* ddm = std::get_if<DdmState>(&state_)) ddm->has_reference = false;
  if (auto* soft = std::get_if<SoftStats>(&state_)) {
    const int symbols = static_cast<int>(soft->mean.size());
    *soft = SoftStats::empty(symbols, soft->lambda, soft->beta);
  }
  // PHT resets its own mean inside the retrain branch.
}

void write_event_log(std::ostream& out, std::span<const DetectorEvent> events) {
  out << "block,detector,statistic,threshold,decision\n" << std::setprecision(10);
  for (const auto& e : events)
    out << e.block << ',' << e.detector << ',' << e.statistic << ',' << e.threshold << ',' << (e.retrain ? 1 : 0)
        << '\n';
}

}  // namespace asyncrx
