// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Streaming concept-drift detectors. Each step is a pure function
// (state, evidence) -> (decision, new state); DriftDetector wraps one of them
// behind a uniform interface for the training policy.
//
// State is only advanced on a no-retrain decision. After the receiver is
// retrained the policy calls DriftDetector::rebaseline(), which drops the
// reference moments so the next block seeds a fresh reference instead of
// being compared against statistics of the stale model.

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asyncrx/channel.hpp"

namespace asyncrx {

enum class DetectorKind { kDdm, kPht, kPosterior, kHotelling };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

// ------------------------------------------------------------------- DDM

struct DdmState {
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 3.0;
  double beta = 0.2;
  bool has_reference = false;
};

struct DdmStep {
  bool retrain = false;
  DdmState state;
  double mu = 0.0;     ///< pilot error rate of this block
  double sigma = 0.0;  ///< sqrt(mu (1 - mu) / B)
  double statistic = 0.0;  ///< mu + sigma
  double bound = 0.0;      ///< reference mu + lambda * reference sigma
};

/// Error-rate test. Throws DimensionError on a length mismatch or fewer than
/// two pilots. Without a reference the block is compared against its own
/// moments.
DdmStep ddm_step(const DdmState& state, std::span<const int> decisions, std::span<const int> truth);

// ------------------------------------------------------------------- PHT

struct PhtState {
  double mu = 0.0;
  double d_prev = 0.0;
  double lambda = 50.0;
  double beta = 0.2;
  double delta = 0.05;
  bool has_reference = false;
};

struct PhtStep {
  bool retrain = false;
  PhtState state;
  double mu = 0.0;         ///< cumulative mean after this block
  double distance = 0.0;   ///< d[t] >= 0
  double statistic = 0.0;  ///< |d[t] - d[t-1]|
};

/// Page-Hinkley style test on output magnitudes. The first block seeds mu with
/// its plain mean. On retrain mu is reset to the plain block mean.
PhtStep pht_step(const PhtState& state, std::span<const double> magnitudes);

/// Per-slot Euclidean norm of each received row.
std::vector<double> output_magnitudes(const Matrix& rx);

// ------------------------------------------------- soft-output detectors

struct SoftStats {
  std::vector<double> mean;   ///< per symbol
  std::vector<double> var;    ///< per symbol, unbiased
  std::vector<int> count;     ///< per symbol pilot count
  double lambda = 0.8;
  double beta = 0.2;
  bool has_reference = false;

  static SoftStats empty(int symbols, double lambda, double beta);
};

/// Moments of P(s | y_i) over the pilots whose true symbol is s.
/// probs is n x |S|, truth holds n constellation indices.
struct SymbolMoments {
  std::vector<int> count;
  std::vector<double> mean;
  std::vector<double> var;  ///< zero when count < 2
};
SymbolMoments symbol_moments(const Matrix& probs, std::span<const int> truth);

struct PosteriorStep {
  bool retrain = false;
  SoftStats state;
  double mu = 0.0;  ///< count-weighted mean confidence in the true symbol
  std::vector<double> symbol_mean;
};

/// Retrains when mu < lambda. Throws DimensionError on an empty pilot set.
PosteriorStep posterior_step(const SoftStats& state, const Matrix& probs, std::span<const int> truth);

/// Two-sample Hotelling t^2 for scalar samples summarized by moments; the
/// pooled variance is floored at variance_floor.
double two_sample_statistic(int n_a, double mean_a, double var_a, int n_b, double mean_b, double var_b,
                            double variance_floor = 1e-12);

struct HotellingStep {
  bool retrain = false;
  SoftStats state;
  double statistic = 0.0;               ///< count-weighted sum of per-symbol statistics
  std::vector<double> symbol_statistic;  ///< 0 where either side has < 2 samples
};

/// Retrains when the weighted statistic exceeds lambda. Without a reference
/// every per-symbol statistic is zero.
HotellingStep hotelling_step(const SoftStats& state, const Matrix& probs, std::span<const int> truth);

// ------------------------------------------------------- uniform wrapper

struct DetectorParams {
  double lambda = 3.0;
  double beta = 0.2;
  double delta = 0.05;  ///< PHT only
};

/// Everything a detector may look at for one block.
struct DetectorEvidence {
  Matrix probs;                     ///< pilot posteriors, n x |S|
  std::vector<int> truth;           ///< pilot symbols
  std::vector<int> decisions;       ///< hard pilot decisions
  std::vector<double> magnitudes;   ///< ||y_i|| over the whole block
};

struct DetectorOutcome {
  bool retrain = false;
  double statistic = 0.0;
  double threshold = 0.0;
  /// Signed distance past the threshold; larger means more urgent.
  double urgency = 0.0;
};

class DriftDetector {
 public:
  DriftDetector(DetectorKind kind, DetectorParams params, int symbols);

  DetectorKind kind() const { return kind_; }
  const DetectorParams& params() const { return params_; }

  DetectorOutcome observe(const DetectorEvidence& evidence);
  void rebaseline();

 private:
  DetectorKind kind_;
  DetectorParams params_;
  std::variant<DdmState, PhtState, SoftStats> state_;
};

/// One row of the per-block detector log.
struct DetectorEvent {
  int block = 0;
  std::string detector;
  double statistic = 0.0;
  double threshold = 0.0;
  bool retrain = false;
};

/// CSV with header block,detector,statistic,threshold,decision.
void write_event_log(std::ostream& out, std::span<const DetectorEvent> events);

}  // namespace asyncrx
