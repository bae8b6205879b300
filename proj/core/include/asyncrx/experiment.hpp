// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment driver: the T-block online loop and the sweep, comparison and
// threshold-calibration tables built on top of it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "asyncrx/config.hpp"
#include "asyncrx/detectors.hpp"
#include "asyncrx/policy.hpp"

namespace asyncrx {

struct BlockRecord {
  int block = 0;
  double ber_inst = 0.0;
  double ber_agg = 0.0;           ///< errors / symbols over blocks 1..t
  bool retrain = false;
  std::vector<int> groups;        ///< 1-based groups trained on this block
  std::vector<double> statistics; ///< detector statistics run on this block
  long errors = 0;
  long symbols = 0;
};

struct RunSummary {
  std::string policy;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  long retrains = 0;
  long modules = 0;
  long params = 0;
  double ratio = 0.0;
  double avg_ber = 0.0;
  long detections = 0;
  long verified_params = -1;  ///< checkpoint byte-diff count, -1 when not measured
  std::vector<long> group_retrains;
};

struct RunResult {
  std::vector<BlockRecord> blocks;
  RunSummary summary;
  ComplexityLedger ledger;
  std::vector<RetrainPlan> plans;
  std::vector<DetectorEvent> events;
};

/// One deterministic run of one policy at one SNR and seed.
RunResult run_single(const ExperimentConfig& config, const std::string& policy_id, double snr_db,
                     std::uint64_t seed);

/// Runs config.policy at config.snr_db for every seed and writes the per-run
/// files plus summary.csv into config.output_dir.
std::vector<RunSummary> run(const ExperimentConfig& config);

struct SweepRow {
  double snr_db = 0.0;
  double avg_ber = 0.0;
  double retrains = 0.0;
};

/// Average BER per SNR over seeds; writes sweep.csv.
std::vector<SweepRow> sweep_snr(const ExperimentConfig& config);

struct CompareRow {
  std::string policy;
  std::string label;  ///< e.g. DDM[9.2]
  double retrains = 0.0;
  double params = 0.0;
  double ratio = 0.0;
  double avg_ber = 0.0;
};

/// One row per policy averaged over seeds; writes compare.csv.
std::vector<CompareRow> compare_policies(const ExperimentConfig& config);

struct CalibrateRow {
  double lambda = 0.0;
  double retrains = 0.0;
  double avg_ber = 0.0;
};

struct Calibration {
  std::vector<CalibrateRow> grid;
  double best_lambda = 0.0;  ///< grid point whose mean retrains is closest to the target
};

/// Grid search over config.policy's detector threshold; writes calibrate.csv.
Calibration calibrate(const ExperimentConfig& config);

/// Default threshold grid for a detector.
std::vector<double> default_grid(DetectorKind detector);

/// Writes the threshold into the config field that belongs to the detector.
void set_threshold(ExperimentConfig& config, DetectorKind detector, double lambda);

/// CSV writers. Numbers use fixed 17-significant-digit formatting.
void write_blocks_csv(std::ostream& out, std::span<const BlockRecord> blocks);
void write_summary_csv(std::ostream& out, std::span<const RunSummary> runs);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows);
void write_calibrate_csv(std::ostream& out, std::span<const CalibrateRow> rows);

/// Per-run file stem: <policy>_snr<snr>_seed<seed> with ':' replaced by '-'.
std::string run_stem(const std::string& policy_id, double snr_db, std::uint64_t seed);

}  // namespace asyncrx
