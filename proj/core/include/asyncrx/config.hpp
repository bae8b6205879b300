// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Flat key = value experiment configuration.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "asyncrx/channel.hpp"
#include "asyncrx/detectors.hpp"
#include "asyncrx/mlp.hpp"
#include "asyncrx/policy.hpp"
#include "asyncrx/receivers.hpp"

namespace asyncrx {

enum class Scenario { kMimo, kSisoIsi };

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view name);

struct ExperimentConfig {
  Scenario scenario = Scenario::kMimo;
  VariationProfile profile;
  BaseChannel base_channel = BaseChannel::kExponential;

  int users = 4;
  int antennas = 4;
  int taps = 4;

  int blocks = 100;
  bool fast = true;
  int block_length = 0;  ///< 0 picks 2000 (fast) or 10000
  int pilots = 0;        ///< 0 picks the scenario default for the scale

  double snr_db = 12.0;
  std::vector<double> snr_list = {9, 10, 11, 12, 13};

  ReceiverKind receiver = ReceiverKind::kDeepSic;
  int iterations = 3;
  int hidden = 64;

  std::string policy = "always";
  std::vector<std::string> policies = {"always", "periodic:10", "unstructured:ddm", "unstructured:hotelling"};
  double ddm_lambda = 3.0;
  double pht_lambda = 50.0;
  double pht_delta = 0.05;
  double posterior_lambda = 0.8;
  double hotelling_lambda = 5.0;
  double beta = 0.2;
  long budget = Budget::kUnlimited;
  RetrainTiming retrain_timing = RetrainTiming::kConsecutiveBlock;

  int epochs = 10;
  int bootstrap_epochs = 100;
  double learning_rate = 5e-3;
  int batch_size = 64;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "asyncrx-out";

  double calibrate_target = 9.0;
  std::vector<double> calibrate_grid;  ///< empty picks a detector-specific grid

  bool verify_ledger = false;
  bool write_events = true;

  /// Resolved sizes after the fast/full-scale defaults.
  int resolved_block_length() const;
  int resolved_pilots() const;
  int info_count() const { return resolved_block_length() - resolved_pilots(); }

  ChannelShape channel_shape() const;
  ReceiverStructure receiver_structure() const;
  /// Parses a policy id and attaches this config's thresholds for its detector.
  PolicySpec policy_spec(std::string_view id) const;
  TrainingOptions training_options(int epochs, std::uint64_t seed) const;
};

/// Applies one key = value assignment. Throws ConfigError naming the field.
void set_field(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Every recognized key with a one-line description, in file order.
std::vector<std::pair<std::string, std::string>> config_fields();

/// Reads key = value lines; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Checks cross-field invariants. Throws ConfigError with the offending field.
void validate(const ExperimentConfig& config);

/// Round-trippable text form (every field, resolved defaults left as 0).
std::string to_text(const ExperimentConfig& config);

}  // namespace asyncrx
