// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// When and which module groups to retrain: synchronous schedules
// (always, periodic) and drift-driven asynchronous policies, either
// all-or-nothing over the whole receiver or per module group, with a hard cap
// on the cumulative number of retrained modules and complexity accounting.

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asyncrx/detectors.hpp"

namespace asyncrx {

enum class PolicyKind { kAlways, kPeriodic, kAsyncUnstructured, kAsyncModular };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kAlways;
  int period = 10;
  DetectorKind detector = DetectorKind::kDdm;
  DetectorParams params;

  bool is_async() const { return kind == PolicyKind::kAsyncUnstructured || kind == PolicyKind::kAsyncModular; }
  /// Canonical id: always | periodic:<k> | unstructured:<detector> | modular:<detector>.
  std::string id() const;
  /// Display name: Always, Periodic(10), DDM, PHT, Posterior, HT; "Modular " prefix for modular.
  std::string label() const;
};

/// Parses the canonical id. Detector params are left at their defaults.
/// Throws ConfigError on an unknown policy or detector.
PolicySpec parse_policy(std::string_view id);

enum class RetrainTiming {
  kConsecutiveBlock,  ///< drift found on block t is trained on block t + 1
  kSameBlock,         ///< drift found on block t is trained on block t's pilots
};

std::string_view to_string(RetrainTiming timing);
RetrainTiming parse_retrain_timing(std::string_view name);

/// Trainable structure seen by the policy.
struct GroupLayout {
  std::vector<std::vector<int>> users;    ///< users covered by each group
  std::vector<int> modules;               ///< modules per group
  std::vector<std::size_t> parameters;    ///< trainable parameters per group

  int group_count() const { return static_cast<int>(users.size()); }
  int module_count() const;
  std::vector<int> all_users() const;
};

struct RetrainPlan {
  int block = 0;
  std::vector<int> groups;          ///< sorted, may be empty
  int modules = 0;                  ///< |M^tr[t]|
  std::size_t params_retrained = 0;
  int detections_run = 0;

  bool empty() const { return groups.empty(); }
};

/// Builds a plan for the listed groups with module and parameter totals.
RetrainPlan make_plan(int block, std::vector<int> groups, const GroupLayout& layout, int detections_run = 0);

struct Budget {
  static constexpr long kUnlimited = std::numeric_limits<long>::max();
  long limit = kUnlimited;  ///< C: cap on the sum over blocks of |M^tr[t]|
  long spent = 0;

  long remaining() const { return limit - spent; }
};

struct ComplexityLedger {
  long detections = 0;          ///< detector invocations (kappa_d units)
  long params_retrained = 0;    ///< kappa_T in trainable parameters
  long modules_retrained = 0;   ///< sum over blocks of |M^tr[t]|
  long retrain_events = 0;      ///< blocks with a nonempty plan
  int blocks = 0;
  std::vector<long> group_retrains;

  /// Empirical Pr(group in M^tr[t]).
  double retrain_probability(int group) const;
};

/// Adds one block's detection and training cost. params_per_group gives the
/// parameter count of each group; the plan's groups index into it.
ComplexityLedger account(ComplexityLedger ledger, const RetrainPlan& plan,
                         std::span<const std::size_t> params_per_group);

/// (1 / (T M)) * sum_t |M^tr[t]|. Throws ConfigError when blocks or modules is
/// not positive.
double compression_ratio(const ComplexityLedger& ledger, int blocks, int modules);

/// Replaces every nonempty plan by the full group set.
std::vector<RetrainPlan> force_unstructured(std::span<const RetrainPlan> plans, const GroupLayout& layout);

/// Detector result for one group (-1 for the single unstructured detector).
struct GroupOutcome {
  int group = -1;
  DetectorOutcome outcome;
};

struct BlockDecision {
  RetrainPlan plan;  ///< groups to train on this block's pilots
  std::vector<GroupOutcome> outcomes;
};

/// Builds a detector's evidence for a set of users on the current block.
using EvidenceSource = std::function<DetectorEvidence(std::span<const int> users)>;

/// Stateful policy loop for one run. Call decide() once per block in order,
/// train the returned plan, then call commit() with it.
class TrainingPolicy {
 public:
  TrainingPolicy(PolicySpec spec, GroupLayout layout, int symbols, Budget budget = {},
                 RetrainTiming timing = RetrainTiming::kConsecutiveBlock);

  const PolicySpec& spec() const { return spec_; }
  const GroupLayout& layout() const { return layout_; }
  const Budget& budget() const { return budget_; }
  const ComplexityLedger& ledger() const { return ledger_; }
  const std::vector<int>& pending() const { return pending_; }

  /// Whether decide() at this block will call the evidence source.
  bool needs_evidence(int block) const;

  BlockDecision decide(int block, const EvidenceSource& evidence);

  /// Charges the budget, updates the ledger and rebaselines the detectors of
  /// every trained group.
  void commit(const RetrainPlan& plan);

 private:
  std::vector<int> fit_budget(std::vector<std::pair<int, double>> candidates, long reserved) const;

  PolicySpec spec_;
  GroupLayout layout_;
  Budget budget_;
  RetrainTiming timing_;
  std::vector<DriftDetector> detectors_;
  std::vector<int> pending_;
  ComplexityLedger ledger_;
  int last_block_ = 0;
};

}  // namespace asyncrx
