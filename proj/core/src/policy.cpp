// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/policy.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include "asyncrx/error.hpp"

namespace asyncrx {

std::string PolicySpec::id() const {
  switch (kind) {
    case PolicyKind::kAlways: return "always";
    case PolicyKind::kPeriodic: return "periodic:" + std::to_string(period);
    case PolicyKind::kAsyncUnstructured: return "unstructured:" + std::string(to_string(detector));
    case PolicyKind::kAsyncModular: return "modular:" + std::string(to_string(detector));
  }
  return "always";
}

std::string PolicySpec::label() const {
  if (kind == PolicyKind::kAlways) return "Always";
  if (kind == PolicyKind::kPeriodic) return "Periodic(" + std::to_string(period) + ")";
  std::string name;
  switch (detector) {
    case DetectorKind::kDdm: name = "DDM"; break;
    case DetectorKind::kPht: name = "PHT"; break;
    case DetectorKind::kPosterior: name = "Posterior"; break;
    case DetectorKind::kHotelling: name = "HT"; break;
  }
  return kind == PolicyKind::kAsyncModular ? "Modular " + name : name;
}

PolicySpec parse_policy(std::string_view id) {
  PolicySpec spec;
  const auto colon = id.find(':');
  const std::string_view head = id.substr(0, colon);
  const std::string_view tail = colon == std::string_view::npos ? std::string_view{} : id.substr(colon + 1);
  if (head == "always" && tail.empty()) {
    spec.kind = PolicyKind::kAlways;
  } else if (head == "periodic") {
    spec.kind = PolicyKind::kPeriodic;
    if (!tail.empty()) {
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), spec.period);
      if (ec != std::errc{} || ptr != tail.data() + tail.size() || spec.period < 1)
        throw ConfigError("periodic policy needs a positive period, got '" + std::string(tail) + "'");
    }
  } else if (head == "unstructured" || head == "modular") {
    spec.kind = head == "modular" ? PolicyKind::kAsyncModular : PolicyKind::kAsyncUnstructured;
    spec.detector = parse_detector_kind(tail);
  } else {
    throw ConfigError("unknown policy '" + std::string(id) + "'");
  }
  return spec;
}

std::string_view to_string(RetrainTiming timing) {
  return timing == RetrainTiming::kSameBlock ? "same_block" : "consecutive";
}

RetrainTiming parse_retrain_timing(std::string_view name) {
  if (name == "same_block") return RetrainTiming::kSameBlock;
  if (name == "consecutive") return RetrainTiming::kConsecutiveBlock;
  throw ConfigError("unknown retrain timing '" + std::string(name) + "'");
}

int GroupLayout::module_count() const { return std::accumulate(modules.begin(), modules.end(), 0); }

std::vector<int> GroupLayout::all_users() const {
  std::vector<int> out;
  for (const auto& u : users) out.insert(out.end(), u.begin(), u.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RetrainPlan make_plan(int block, std::vector<int> groups, const GroupLayout& layout, int detections_run) {
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  RetrainPlan plan;
  plan.block = block;
  plan.detections_run = detections_run;
  for (int g : groups) {
    if (g < 0 || g >= layout.group_count()) throw ConfigError("plan group " + std::to_string(g) + " out of range");
    plan.modules += layout.modules[static_cast<std::size_t>(g)];
    plan.params_retrained += layout.parameters[static_cast<std::size_t>(g)];
  }
  plan.groups = std::move(groups);
  return plan;
}

double ComplexityLedger::retrain_probability(int group) const {
  if (blocks == 0) return 0.0;
  return static_cast<double>(group_retrains.at(static_cast<std::size_t>(group))) / blocks;
}

ComplexityLedger account(ComplexityLedger ledger, const RetrainPlan& plan,
                         std::span<const std::size_t> params_per_group) {
  if (ledger.group_retrains.size() < params_per_group.size()) ledger.group_retrains.resize(params_per_group.size(), 0);
  ledger.detections += plan.detections_run;
  ledger.blocks += 1;
  if (plan.empty()) return ledger;
  ledger.retrain_events += 1;
  ledger.modules_retrained += plan.modules;
  for (int g : plan.groups) {
    ledger.params_retrained += static_cast<long>(params_per_group[static_cast<std::size_t>(g)]);
    ledger.group_retrains[static_cast<std::size_t>(g)] += 1;
  }
  return ledger;
}

double compression_ratio(const ComplexityLedger& ledger, int blocks, int modules) {
  if (blocks <= 0) throw ConfigError("compression ratio needs a positive horizon");
  if (modules <= 0) throw ConfigError("compression ratio needs a positive module count");
  return static_cast<double>(ledger.modules_retrained) / (static_cast<double>(blocks) * modules);
}

std::vector<RetrainPlan> force_unstructured(std::span<const RetrainPlan> plans, const GroupLayout& layout) {
  std::vector<int> all(static_cast<std::size_t>(layout.group_count()));
  std::iota(all.begin(), all.end(), 0);
  std::vector<RetrainPlan> out;
  for (const auto& p : plans)
    out.push_back(p.empty() ? p : make_plan(p.block, all, layout, p.detections_run));
  return out;
}

TrainingPolicy::TrainingPolicy(PolicySpec spec, GroupLayout layout, int symbols, Budget budget,
                               RetrainTiming timing)
    : spec_(std::move(spec)), layout_(std::move(layout)), budget_(budget), timing_(timing) {
  if (layout_.group_count() < 1) throw ConfigError("policy needs at least one module group");
  if (layout_.modules.size() != layout_.users.size() || layout_.parameters.size() != layout_.users.size())
    throw ConfigError("group layout vectors differ in length");
  if (spec_.kind == PolicyKind::kPeriodic && spec_.period < 1) throw ConfigError("period must be >= 1");
  if (budget_.limit < 0) throw ConfigError("budget must be nonnegative");
  if (spec_.kind == PolicyKind::kAsyncUnstructured) detectors_.emplace_back(spec_.detector, spec_.params, symbols);
  if (spec_.kind == PolicyKind::kAsyncModular)
    for (int g = 0; g < layout_.group_count(); ++g) detectors_.emplace_back(spec_.detector, spec_.params, symbols);
  ledger_.group_retrains.assign(static_cast<std::size_t>(layout_.group_count()), 0);
}

bool TrainingPolicy::needs_evidence(int) const {
  if (!spec_.is_async()) return false;
  if (timing_ == RetrainTiming::kSameBlock) return true;
  if (spec_.kind == PolicyKind::kAsyncUnstructured) return pending_.empty();
  return static_cast<int>(pending_.size()) < layout_.group_count();
}

std::vector<int> TrainingPolicy::fit_budget(std::vector<std::pair<int, double>> candidates, long reserved) const {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const long room = budget_.remaining() - reserved;
  if (spec_.kind == PolicyKind::kAsyncUnstructured) {
    long total = 0;
    for (const auto& [g, u] : candidates) total += layout_.modules[static_cast<std::size_t>(g)];
    if (total > room) return {};
    std::vector<int> all;
    for (const auto& [g, u] : candidates) all.push_back(g);
    return all;
  }
  std::vector<int> kept;
  long used = 0;
  for (const auto& [g, u] : candidates) {
    const long m = layout_.modules[static_cast<std::size_t>(g)];
    if (used + m <= room) {
      kept.push_back(g);
      used += m;
    }
  }
  return kept;
}

BlockDecision TrainingPolicy::decide(int block, const EvidenceSource& evidence) {
  if (block != last_block_ + 1)
    throw ConfigError("policy blocks must be decided in order; expected " + std::to_string(last_block_ + 1));
  last_block_ = block;

  BlockDecision out;
  const int groups = layout_.group_count();
  std::vector<std::pair<int, double>> scheduled;
  auto all_groups = [&] {
    for (int g = 0; g < groups; ++g) scheduled.emplace_back(g, -static_cast<double>(g));
  };

  if (spec_.kind == PolicyKind::kAlways) {
    all_groups();
    out.plan = make_plan(block, fit_budget(scheduled, 0), layout_);
    return out;
  }
  if (spec_.kind == PolicyKind::kPeriodic) {
    if (block % spec_.period == 0) all_groups();
    out.plan = make_plan(block, fit_budget(scheduled, 0), layout_);
    return out;
  }

  const bool consecutive = timing_ == RetrainTiming::kConsecutiveBlock;
  std::vector<int> now;
  if (consecutive) now = std::exchange(pending_, {});
  auto training_now = [&](int g) { return std::find(now.begin(), now.end(), g) != now.end(); };

  int detections = 0;
  std::vector<std::pair<int, double>> fired;
  if (spec_.kind == PolicyKind::kAsyncUnstructured) {
    if (now.empty()) {
      const std::vector<int> users = layout_.all_users();
      const DetectorOutcome o = detectors_.front().observe(evidence(users));
      ++detections;
      out.outcomes.push_back({-1, o});
      if (o.retrain)
        for (int g = 0; g < groups; ++g) fired.emplace_back(g, o.urgency);
    }
  } else {
    for (int g = 0; g < groups; ++g) {
      if (training_now(g)) continue;
      const DetectorOutcome o =
          detectors_[static_cast<std::size_t>(g)].observe(evidence(layout_.users[static_cast<std::size_t>(g)]));
      ++detections;
      out.outcomes.push_back({g, o});
      if (o.retrain) fired.emplace_back(g, o.urgency);
    }
  }

  long reserved = 0;
  for (int g : now) reserved += layout_.modules[static_cast<std::size_t>(g)];
  std::vector<int> accepted = fit_budget(std::move(fired), reserved);
  if (consecutive) {
    pending_ = std::move(accepted);
    std::sort(pending_.begin(), pending_.end());
  } else {
    now = std::move(accepted);
  }
  out.plan = make_plan(block, std::move(now), layout_, detections);
  return out;
}

void TrainingPolicy::commit(const RetrainPlan& plan) {
  if (plan.modules > budget_.remaining()) throw std::logic_error("retrain plan exceeds the remaining budget");
  budget_.spent += plan.modules;
  ledger_ = account(std::move(ledger_), plan, layout_.parameters);
  if (plan.empty() || detectors_.empty()) return;
  if (spec_.kind == PolicyKind::kAsyncUnstructured) {
    detectors_.front().rebaseline();
  } else {
    for (int g : plan.groups) detectors_[static_cast<std::size_t>(g)].rebaseline();
  }
}

}  // namespace asyncrx
