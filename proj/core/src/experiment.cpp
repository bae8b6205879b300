// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "asyncrx/error.hpp"
#include "asyncrx/random.hpp"
#include "asyncrx/receivers.hpp"

namespace asyncrx {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Matrix stack_rows(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

GroupLayout layout_of(const Receiver& rx) {
  GroupLayout layout;
  for (int g = 0; g < rx.group_count(); ++g) {
    layout.users.push_back(rx.group_users(g));
    layout.modules.push_back(rx.group_module_count(g));
    layout.parameters.push_back(rx.group_parameter_count(g));
  }
  return layout;
}

long changed_parameters(const std::map<ModuleId, std::string>& before, const std::map<ModuleId, std::string>& after) {
  long total = 0;
  for (const auto& [id, bytes] : after) {
    const auto it = before.find(id);
    if (it != before.end() && it->second == bytes) continue;
    std::istringstream in(bytes);
    total += static_cast<long>(load_mlp(in).parameter_count());
  }
  return total;
}

// Pilot evidence for a set of users, stacked user-major.
DetectorEvidence gather_evidence(const Detection& det, const IndexMatrix& truth, const Matrix& block_rx,
                                 std::span<const int> users) {
  const int slots = det.posterior.slots();
  const int symbols = det.posterior.symbols();
  const auto n = static_cast<std::size_t>(slots) * users.size();
  DetectorEvidence ev;
  ev.probs.resize(static_cast<Eigen::Index>(n), symbols);
  ev.truth.reserve(n);
  ev.decisions.reserve(n);
  Eigen::Index row = 0;
  for (int u : users) {
    ev.probs.middleRows(row, slots) = det.posterior.user_probs(u);
    row += slots;
    for (int i = 0; i < slots; ++i) {
      ev.truth.push_back(truth(i, u));
      ev.decisions.push_back(det.decisions(i, u));
    }
  }
  ev.magnitudes = output_magnitudes(block_rx);
  return ev;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

template <typename F>
std::string render(F&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

}  // namespace

std::string run_stem(const std::string& policy_id, double snr_db, std::uint64_t seed) {
  std::string p = policy_id;
  std::replace(p.begin(), p.end(), ':', '-');
  return p + "_snr" + short_num(snr_db) + "_seed" + std::to_string(seed);
}

RunResult run_single(const ExperimentConfig& config, const std::string& policy_id, double snr_db,
                     std::uint64_t seed) {
  validate(config);
  const PolicySpec spec = config.policy_spec(policy_id);
  const ReceiverStructure structure = config.receiver_structure();
  const Constellation& constellation = structure.constellation;
  const int pilots = config.resolved_pilots();
  const int info = config.info_count();

  const ChannelTrajectory trajectory = generate_trajectory(
      config.profile, config.channel_shape(), config.blocks, derive_seed(seed, SeedStream::kTrajectory),
      config.base_channel);

  std::unique_ptr<Receiver> receiver = make_receiver(config.receiver, structure, derive_seed(seed, SeedStream::kInit));
  const GroupLayout layout = layout_of(*receiver);
  std::vector<int> everything(static_cast<std::size_t>(layout.group_count()));
  for (int g = 0; g < layout.group_count(); ++g) everything[static_cast<std::size_t>(g)] = g;

  {
    const TransmissionBlock warm =
        make_block(trajectory, 1, constellation, pilots, 0, snr_db, derive_seed(seed, SeedStream::kBootstrap));
    receiver->retrain(everything, warm.pilots_tx, warm.pilots_rx,
                      config.training_options(config.bootstrap_epochs, derive_seed(seed, SeedStream::kBootstrap)));
  }

  Budget budget;
  budget.limit = config.budget;
  TrainingPolicy policy(spec, layout, constellation.size(), budget, config.retrain_timing);

  RunResult result;
  long total_errors = 0;
  long total_symbols = 0;
  long verified = 0;
  const std::string detector_name = spec.is_async() ? std::string(to_string(spec.detector)) : std::string();

  for (int t = 1; t <= config.blocks; ++t) {
    const TransmissionBlock block = make_block(trajectory, t, constellation, pilots, info, snr_db, seed);
    const Matrix full_rx = stack_rows(block.pilots_rx, block.info_rx);

    std::optional<Detection> pilot_detection;
    const EvidenceSource evidence = [&](std::span<const int> users) {
      if (!pilot_detection) pilot_detection = receiver->detect(block.pilots_rx);
      return gather_evidence(*pilot_detection, block.pilots_tx, full_rx, users);
    };

    const BlockDecision decision = policy.decide(t, evidence);
    const RetrainPlan& plan = decision.plan;
    if (!plan.empty()) {
      std::map<ModuleId, std::string> before;
      if (config.verify_ledger) before = receiver->checkpoints();
      receiver->retrain(plan.groups, block.pilots_tx, block.pilots_rx,
                        config.training_options(config.epochs, derive_seed(seed, SeedStream::kTraining,
                                                                           {static_cast<std::uint64_t>(t)})));
      if (config.verify_ledger) verified += changed_parameters(before, receiver->checkpoints());
    }
    policy.commit(plan);

    const Detection det = receiver->detect(full_rx);
    const IndexMatrix decided = det.decisions.bottomRows(info);
    long errors = 0;
    for (Eigen::Index i = 0; i < decided.rows(); ++i)
      for (Eigen::Index u = 0; u < decided.cols(); ++u) errors += decided(i, u) != block.info_tx(i, u) ? 1 : 0;
    const long symbols = static_cast<long>(decided.size());
    total_errors += errors;
    total_symbols += symbols;

    BlockRecord rec;
    rec.block = t;
    rec.errors = errors;
    rec.symbols = symbols;
    rec.ber_inst = static_cast<double>(errors) / static_cast<double>(symbols);
    rec.ber_agg = static_cast<double>(total_errors) / static_cast<double>(total_symbols);
    rec.retrain = !plan.empty();
    for (int g : plan.groups) rec.groups.push_back(g + 1);
    for (const auto& o : decision.outcomes) {
      rec.statistics.push_back(o.outcome.statistic);
      result.events.push_back({t, detector_name + (o.group >= 0 ? "#" + std::to_string(o.group + 1) : ""),
                               o.outcome.statistic, o.outcome.threshold, o.outcome.retrain});
    }
    result.blocks.push_back(std::move(rec));
    result.plans.push_back(plan);
  }

  result.ledger = policy.ledger();
  RunSummary& s = result.summary;
  s.policy = spec.id();
  s.snr_db = snr_db;
  s.seed = seed;
  s.retrains = result.ledger.retrain_events;
  s.modules = result.ledger.modules_retrained;
  s.params = result.ledger.params_retrained;
  s.ratio = compression_ratio(result.ledger, config.blocks, receiver->module_count());
  s.avg_ber = static_cast<double>(total_errors) / static_cast<double>(total_symbols);
  s.detections = result.ledger.detections;
  s.verified_params = config.verify_ledger ? verified : -1;
  s.group_retrains = result.ledger.group_retrains;
  return result;
}

namespace {

std::filesystem::path prepare_output(const ExperimentConfig& config) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_file(dir / "config.used", to_text(config));
  return dir;
}

void write_run_files(const std::filesystem::path& dir, const ExperimentConfig& config, const RunResult& r) {
  const std::string stem = run_stem(r.summary.policy, r.summary.snr_db, r.summary.seed);
  write_file(dir / ("blocks_" + stem + ".csv"), render([&](std::ostream& o) { write_blocks_csv(o, r.blocks); }));
  if (config.write_events && !r.events.empty())
    write_file(dir / ("events_" + stem + ".csv"), render([&](std::ostream& o) { write_event_log(o, r.events); }));
}

}  // namespace

std::vector<RunSummary> run(const ExperimentConfig& config) {
  validate(config);
  const auto dir = prepare_output(config);
  std::vector<RunSummary> out;
  for (std::uint64_t seed : config.seeds) {
    const RunResult r = run_single(config, config.policy, config.snr_db, seed);
    write_run_files(dir, config, r);
    out.push_back(r.summary);
  }
  write_file(dir / "summary.csv", render([&](std::ostream& o) { write_summary_csv(o, out); }));
  return out;
}

std::vector<SweepRow> sweep_snr(const ExperimentConfig& config) {
  validate(config);
  if (config.snr_list.empty()) throw ConfigError("config field 'snr_list': at least one SNR is required");
  const auto dir = prepare_output(config);
  std::vector<SweepRow> rows;
  std::vector<RunSummary> all;
  for (double snr : config.snr_list) {
    SweepRow row;
    row.snr_db = snr;
    for (std::uint64_t seed : config.seeds) {
      const RunResult r = run_single(config, config.policy, snr, seed);
      write_run_files(dir, config, r);
      row.avg_ber += r.summary.avg_ber;
      row.retrains += static_cast<double>(r.summary.retrains);
      all.push_back(r.summary);
    }
    row.avg_ber /= static_cast<double>(config.seeds.size());
    row.retrains /= static_cast<double>(config.seeds.size());
    rows.push_back(row);
  }
  write_file(dir / "summary.csv", render([&](std::ostream& o) { write_summary_csv(o, all); }));
  write_file(dir / "sweep.csv", render([&](std::ostream& o) { write_sweep_csv(o, rows); }));
  return rows;
}

std::vector<CompareRow> compare_policies(const ExperimentConfig& config) {
  validate(config);
  if (config.policies.empty()) throw ConfigError("config field 'policies': at least one policy is required");
  const auto dir = prepare_output(config);
  std::vector<CompareRow> rows;
  std::vector<RunSummary> all;
  for (const auto& id : config.policies) {
    const PolicySpec spec = config.policy_spec(id);
    CompareRow row;
    row.policy = spec.id();
    for (std::uint64_t seed : config.seeds) {
      const RunResult r = run_single(config, id, config.snr_db, seed);
      write_run_files(dir, config, r);
      row.retrains += static_cast<double>(r.summary.retrains);
      row.params += static_cast<double>(r.summary.params);
      row.ratio += r.summary.ratio;
      row.avg_ber += r.summary.avg_ber;
      all.push_back(r.summary);
    }
    const auto n = static_cast<double>(config.seeds.size());
    row.retrains /= n;
    row.params /= n;
    row.ratio /= n;
    row.avg_ber /= n;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", row.retrains);
    row.label = spec.label() + "[" + buf + "]";
    rows.push_back(row);
  }
  write_file(dir / "summary.csv", render([&](std::ostream& o) { write_summary_csv(o, all); }));
  write_file(dir / "compare.csv", render([&](std::ostream& o) { write_compare_csv(o, rows); }));
  return rows;
}

std::vector<double> default_grid(DetectorKind detector) {
  switch (detector) {
    case DetectorKind::kDdm: return {0.5, 1, 2, 3, 4, 6, 8, 12};
    case DetectorKind::kPht: return {5, 10, 20, 50, 100, 200, 500};
    case DetectorKind::kPosterior: return {0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
    case DetectorKind::kHotelling: return {1, 2, 5, 10, 20, 50, 100};
  }
  return {};
}

void set_threshold(ExperimentConfig& config, DetectorKind detector, double lambda) {
  switch (detector) {
    case DetectorKind::kDdm: config.ddm_lambda = lambda; break;
    case DetectorKind::kPht: config.pht_lambda = lambda; break;
    case DetectorKind::kPosterior: config.posterior_lambda = lambda; break;
    case DetectorKind::kHotelling: config.hotelling_lambda = lambda; break;
  }
}

Calibration calibrate(const ExperimentConfig& config) {
  validate(config);
  const PolicySpec spec = parse_policy(config.policy);
  if (!spec.is_async()) throw ConfigError("config field 'policy': calibrate needs an asynchronous policy");
  const auto dir = prepare_output(config);
  const std::vector<double> grid = config.calibrate_grid.empty() ? default_grid(spec.detector) : config.calibrate_grid;

  Calibration out;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    ExperimentConfig c = config;
    set_threshold(c, spec.detector, lambda);
    CalibrateRow row;
    row.lambda = lambda;
    for (std::uint64_t seed : config.seeds) {
      const RunResult r = run_single(c, config.policy, config.snr_db, seed);
      row.retrains += static_cast<double>(r.summary.retrains);
      row.avg_ber += r.summary.avg_ber;
    }
    row.retrains /= static_cast<double>(config.seeds.size());
    row.avg_ber /= static_cast<double>(config.seeds.size());
    const double gap = std::abs(row.retrains - config.calibrate_target);
    if (gap < best_gap) {
      best_gap = gap;
      out.best_lambda = lambda;
    }
    out.grid.push_back(row);
  }
  write_file(dir / "calibrate.csv", render([&](std::ostream& o) { write_calibrate_csv(o, out.grid); }));
  return out;
}

void write_blocks_csv(std::ostream& out, std::span<const BlockRecord> blocks) {
  out << "t,ber_inst,ber_agg,retrain,groups,statistic\n";
  for (const auto& b : blocks) {
    out << b.block << ',' << num(b.ber_inst) << ',' << num(b.ber_agg) << ',' << (b.retrain ? 1 : 0) << ',';
    for (std::size_t i = 0; i < b.groups.size(); ++i) out << (i ? ";" : "") << b.groups[i];
    out << ',';
    for (std::size_t i = 0; i < b.statistics.size(); ++i) out << (i ? ";" : "") << num(b.statistics[i]);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const RunSummary> runs) {
  out << "policy,snr,seed,retrains,params,ratio,avg_ber\n";
  for (const auto& r : runs)
    out << r.policy << ',' << short_num(r.snr_db) << ',' << r.seed << ',' << r.retrains << ',' << r.params << ','
        << num(r.ratio) << ',' << num(r.avg_ber) << '\n';
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "snr,avg_ber,retrains\n";
  for (const auto& r : rows) out << short_num(r.snr_db) << ',' << num(r.avg_ber) << ',' << num(r.retrains) << '\n';
}

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows) {
  out << "policy,label,retrains,params,ratio,avg_ber\n";
  for (const auto& r : rows)
    out << r.policy << ',' << r.label << ',' << num(r.retrains) << ',' << num(r.params) << ',' << num(r.ratio) << ','
        << num(r.avg_ber) << '\n';
}

void write_calibrate_csv(std::ostream& out, std::span<const CalibrateRow> rows) {
  out << "lambda,retrains,avg_ber\n";
  for (const auto& r : rows) out << num(r.lambda) << ',' << num(r.retrains) << ',' << num(r.avg_ber) << '\n';
}

}  // namespace asyncrx
