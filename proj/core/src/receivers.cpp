// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/receivers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "asyncrx/error.hpp"
#include "asyncrx/random.hpp"

namespace asyncrx {

SoftPosterior::SoftPosterior(int slots, int users, int symbols)
    : slots_(slots), users_(users), symbols_(symbols),
      probs_(static_cast<std::size_t>(slots) * static_cast<std::size_t>(users) * static_cast<std::size_t>(symbols), 0.0) {
  if (slots < 0 || users < 1 || symbols < 1) throw DimensionError("posterior dimensions must be positive");
}

Matrix SoftPosterior::user_probs(int user) const {
  Matrix out(slots_, symbols_);
  for (int i = 0; i < slots_; ++i)
    for (int s = 0; s < symbols_; ++s) out(i, s) = at(i, user, s);
  return out;
}

void SoftPosterior::set_user_probs(int user, const Matrix& probs) {
  if (probs.rows() != slots_ || probs.cols() != symbols_) throw DimensionError("posterior: user block shape mismatch");
  for (int i = 0; i < slots_; ++i)
    for (int s = 0; s < symbols_; ++s) at(i, user, s) = probs(i, s);
}

SoftPosterior SoftPosterior::head(int count) const {
  if (count < 0 || count > slots_) throw DimensionError("posterior head: count out of range");
  SoftPosterior out(count, users_, symbols_);
  std::copy_n(probs_.begin(), out.probs_.size(), out.probs_.begin());
  return out;
}

bool SoftPosterior::valid(double tol) const {
  for (int i = 0; i < slots_; ++i)
    for (int k = 0; k < users_; ++k) {
      double sum = 0.0;
      for (int s = 0; s < symbols_; ++s) {
        const double p = at(i, k, s);
        if (!(p >= -tol && p <= 1.0 + tol)) return false;
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) return false;
    }
  return true;
}

IndexMatrix hard_decide(const SoftPosterior& posterior) {
  IndexMatrix out(posterior.slots(), posterior.users());
  for (int i = 0; i < posterior.slots(); ++i)
    for (int k = 0; k < posterior.users(); ++k) {
      int best = 0;
      for (int s = 1; s < posterior.symbols(); ++s)
        if (posterior.at(i, k, s) > posterior.at(i, k, best)) best = s;
      out(i, k) = best;
    }
  return out;
}

std::string_view to_string(ReceiverKind kind) {
  switch (kind) {
    case ReceiverKind::kDeepSic: return "deepsic";
    case ReceiverKind::kViterbiNet: return "viterbinet";
    case ReceiverKind::kFullyConnected: return "fc";
  }
  return "deepsic";
}

ReceiverKind parse_receiver_kind(std::string_view name) {
  for (ReceiverKind k : {ReceiverKind::kDeepSic, ReceiverKind::kViterbiNet, ReceiverKind::kFullyConnected})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown receiver '" + std::string(name) + "'");
}

std::size_t Receiver::parameter_count() const {
  std::size_t n = 0;
  for (int g = 0; g < group_count(); ++g) n += group_parameter_count(g);
  return n;
}

void Receiver::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [id, text] : checkpoints()) {
    std::ofstream out(dir / ("module_u" + std::to_string(id.user) + "_q" + std::to_string(id.iteration) + ".mlp"));
    if (!out) throw FormatError("cannot write checkpoint in " + dir.string());
    out << text;
  }
}

namespace {

void check_pilots(const ReceiverStructure& s, const IndexMatrix& tx, const Matrix& rx) {
  if (tx.rows() < 1) throw ConfigError("retrain: empty pilot set");
  if (tx.rows() != rx.rows()) throw DimensionError("retrain: pilot symbol and output counts differ");
  if (tx.cols() != s.users) throw DimensionError("retrain: pilot symbols must have one column per user");
  if (rx.cols() != s.antennas) throw DimensionError("retrain: pilot outputs must have one column per antenna");
}

void check_rx(const ReceiverStructure& s, const Matrix& rx) {
  if (rx.cols() != s.antennas)
    throw DimensionError("detect: expected " + std::to_string(s.antennas) + " output columns, got " +
                         std::to_string(rx.cols()));
}

void check_structure(const ReceiverStructure& s) {
  if (s.users < 1 || s.antennas < 1 || s.iterations < 1 || s.memory < 1 || s.hidden < 1)
    throw ConfigError("receiver structure entries must be positive");
}

TrainingOptions module_options(const TrainingOptions& base, int flat_index) {
  TrainingOptions opt = base;
  opt.seed = mix64(base.seed ^ static_cast<std::uint64_t>(flat_index));
  return opt;
}

}  // namespace

// ---------------------------------------------------------------- DeepSIC

DeepSicReceiver::DeepSicReceiver(ReceiverStructure structure, std::vector<Mlp> modules)
    : structure_(std::move(structure)), modules_(std::move(modules)) {}

DeepSicReceiver::DeepSicReceiver(ReceiverStructure structure, std::uint64_t init_seed)
    : structure_(std::move(structure)) {
  check_structure(structure_);
  const int k_users = structure_.users;
  const int symbols = structure_.constellation.size();
  for (int q = 1; q <= structure_.iterations; ++q)
    for (int k = 1; k <= k_users; ++k) {
      const int in = structure_.antennas + (q > 1 ? (k_users - 1) * (symbols - 1) : 0);
      const auto flat = static_cast<std::uint64_t>(ModuleId{k, q}.flat(k_users));
      modules_.push_back(Mlp::random({in, structure_.hidden, symbols}, {}, mix64(init_seed ^ flat)));
    }
}

DeepSicReceiver DeepSicReceiver::zeros(ReceiverStructure structure) {
  DeepSicReceiver rx(structure, 0);
  for (auto& m : rx.modules_) m = Mlp(m.sizes(), m.heads());
  return rx;
}

std::size_t DeepSicReceiver::slot(ModuleId id) const {
  if (id.user < 1 || id.user > structure_.users || id.iteration < 1 || id.iteration > structure_.iterations)
    throw ConfigError("module (" + std::to_string(id.user) + ", " + std::to_string(id.iteration) + ") out of range");
  return static_cast<std::size_t>(id.flat(structure_.users) - 1);
}

Mlp& DeepSicReceiver::module(ModuleId id) { return modules_[slot(id)]; }
const Mlp& DeepSicReceiver::module(ModuleId id) const { return modules_[slot(id)]; }

std::size_t DeepSicReceiver::group_parameter_count(int group) const {
  std::size_t n = 0;
  for (ModuleId id : group_modules(group)) n += module(id).parameter_count();
  return n;
}

std::vector<ModuleId> DeepSicReceiver::group_modules(int group) const {
  if (group < 0 || group >= structure_.users) throw ConfigError("group out of range");
  std::vector<ModuleId> ids;
  for (int q = 1; q <= structure_.iterations; ++q) ids.push_back({group + 1, q});
  return ids;
}

Matrix DeepSicReceiver::module_input(const Matrix& rx, const std::vector<Matrix>& previous, int user) const {
  if (previous.empty()) return rx;
  const int free = structure_.constellation.size() - 1;
  Matrix in(rx.rows(), rx.cols() + (structure_.users - 1) * free);
  in.leftCols(rx.cols()) = rx;
  Eigen::Index col = rx.cols();
  for (int j = 0; j < structure_.users; ++j) {
    if (j == user) continue;
    in.middleCols(col, free) = previous[static_cast<std::size_t>(j)].leftCols(free);
    col += free;
  }
  return in;
}

Detection DeepSicReceiver::detect(const Matrix& rx) const {
  check_rx(structure_, rx);
  const int users = structure_.users;
  const int symbols = structure_.constellation.size();
  Detection out;
  std::vector<Matrix> previous;
  for (int q = 1; q <= structure_.iterations; ++q) {
    std::vector<Matrix> current;
    SoftPosterior stage(static_cast<int>(rx.rows()), users, symbols);
    for (int k = 0; k < users; ++k) {
      current.push_back(module({k + 1, q}).forward_batch(module_input(rx, previous, k)));
      stage.set_user_probs(k, current.back());
    }
    out.stages.push_back(std::move(stage));
    previous = std::move(current);
  }
  out.posterior = out.stages.back();
  out.decisions = hard_decide(out.posterior);
  return out;
}

void DeepSicReceiver::retrain_modules(std::span<const ModuleId> plan, const IndexMatrix& pilots_tx,
                                      const Matrix& pilots_rx, const TrainingOptions& options) {
  check_pilots(structure_, pilots_tx, pilots_rx);
  for (ModuleId id : plan) slot(id);
  int last_q = 0;
  for (ModuleId id : plan) last_q = std::max(last_q, id.iteration);

  std::vector<Matrix> previous;
  for (int q = 1; q <= last_q; ++q) {
    for (int k = 0; k < structure_.users; ++k) {
      const ModuleId id{k + 1, q};
      if (std::find(plan.begin(), plan.end(), id) == plan.end()) continue;
      LabeledSet data{module_input(pilots_rx, previous, k), pilots_tx.col(k)};
      fit(module(id), data, module_options(options, id.flat(structure_.users)));
    }
    if (q == last_q) break;
    std::vector<Matrix> current;
    for (int k = 0; k < structure_.users; ++k)
      current.push_back(module({k + 1, q}).forward_batch(module_input(pilots_rx, previous, k)));
    previous = std::move(current);
  }
}

void DeepSicReceiver::retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
                              const TrainingOptions& options) {
  std::vector<ModuleId> plan;
  for (int g : groups)
    for (ModuleId id : group_modules(g)) plan.push_back(id);
  retrain_modules(plan, pilots_tx, pilots_rx, options);
}

std::map<ModuleId, std::string> DeepSicReceiver::checkpoints() const {
  std::map<ModuleId, std::string> out;
  for (int q = 1; q <= structure_.iterations; ++q)
    for (int k = 1; k <= structure_.users; ++k) out.emplace(ModuleId{k, q}, to_checkpoint(module({k, q})));
  return out;
}

// ---------------------------------------------------------- fully connected

FcReceiver::FcReceiver(ReceiverStructure structure, Mlp net) : structure_(std::move(structure)), net_(std::move(net)) {}

FcReceiver::FcReceiver(ReceiverStructure structure, std::uint64_t init_seed) : structure_(std::move(structure)) {
  check_structure(structure_);
  const int symbols = structure_.constellation.size();
  net_ = Mlp::random({structure_.antennas, structure_.hidden, structure_.users * symbols},
                     std::vector<int>(static_cast<std::size_t>(structure_.users), symbols), init_seed);
}

FcReceiver FcReceiver::zeros(ReceiverStructure structure) {
  FcReceiver rx(structure, 0);
  rx.net_ = Mlp(rx.net_.sizes(), rx.net_.heads());
  return rx;
}

std::vector<int> FcReceiver::group_users(int) const {
  std::vector<int> users;
  for (int k = 0; k < structure_.users; ++k) users.push_back(k);
  return users;
}

Detection FcReceiver::detect(const Matrix& rx) const {
  check_rx(structure_, rx);
  const int symbols = structure_.constellation.size();
  const Matrix probs = net_.forward_batch(rx);
  Detection out;
  out.posterior = SoftPosterior(static_cast<int>(rx.rows()), structure_.users, symbols);
  for (int k = 0; k < structure_.users; ++k) out.posterior.set_user_probs(k, probs.middleCols(k * symbols, symbols));
  out.decisions = hard_decide(out.posterior);
  return out;
}

void FcReceiver::retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
                         const TrainingOptions& options) {
  check_pilots(structure_, pilots_tx, pilots_rx);
  if (groups.empty()) return;
  for (int g : groups)
    if (g != 0) throw ConfigError("fully connected receiver has a single group");
  fit(net_, LabeledSet{pilots_rx, pilots_tx}, module_options(options, 1));
}

std::map<ModuleId, std::string> FcReceiver::checkpoints() const { return {{ModuleId{1, 1}, to_checkpoint(net_)}}; }

// --------------------------------------------------------------- ViterbiNet

ViterbiNetReceiver::ViterbiNetReceiver(ReceiverStructure structure, std::uint64_t init_seed)
    : structure_(std::move(structure)) {
  check_structure(structure_);
  if (structure_.users != 1 || structure_.antennas != 1) throw ConfigError("ViterbiNet is a SISO receiver");
  net_ = Mlp::random({1, structure_.hidden, state_count()}, {}, init_seed);
}

std::vector<int> ViterbiNetReceiver::state_labels(std::span<const int> symbols, int alphabet, int memory) {
  std::vector<int> labels;
  const auto n = static_cast<int>(symbols.size());
  for (int i = memory - 1; i < n; ++i) {
    int state = 0;
    int weight = 1;
    for (int l = 0; l < memory; ++l) {
      state += symbols[static_cast<std::size_t>(i - l)] * weight;
      weight *= alphabet;
    }
    labels.push_back(state);
  }
  return labels;
}

Detection ViterbiNetReceiver::detect(const Matrix& rx) const {
  check_rx(structure_, rx);
  const int symbols = structure_.constellation.size();
  const int states = state_count();
  const Matrix probs = net_.forward_batch(rx);
  const double log_states = std::log(static_cast<double>(states));
  const Matrix ll = probs.unaryExpr([&](double p) { return std::log(std::max(p, 1e-12)) + log_states; });
  const TrellisOutput trellis = viterbi_decode(ll, symbols, structure_.memory);

  Detection out;
  out.posterior = SoftPosterior(static_cast<int>(rx.rows()), 1, symbols);
  out.posterior.set_user_probs(0, trellis.symbol_posteriors);
  out.decisions.resize(rx.rows(), 1);
  for (Eigen::Index i = 0; i < rx.rows(); ++i) out.decisions(i, 0) = trellis.path[static_cast<std::size_t>(i)];
  return out;
}

void ViterbiNetReceiver::retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
                                 const TrainingOptions& options) {
  check_pilots(structure_, pilots_tx, pilots_rx);
  if (groups.empty()) return;
  for (int g : groups)
    if (g != 0) throw ConfigError("ViterbiNet has a single group");
  const int memory = structure_.memory;
  if (pilots_tx.rows() < memory) throw ConfigError("retrain: fewer pilots than channel memory");
  std::vector<int> symbols(pilots_tx.col(0).data(), pilots_tx.col(0).data() + pilots_tx.rows());
  const std::vector<int> labels = state_labels(symbols, structure_.constellation.size(), memory);
  LabeledSet data;
  data.inputs = pilots_rx.bottomRows(static_cast<Eigen::Index>(labels.size()));
  data.labels = Eigen::Map<const IndexMatrix>(labels.data(), static_cast<Eigen::Index>(labels.size()), 1);
  fit(net_, data, module_options(options, 1));
}

std::map<ModuleId, std::string> ViterbiNetReceiver::checkpoints() const {
  return {{ModuleId{1, 1}, to_checkpoint(net_)}};
}

std::unique_ptr<Receiver> make_receiver(ReceiverKind kind, const ReceiverStructure& structure,
                                        std::uint64_t init_seed) {
  switch (kind) {
    case ReceiverKind::kDeepSic: return std::make_unique<DeepSicReceiver>(structure, init_seed);
    case ReceiverKind::kViterbiNet: return std::make_unique<ViterbiNetReceiver>(structure, init_seed);
    case ReceiverKind::kFullyConnected: return std::make_unique<FcReceiver>(structure, init_seed);
  }
  throw ConfigError("unknown receiver kind");
}

}  // namespace asyncrx
