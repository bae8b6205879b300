// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Soft-output deep receivers behind one interface: produce per-symbol
// posteriors for a received block, and retrain a chosen subset of module
// groups on pilots.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asyncrx/channel.hpp"
#include "asyncrx/mlp.hpp"

namespace asyncrx {

/// Per time slot, per user distribution over the constellation.
class SoftPosterior {
 public:
  SoftPosterior() = default;
  SoftPosterior(int slots, int users, int symbols);

  int slots() const { return slots_; }
  int users() const { return users_; }
  int symbols() const { return symbols_; }

  double& at(int slot, int user, int symbol) { return probs_[index(slot, user, symbol)]; }
  double at(int slot, int user, int symbol) const { return probs_[index(slot, user, symbol)]; }

  /// slots x symbols view of one user, copied.
  Matrix user_probs(int user) const;
  void set_user_probs(int user, const Matrix& probs);

  /// First `count` slots only.
  SoftPosterior head(int count) const;

  /// Every entry in [0, 1] and every row sums to 1 within tol.
  bool valid(double tol = 1e-9) const;

 private:
  std::size_t index(int slot, int user, int symbol) const {
    return (static_cast<std::size_t>(slot) * static_cast<std::size_t>(users_) + static_cast<std::size_t>(user)) *
               static_cast<std::size_t>(symbols_) +
           static_cast<std::size_t>(symbol);
  }

  int slots_ = 0;
  int users_ = 0;
  int symbols_ = 0;
  std::vector<double> probs_;
};

/// Per-slot argmax, ties toward the lowest constellation index.
IndexMatrix hard_decide(const SoftPosterior& posterior);

/// DeepSIC module coordinate, 1-based.
struct ModuleId {
  int user = 1;
  int iteration = 1;

  /// Flat index m in [1, K*Q]: iteration-major.
  int flat(int users) const { return (iteration - 1) * users + user; }
  auto operator<=>(const ModuleId&) const = default;
};

struct Detection {
  SoftPosterior posterior;             ///< final output
  IndexMatrix decisions;               ///< slots x users constellation indices
  std::vector<SoftPosterior> stages;   ///< per-iteration outputs (DeepSIC only)
};

enum class ReceiverKind { kDeepSic, kViterbiNet, kFullyConnected };

std::string_view to_string(ReceiverKind kind);
ReceiverKind parse_receiver_kind(std::string_view name);

struct ReceiverStructure {
  int users = 4;        ///< K (1 for SISO)
  int antennas = 4;     ///< N (1 for SISO)
  int iterations = 3;   ///< Q, DeepSIC only
  int memory = 4;       ///< L, ViterbiNet only
  int hidden = 64;
  Constellation constellation = Constellation::bpsk();
};

/// Common receiver interface. A module group is the smallest unit the
/// training policy schedules; group g covers the users in group_users(g).
class Receiver {
 public:
  virtual ~Receiver() = default;

  virtual ReceiverKind kind() const = 0;
  virtual const ReceiverStructure& structure() const = 0;

  virtual int group_count() const = 0;
  virtual std::vector<int> group_users(int group) const = 0;
  /// Number of trainable modules M.
  virtual int module_count() const = 0;
  virtual int group_module_count(int group) const = 0;
  virtual std::size_t group_parameter_count(int group) const = 0;
  std::size_t parameter_count() const;

  /// rx has one row per time slot and one column per antenna.
  virtual Detection detect(const Matrix& rx) const = 0;

  /// Trains the listed groups on the pilots. Groups not listed keep
  /// bit-identical parameters. Throws ConfigError on an empty pilot set.
  virtual void retrain(std::span<const int> groups, const IndexMatrix& pilots_tx,
                       const Matrix& pilots_rx, const TrainingOptions& options) = 0;

  /// Serialized modules keyed by (user, iteration).
  virtual std::map<ModuleId, std::string> checkpoints() const = 0;
  /// Modules belonging to a group.
  virtual std::vector<ModuleId> group_modules(int group) const = 0;

  virtual std::unique_ptr<Receiver> clone() const = 0;

  /// One file per module, named module_u<k>_q<q>.mlp.
  void save(const std::filesystem::path& dir) const;
};

/// Soft interference cancellation unfolded into K*Q classifier modules.
/// Module (k, 1) sees y; module (k, q > 1) sees y followed by the first
/// |S|-1 probabilities of every other user from iteration q-1.
class DeepSicReceiver final : public Receiver {
 public:
  DeepSicReceiver(ReceiverStructure structure, std::uint64_t init_seed);
  /// Zero-initialized modules.
  static DeepSicReceiver zeros(ReceiverStructure structure);

  ReceiverKind kind() const override { return ReceiverKind::kDeepSic; }
  const ReceiverStructure& structure() const override { return structure_; }
  int group_count() const override { return structure_.users; }
  std::vector<int> group_users(int group) const override { return {group}; }
  int module_count() const override { return structure_.users * structure_.iterations; }
  int group_module_count(int) const override { return structure_.iterations; }
  std::size_t group_parameter_count(int group) const override;

  Detection detect(const Matrix& rx) const override;
  void retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
               const TrainingOptions& options) override;

  /// Sequential per-module training by increasing iteration. Modules outside
  /// `plan` are untouched.
  void retrain_modules(std::span<const ModuleId> plan, const IndexMatrix& pilots_tx,
                       const Matrix& pilots_rx, const TrainingOptions& options);

  std::map<ModuleId, std::string> checkpoints() const override;
  std::vector<ModuleId> group_modules(int group) const override;
  std::unique_ptr<Receiver> clone() const override { return std::make_unique<DeepSicReceiver>(*this); }

  Mlp& module(ModuleId id);
  const Mlp& module(ModuleId id) const;

 private:
  DeepSicReceiver(ReceiverStructure structure, std::vector<Mlp> modules);
  std::size_t slot(ModuleId id) const;
  Matrix module_input(const Matrix& rx, const std::vector<Matrix>& previous, int user) const;

  ReceiverStructure structure_;
  std::vector<Mlp> modules_;  // iteration-major, user-minor
};

/// Monolithic MLP with K softmax heads over a shared hidden layer. M = 1.
class FcReceiver final : public Receiver {
 public:
  FcReceiver(ReceiverStructure structure, std::uint64_t init_seed);
  static FcReceiver zeros(ReceiverStructure structure);

  ReceiverKind kind() const override { return ReceiverKind::kFullyConnected; }
  const ReceiverStructure& structure() const override { return structure_; }
  int group_count() const override { return 1; }
  std::vector<int> group_users(int) const override;
  int module_count() const override { return 1; }
  int group_module_count(int) const override { return 1; }
  std::size_t group_parameter_count(int) const override { return net_.parameter_count(); }

  Detection detect(const Matrix& rx) const override;
  void retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
               const TrainingOptions& options) override;
  std::map<ModuleId, std::string> checkpoints() const override;
  std::vector<ModuleId> group_modules(int) const override { return {ModuleId{1, 1}}; }
  std::unique_ptr<Receiver> clone() const override { return std::make_unique<FcReceiver>(*this); }

  Mlp& network() { return net_; }
  const Mlp& network() const { return net_; }

 private:
  FcReceiver(ReceiverStructure structure, Mlp net);

  ReceiverStructure structure_;
  Mlp net_;
};

struct TrellisOutput {
  Matrix symbol_posteriors;  ///< slots x |S|
  std::vector<int> path;     ///< constellation index per slot
};

/// Trellis state for memory L: sum_l c_{i-l} |S|^l, so the current symbol is
/// state % |S|.
int trellis_state_count(int symbols, int memory);

/// Viterbi over the |S|^L state trellis. log_likelihoods is slots x states.
/// Posteriors come from the normalized forward path metrics, marginalized to
/// the current symbol. Any start state is allowed. Throws DimensionError when
/// there are fewer slots than the memory.
TrellisOutput viterbi_decode(const Matrix& log_likelihoods, int symbols, int memory);

/// Learned Viterbi equalizer: an MLP maps each scalar output to a posterior
/// over the |S|^L channel states; dividing by the uniform state prior gives
/// the likelihood proxy fed to viterbi_decode.
class ViterbiNetReceiver final : public Receiver {
 public:
  ViterbiNetReceiver(ReceiverStructure structure, std::uint64_t init_seed);

  ReceiverKind kind() const override { return ReceiverKind::kViterbiNet; }
  const ReceiverStructure& structure() const override { return structure_; }
  int group_count() const override { return 1; }
  std::vector<int> group_users(int) const override { return {0}; }
  int module_count() const override { return 1; }
  int group_module_count(int) const override { return 1; }
  std::size_t group_parameter_count(int) const override { return net_.parameter_count(); }

  int state_count() const { return trellis_state_count(structure_.constellation.size(), structure_.memory); }

  Detection detect(const Matrix& rx) const override;
  void retrain(std::span<const int> groups, const IndexMatrix& pilots_tx, const Matrix& pilots_rx,
               const TrainingOptions& options) override;
  std::map<ModuleId, std::string> checkpoints() const override;
  std::vector<ModuleId> group_modules(int) const override { return {ModuleId{1, 1}}; }
  std::unique_ptr<Receiver> clone() const override { return std::make_unique<ViterbiNetReceiver>(*this); }

  /// State label for each slot i >= L-1 of a known symbol sequence.
  static std::vector<int> state_labels(std::span<const int> symbols, int alphabet, int memory);

  Mlp& network() { return net_; }
  const Mlp& network() const { return net_; }

 private:
  ReceiverStructure structure_;
  Mlp net_;
};

std::unique_ptr<Receiver> make_receiver(ReceiverKind kind, const ReceiverStructure& structure,
                                        std::uint64_t init_seed);

}  // namespace asyncrx
