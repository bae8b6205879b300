// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Small dense feedforward networks: ReLU hidden layers and one or more softmax
// output heads, trained by plain mini-batch SGD on cross-entropy.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "asyncrx/channel.hpp"

namespace asyncrx {

struct DenseLayer {
  Matrix weight;  ///< out x in
  Vector bias;    ///< out

  bool operator==(const DenseLayer& other) const {
    return weight.rows() == other.weight.rows() && weight.cols() == other.weight.cols() &&
           bias.size() == other.bias.size() && weight == other.weight && bias == other.bias;
  }
};

/// Multi-layer perceptron. The output layer is split into consecutive softmax
/// heads; a plain classifier has a single head covering every output.
class Mlp {
 public:
  Mlp() = default;

  /// All-zero parameters. sizes = {input, hidden..., output}. heads must sum
  /// to the output size; empty means one head.
  explicit Mlp(std::vector<int> sizes, std::vector<int> heads = {});

  /// He-normal weights, zero biases.
  static Mlp random(std::vector<int> sizes, std::vector<int> heads, std::uint64_t seed);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<int>& heads() const { return heads_; }
  int head_count() const { return static_cast<int>(heads_.size()); }
  /// Offset of head h within the output vector.
  int head_offset(int h) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Probabilities for one input, heads concatenated.
  Vector forward(const Vector& x) const;
  /// Row-per-sample version of forward.
  Matrix forward_batch(const Matrix& inputs) const;

  bool operator==(const Mlp& other) const = default;

 private:
  std::vector<int> sizes_;
  std::vector<int> heads_;
  std::vector<DenseLayer> layers_;
};

/// Inputs (n x d_in) with one class label per head (n x heads).
struct LabeledSet {
  Matrix inputs;
  IndexMatrix labels;

  int size() const { return static_cast<int>(inputs.rows()); }
};

/// Throws DimensionError/ConfigError if the set does not fit the network.
void validate(const Mlp& net, const LabeledSet& data);

struct TrainingOptions {
  int epochs = 30;
  double learning_rate = 5e-3;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

/// Mean cross-entropy over samples, summed over heads, in log-sum-exp form.
double cross_entropy(const Mlp& net, const LabeledSet& data);

/// Fraction of (sample, head) pairs whose argmax differs from the label.
double classification_error(const Mlp& net, const LabeledSet& data);

/// Gradient of cross_entropy with respect to every parameter.
std::vector<DenseLayer> backprop(const Mlp& net, const LabeledSet& data);

/// In-place SGD. Shuffle order is fixed by options.seed. Throws TrainingError
/// on a non-finite batch loss.
void fit(Mlp& net, const LabeledSet& data, const TrainingOptions& options);

/// Value-semantics wrapper over fit.
Mlp train(Mlp net, const LabeledSet& data, const TrainingOptions& options);

/// Max over parameters of |g_bp - g_fd| / max(|g_bp| + |g_fd|, floor), with
/// g_fd from central differences at the given step.
double gradient_check(const Mlp& net, const LabeledSet& data, double step = 1e-5,
                      double floor = 1e-8);

/// Text checkpoint: layer-size header, head header, then row-major weights and
/// biases per layer at full precision.
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);
std::string to_checkpoint(const Mlp& net);

}  // namespace asyncrx
