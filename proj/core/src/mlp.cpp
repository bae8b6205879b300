// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "asyncrx/error.hpp"

namespace asyncrx {

Mlp::Mlp(std::vector<int> sizes, std::vector<int> heads)
    : sizes_(std::move(sizes)), heads_(std::move(heads)) {
  if (sizes_.size() < 2) throw ConfigError("mlp needs an input and an output size");
  for (int s : sizes_)
    if (s < 1) throw ConfigError("mlp layer sizes must be positive");
  if (heads_.empty()) heads_.push_back(sizes_.back());
  if (std::accumulate(heads_.begin(), heads_.end(), 0) != sizes_.back())
    throw ConfigError("mlp head sizes must sum to the output size");
  for (int h : heads_)
    if (h < 1) throw ConfigError("mlp head sizes must be positive");
  for (std::size_t l = 1; l < sizes_.size(); ++l)
    layers_.push_back({Matrix::Zero(sizes_[l], sizes_[l - 1]), Vector::Zero(sizes_[l])});
}

Mlp Mlp::random(std::vector<int> sizes, std::vector<int> heads, std::uint64_t seed) {
  Mlp net(std::move(sizes), std::move(heads));
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers_) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(layer.weight.cols())));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = gauss(rng);
  }
  return net;
}

int Mlp::head_offset(int h) const {
  return std::accumulate(heads_.begin(), heads_.begin() + h, 0);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

bool Mlp::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

namespace {

// Row-wise softmax per head, in place on logits. Also returns per-row
// log-sum-exp per head when lse != nullptr.
void softmax_heads(const std::vector<int>& heads, Matrix& logits, Matrix* lse) {
  if (lse) lse->resize(logits.rows(), static_cast<Eigen::Index>(heads.size()));
  int offset = 0;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    auto block = logits.middleCols(offset, heads[h]);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const double mx = block.row(i).maxCoeff();
      block.row(i) = (block.row(i).array() - mx).exp().matrix();
      const double sum = block.row(i).sum();
      block.row(i) /= sum;
      if (lse) (*lse)(i, static_cast<Eigen::Index>(h)) = mx + std::log(sum);
    }
    offset += heads[h];
  }
}

struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // post[0] = inputs, post[l] = activation of layer l
  Matrix lse;
};

ForwardCache run_forward(const Mlp& net, const Matrix& inputs) {
  ForwardCache cache;
  const auto& layers = net.layers();
  cache.post.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = cache.post.back() * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    cache.pre.push_back(z);
    if (l + 1 < layers.size()) {
      cache.post.push_back(z.cwiseMax(0.0));
    } else {
      softmax_heads(net.heads(), z, &cache.lse);
      cache.post.push_back(std::move(z));
    }
  }
  return cache;
}

double loss_from_cache(const Mlp& net, const ForwardCache& cache, const IndexMatrix& labels) {
  const Matrix& logits = cache.pre.back();
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (int h = 0; h < net.head_count(); ++h) {
      const int col = net.head_offset(h) + labels(i, h);
      total += cache.lse(i, h) - logits(i, col);
    }
  }
  return total / static_cast<double>(logits.rows());
}

std::vector<DenseLayer> gradients_from_cache(const Mlp& net, const ForwardCache& cache,
                                             const IndexMatrix& labels) {
  const auto& layers = net.layers();
  const auto n = static_cast<double>(labels.rows());
  Matrix delta = cache.post.back();
  for (Eigen::Index i = 0; i < delta.rows(); ++i)
    for (int h = 0; h < net.head_count(); ++h) delta(i, net.head_offset(h) + labels(i, h)) -= 1.0;
  delta /= n;

  std::vector<DenseLayer> grads(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weight = delta.transpose() * cache.post[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix back = delta * layers[l].weight;
      delta = back.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

}  // namespace

Vector Mlp::forward(const Vector& x) const {
  if (x.size() != input_dim())
    throw DimensionError("mlp forward: input has dimension " + std::to_string(x.size()) +
                         ", expected " + std::to_string(input_dim()));
  return forward_batch(x.transpose()).row(0).transpose();
}

Matrix Mlp::forward_batch(const Matrix& inputs) const {
  if (inputs.cols() != input_dim())
    throw DimensionError("mlp forward: input has dimension " + std::to_string(inputs.cols()) +
                         ", expected " + std::to_string(input_dim()));
  Matrix a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = a * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      softmax_heads(heads_, z, nullptr);
      a = std::move(z);
    }
  }
  return a;
}

void validate(const Mlp& net, const LabeledSet& data) {
  if (data.size() < 1) throw ConfigError("labeled set is empty");
  if (data.inputs.cols() != net.input_dim())
    throw DimensionError("labeled set input dimension " + std::to_string(data.inputs.cols()) +
                         " does not match network input " + std::to_string(net.input_dim()));
  if (data.labels.rows() != data.inputs.rows() || data.labels.cols() != net.head_count())
    throw DimensionError("labeled set needs one label per sample per head");
  for (Eigen::Index i = 0; i < data.labels.rows(); ++i)
    for (int h = 0; h < net.head_count(); ++h) {
      const int y = data.labels(i, h);
      if (y < 0 || y >= net.heads()[static_cast<std::size_t>(h)])
        throw ConfigError("label " + std::to_string(y) + " out of range for head " + std::to_string(h));
    }
}

double cross_entropy(const Mlp& net, const LabeledSet& data) {
  validate(net, data);
  return loss_from_cache(net, run_forward(net, data.inputs), data.labels);
}

double classification_error(const Mlp& net, const LabeledSet& data) {
  validate(net, data);
  const Matrix probs = net.forward_batch(data.inputs);
  long wrong = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (int h = 0; h < net.head_count(); ++h) {
      Eigen::Index best = 0;
      probs.row(i).segment(net.head_offset(h), net.heads()[static_cast<std::size_t>(h)]).maxCoeff(&best);
      if (best != data.labels(i, h)) ++wrong;
    }
  return static_cast<double>(wrong) / static_cast<double>(probs.rows() * net.head_count());
}

std::vector<DenseLayer> backprop(const Mlp& net, const LabeledSet& data) {
  validate(net, data);
  return gradients_from_cache(net, run_forward(net, data.inputs), data.labels);
}

void fit(Mlp& net, const LabeledSet& data, const TrainingOptions& options) {
  validate(net, data);
  if (options.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(options.learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (options.batch_size < 1) throw ConfigError("batch size must be >= 1");

  const int n = data.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);

  Matrix batch_inputs;
  IndexMatrix batch_labels;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += options.batch_size) {
      const int count = std::min(options.batch_size, n - start);
      batch_inputs.resize(count, data.inputs.cols());
      batch_labels.resize(count, data.labels.cols());
      for (int j = 0; j < count; ++j) {
        const int src = order[static_cast<std::size_t>(start + j)];
        batch_inputs.row(j) = data.inputs.row(src);
        batch_labels.row(j) = data.labels.row(src);
      }
      const ForwardCache cache = run_forward(net, batch_inputs);
      const double loss = loss_from_cache(net, cache, batch_labels);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch offset " +
                            std::to_string(start) + " (learning rate " +
                            std::to_string(options.learning_rate) + ")");
      }
      if (options.learning_rate == 0.0) continue;
      const auto grads = gradients_from_cache(net, cache, batch_labels);
      for (std::size_t l = 0; l < grads.size(); ++l) {
        net.layers()[l].weight.noalias() -= options.learning_rate * grads[l].weight;
        net.layers()[l].bias.noalias() -= options.learning_rate * grads[l].bias;
      }
    }
  }
}

Mlp train(Mlp net, const LabeledSet& data, const TrainingOptions& options) {
  fit(net, data, options);
  return net;
}

double gradient_check(const Mlp& net, const LabeledSet& data, double step, double floor) {
  const auto analytic = backprop(net, data);
  Mlp probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + step;
    const double up = cross_entropy(probe, data);
    param = saved - step;
    const double down = cross_entropy(probe, data);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = std::abs(grad - numeric) / std::max(std::abs(grad) + std::abs(numeric), floor);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) check(layer.weight(r, c), analytic[l].weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) check(layer.bias(r), analytic[l].bias(r));
  }
  return worst;
}

void save_mlp(std::ostream& out, const Mlp& net) {
  out << "asyncrx-mlp 1\nlayers " << net.sizes().size();
  for (int s : net.sizes()) out << ' ' << s;
  out << "\nheads " << net.heads().size();
  for (int h : net.heads()) out << ' ' << h;
  out << '\n' << std::setprecision(17);
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) out << (c ? " " : "") << layer.weight(r, c);
      out << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out << (r ? " " : "") << layer.bias(r);
    out << '\n';
  }
}

Mlp load_mlp(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "asyncrx-mlp" || version != 1)
    throw FormatError("mlp checkpoint: bad magic");
  auto read_list = [&](const char* name) {
    std::string key;
    std::size_t count = 0;
    if (!(in >> key >> count) || key != name) throw FormatError(std::string("mlp checkpoint: missing ") + name);
    std::vector<int> values(count);
    for (auto& v : values)
      if (!(in >> v)) throw FormatError(std::string("mlp checkpoint: short ") + name + " list");
    return values;
  };
  std::vector<int> sizes = read_list("layers");
  std::vector<int> heads = read_list("heads");
  Mlp net(std::move(sizes), std::move(heads));
  for (auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        if (!(in >> layer.weight(r, c))) throw FormatError("mlp checkpoint: truncated weights");
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      if (!(in >> layer.bias(r))) throw FormatError("mlp checkpoint: truncated biases");
  }
  return net;
}

std::string to_checkpoint(const Mlp& net) {
  std::ostringstream out;
  save_mlp(out, net);
  return out.str();
}

}  // namespace asyncrx
