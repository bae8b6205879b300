// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "asyncrx/error.hpp"
#include "asyncrx/receivers.hpp"

namespace asyncrx {

int trellis_state_count(int symbols, int memory) {
  if (symbols < 1 || memory < 1) throw ConfigError("trellis needs |S| >= 1 and L >= 1");
  int count = 1;
  for (int l = 0; l < memory; ++l) count *= symbols;
  return count;
}

TrellisOutput viterbi_decode(const Matrix& log_likelihoods, int symbols, int memory) {
  const int states = trellis_state_count(symbols, memory);
  const auto slots = static_cast<int>(log_likelihoods.rows());
  if (log_likelihoods.cols() != states)
    throw DimensionError("viterbi: expected " + std::to_string(states) + " state columns");
  if (slots < memory)
    throw DimensionError("viterbi: block of " + std::to_string(slots) + " slots is shorter than memory " +
                         std::to_string(memory));

  const int shift = states / symbols;  // |S|^(L-1)
  TrellisOutput out;
  out.symbol_posteriors = Matrix::Zero(slots, symbols);
  out.path.assign(static_cast<std::size_t>(slots), 0);

  std::vector<int> back(static_cast<std::size_t>(slots) * static_cast<std::size_t>(states), 0);
  Vector metric = -log_likelihoods.row(0).transpose();
  Vector next(states);

  auto emit_posterior = [&](int i) {
    const double best = metric.minCoeff();
    for (int x = 0; x < states; ++x) out.symbol_posteriors(i, x % symbols) += std::exp(best - metric(x));
    out.symbol_posteriors.row(i) /= out.symbol_posteriors.row(i).sum();
  };
  emit_posterior(0);

  for (int i = 1; i < slots; ++i) {
    for (int x = 0; x < states; ++x) {
      const int base = x / symbols;
      double best = std::numeric_limits<double>::infinity();
      int arg = base;
      for (int j = 0; j < symbols; ++j) {
        const int prev = base + j * shift;
        if (metric(prev) < best) {
          best = metric(prev);
          arg = prev;
        }
      }
      next(x) = best - log_likelihoods(i, x);
      back[static_cast<std::size_t>(i) * static_cast<std::size_t>(states) + static_cast<std::size_t>(x)] = arg;
    }
    // Keep metrics near zero; only differences matter.
    metric = next.array() - next.minCoeff();
    emit_posterior(i);
  }

  Eigen::Index last = 0;
  metric.minCoeff(&last);
  int state = static_cast<int>(last);
  for (int i = slots - 1; i >= 0; --i) {
    out.path[static_cast<std::size_t>(i)] = state % symbols;
    if (i > 0) state = back[static_cast<std::size_t>(i) * static_cast<std::size_t>(states) + static_cast<std::size_t>(state)];
  }
  return out;
}

}  // namespace asyncrx
