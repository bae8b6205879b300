// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "asyncrx/error.hpp"
#include "asyncrx/random.hpp"

namespace asyncrx {

Constellation::Constellation(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("constellation must be nonempty");
  double energy = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    energy += points_[i] * points_[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (points_[i] == points_[j]) throw ConfigError("constellation points must be distinct");
    }
  }
  energy /= static_cast<double>(points_.size());
  if (std::abs(energy - 1.0) > 1e-9) throw ConfigError("constellation must have unit average energy");
}

Constellation Constellation::bpsk() { return Constellation({+1.0, -1.0}); }

int Constellation::nearest(double value) const {
  int best = 0;
  double best_dist = std::abs(value - points_[0]);
  for (int i = 1; i < size(); ++i) {
    const double d = std::abs(value - points_[static_cast<std::size_t>(i)]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

Matrix Constellation::values(const IndexMatrix& indices) const {
  Matrix out(indices.rows(), indices.cols());
  for (Eigen::Index r = 0; r < indices.rows(); ++r)
    for (Eigen::Index c = 0; c < indices.cols(); ++c) out(r, c) = point(indices(r, c));
  return out;
}

std::vector<double> modulate(std::span<const int> bits) {
  std::vector<double> out;
  out.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw ConfigError("modulate: bits must be 0 or 1");
    out.push_back(b == 0 ? 1.0 : -1.0);
  }
  return out;
}

std::vector<int> demap(std::span<const double> symbols) {
  const Constellation bpsk = Constellation::bpsk();
  std::vector<int> bits;
  bits.reserve(symbols.size());
  for (double s : symbols) bits.push_back(bpsk.nearest(s));
  return bits;
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kSingleUserBursty: return "single_user_bursty";
    case ProfileKind::kMultiUserBursty: return "multi_user_bursty";
    case ProfileKind::kSmoothDrift: return "smooth_drift";
    case ProfileKind::kStatic: return "static";
  }
  return "static";
}

ProfileKind parse_profile_kind(std::string_view name) {
  for (ProfileKind k : {ProfileKind::kSingleUserBursty, ProfileKind::kMultiUserBursty,
                        ProfileKind::kSmoothDrift, ProfileKind::kStatic}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown profile kind '" + std::string(name) + "'");
}

namespace {

Matrix base_state(const ChannelShape& shape, BaseChannel base) {
  Matrix h = Matrix::Zero(shape.rows, shape.cols);
  if (shape.kind == TrajectoryKind::kMimoMatrix) {
    if (base == BaseChannel::kIdentity) {
      if (shape.rows != shape.cols) throw ConfigError("identity channel requires K == N");
      h.setIdentity();
    } else {
      for (int k = 0; k < shape.rows; ++k)
        for (int n = 0; n < shape.cols; ++n) h(k, n) = std::exp(-std::abs(k - n));
    }
  } else {
    if (base == BaseChannel::kIdentity) {
      h(0, 0) = 1.0;
    } else {
      for (int l = 0; l < shape.cols; ++l) h(0, l) = std::exp(-0.2 * l);
    }
  }
  return h;
}

// Odd-numbered jumps fade the row by (1 - s), even-numbered ones boost it by
// (1 + s), so every jump has relative size s and the gain stays bounded.
double jump_gain(double jump_scale, int jump_number) {
  return jump_number % 2 == 1 ? 1.0 - jump_scale : 1.0 + jump_scale;
}

}  // namespace

ChannelTrajectory generate_trajectory(const VariationProfile& profile, const ChannelShape& shape,
                                      int blocks, std::uint64_t seed, BaseChannel base) {
  if (blocks < 1) throw ConfigError("trajectory needs at least one block");
  if (shape.rows < 1 || shape.cols < 1) throw ConfigError("channel shape must be at least 1 x 1");
  if (shape.kind == TrajectoryKind::kSisoTaps && shape.rows != 1)
    throw ConfigError("SISO tap trajectories have exactly one row");
  if (profile.jump_scale < 0.0 || profile.jump_scale > 2.0)
    throw ConfigError("jump_scale must lie in [0, 2]");
  if (profile.drift_rate < 0.0) throw ConfigError("drift_rate must be nonnegative");
  if (profile.drift_period < 1) throw ConfigError("drift_period must be >= 1");
  for (int c : profile.change_blocks) {
    if (c < 1 || c > blocks) throw ConfigError("change block " + std::to_string(c) + " outside [1, T]");
  }
  if (!std::is_sorted(profile.change_blocks.begin(), profile.change_blocks.end()))
    throw ConfigError("change_blocks must be sorted");
  for (int u : profile.affected_users) {
    if (u < 1 || u > shape.rows) throw ConfigError("affected user " + std::to_string(u) + " out of range");
  }

  std::vector<int> rows;
  switch (profile.kind) {
    case ProfileKind::kStatic:
      break;
    case ProfileKind::kSingleUserBursty:
      if (profile.affected_users.size() != 1)
        throw ConfigError("single_user_bursty requires exactly one affected user");
      rows.push_back(profile.affected_users.front() - 1);
      break;
    case ProfileKind::kMultiUserBursty:
    case ProfileKind::kSmoothDrift:
      if (profile.affected_users.empty()) {
        for (int r = 0; r < shape.rows; ++r) rows.push_back(r);
      } else {
        for (int u : profile.affected_users) rows.push_back(u - 1);
      }
      break;
  }
  const bool bursty = profile.kind == ProfileKind::kSingleUserBursty ||
                      profile.kind == ProfileKind::kMultiUserBursty;

  std::mt19937_64 rng(derive_seed(seed, SeedStream::kTrajectory));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  Matrix phase = Matrix::Zero(shape.rows, shape.cols);
  for (int r : rows)
    for (int c = 0; c < shape.cols; ++c) phase(r, c) = phase_dist(rng);

  ChannelTrajectory traj{shape, {}};
  traj.states.reserve(static_cast<std::size_t>(blocks));
  traj.states.push_back(base_state(shape, base));
  const double omega = 2.0 * std::numbers::pi / profile.drift_period;
  int jumps = 0;
  for (int t = 2; t <= blocks; ++t) {
    Matrix h = traj.states.back();
    if (profile.kind != ProfileKind::kStatic && profile.drift_rate > 0.0) {
      for (int r : rows)
        for (int c = 0; c < shape.cols; ++c) h(r, c) += profile.drift_rate * std::sin(omega * t + phase(r, c));
    }
    if (bursty && std::binary_search(profile.change_blocks.begin(), profile.change_blocks.end(), t)) {
      ++jumps;
      for (int r : rows) h.row(r) *= jump_gain(profile.jump_scale, jumps);
    }
    traj.states.push_back(std::move(h));
  }
  return traj;
}

double noise_variance_mimo(const Matrix& channel, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite or +inf");
  const double signal = channel.squaredNorm() / static_cast<double>(channel.cols());
  return signal / std::pow(10.0, snr_db / 10.0);
}

double noise_variance_siso(const Vector& taps, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite or +inf");
  return taps.squaredNorm() / std::pow(10.0, snr_db / 10.0);
}

Matrix transmit_mimo(const Matrix& channel, const Matrix& symbols, double snr_db,
                     std::uint64_t seed) {
  if (symbols.cols() != channel.rows())
    throw DimensionError("transmit_mimo: symbol columns must equal channel rows (users)");
  Matrix y = symbols * channel;
  const double var = noise_variance_mimo(channel, snr_db);
  if (var > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(var));
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index n = 0; n < y.cols(); ++n) y(i, n) += gauss(rng);
  }
  return y;
}

Vector transmit_siso_isi(const Vector& taps, const Vector& symbols, double snr_db,
                         std::uint64_t seed) {
  if (taps.size() < 1) throw DimensionError("transmit_siso_isi: need at least one tap");
  const Eigen::Index len = symbols.size();
  Vector y = Vector::Zero(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < taps.size() && l <= i; ++l) acc += taps(l) * symbols(i - l);
    y(i) = acc;
  }
  const double var = noise_variance_siso(taps, snr_db);
  if (var > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(var));
    for (Eigen::Index i = 0; i < len; ++i) y(i) += gauss(rng);
  }
  return y;
}

TransmissionBlock make_block(const ChannelTrajectory& trajectory, int t,
                             const Constellation& constellation, int pilot_count,
                             int info_count, double snr_db, std::uint64_t seed) {
  if (pilot_count < 1) throw ConfigError("a block needs at least one pilot");
  if (info_count < 0) throw ConfigError("information symbol count must be nonnegative");
  const Matrix& h = trajectory.at_block(t);
  const bool mimo = trajectory.shape.kind == TrajectoryKind::kMimoMatrix;
  const int users = mimo ? trajectory.shape.rows : 1;
  const auto ut = static_cast<std::uint64_t>(t);

  auto draw = [&](SeedStream stream, int count) {
    std::mt19937_64 rng(derive_seed(seed, stream, {ut}));
    std::uniform_int_distribution<int> pick(0, constellation.size() - 1);
    IndexMatrix idx(count, users);
    for (int i = 0; i < count; ++i)
      for (int k = 0; k < users; ++k) idx(i, k) = pick(rng);
    return idx;
  };

  TransmissionBlock block;
  block.block_index = t;
  block.pilots_tx = draw(SeedStream::kPilotSymbols, pilot_count);
  block.info_tx = draw(SeedStream::kInfoSymbols, info_count);

  IndexMatrix all(pilot_count + info_count, users);
  all << block.pilots_tx, block.info_tx;
  const Matrix symbols = constellation.values(all);
  const std::uint64_t noise_seed = derive_seed(seed, SeedStream::kNoise, {ut});

  Matrix rx;
  if (mimo) {
    rx = transmit_mimo(h, symbols, snr_db, noise_seed);
  } else {
    const Vector taps = h.row(0).transpose();
    rx = transmit_siso_isi(taps, symbols.col(0), snr_db, noise_seed);
  }
  block.pilots_rx = rx.topRows(pilot_count);
  block.info_rx = rx.bottomRows(info_count);
  return block;
}

}  // namespace asyncrx
