// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Block-fading channel simulation: constellations, synthetic time-varying
// channel trajectories, and the linear-Gaussian MIMO and finite-memory SISO
// links used by the receivers.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace asyncrx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::MatrixXi;

/// Ordered real symbol alphabet. Index 0 is the symbol that bit 0 maps to.
class Constellation {
 public:
  /// Throws ConfigError unless points are nonempty, distinct and of unit
  /// average energy (within 1e-9).
  explicit Constellation(std::vector<double> points);

  /// The (+1, -1) BPSK alphabet.
  static Constellation bpsk();

  int size() const { return static_cast<int>(points_.size()); }
  double point(int index) const { return points_.at(static_cast<std::size_t>(index)); }
  std::span<const double> points() const { return points_; }

  /// Index of the nearest point; ties go to the lower index.
  int nearest(double value) const;

  /// Maps a matrix of indices to symbol values.
  Matrix values(const IndexMatrix& indices) const;

 private:
  std::vector<double> points_;
};

/// BPSK mapping 0 -> +1, 1 -> -1. Throws ConfigError on a non-binary entry.
std::vector<double> modulate(std::span<const int> bits);

/// Inverse of modulate by nearest-point decision.
std::vector<int> demap(std::span<const double> symbols);

enum class TrajectoryKind { kSisoTaps, kMimoMatrix };

/// Shape of one channel state. MIMO: rows = users K, cols = receive antennas
/// N. SISO: a single row of L taps.
struct ChannelShape {
  TrajectoryKind kind = TrajectoryKind::kMimoMatrix;
  int rows = 4;
  int cols = 4;

  static ChannelShape mimo(int users, int antennas) {
    return {TrajectoryKind::kMimoMatrix, users, antennas};
  }
  static ChannelShape siso(int taps) { return {TrajectoryKind::kSisoTaps, 1, taps}; }

  bool operator==(const ChannelShape&) const = default;
};

/// Starting channel before any variation is applied.
enum class BaseChannel {
  kExponential,  ///< MIMO: exp(-|k-n|); SISO: exp(-0.2 l)
  kIdentity,     ///< MIMO: identity (K == N required); SISO: single unit tap
};

struct ChannelTrajectory {
  ChannelShape shape;
  std::vector<Matrix> states;  ///< states[t-1] is h[t]

  int block_count() const { return static_cast<int>(states.size()); }
  const Matrix& at_block(int t) const { return states.at(static_cast<std::size_t>(t - 1)); }
};

enum class ProfileKind { kSingleUserBursty, kMultiUserBursty, kSmoothDrift, kStatic };

std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view name);

/// Parameterized synthetic variation family. Block and user indices are
/// 1-based.
struct VariationProfile {
  ProfileKind kind = ProfileKind::kStatic;
  std::vector<int> change_blocks;   ///< sorted, each in [1, T]
  double jump_scale = 1.0;          ///< ||h_new - h_old|| / ||h_old|| per affected row, in [0, 2]
  double drift_rate = 0.0;          ///< max per-block per-entry smooth increment
  int drift_period = 25;            ///< blocks per sinusoidal drift cycle
  std::vector<int> affected_users;  ///< empty means "all rows" where allowed
};

/// Deterministic given (profile, shape, T, seed, base).
///
/// Jumps scale an affected row by (1 - jump_scale) on odd-numbered change
/// blocks and by (1 + jump_scale) on even-numbered ones, so the relative
/// change is exactly jump_scale. Smooth drift adds drift_rate * sin(...) to
/// every affected entry on every block after the first. Rows outside the
/// affected set never change.
ChannelTrajectory generate_trajectory(const VariationProfile& profile, const ChannelShape& shape,
                                      int blocks, std::uint64_t seed,
                                      BaseChannel base = BaseChannel::kExponential);

/// Plain-text table: one header line, then one record per block with the
/// block index followed by the row-major state entries.
void write_trajectory(std::ostream& out, const ChannelTrajectory& trajectory);
ChannelTrajectory read_trajectory(std::istream& in);

/// Noise variance that puts the per-antenna average received signal power at
/// snr_db over the noise for unit-energy symbols. Returns 0 for snr_db = +inf.
double noise_variance_mimo(const Matrix& channel, double snr_db);
double noise_variance_siso(const Vector& taps, double snr_db);

/// y_i = H^T s_i + n_i. channel is K x N, symbols is B x K; returns B x N.
/// snr_db = +infinity disables noise.
Matrix transmit_mimo(const Matrix& channel, const Matrix& symbols, double snr_db,
                     std::uint64_t seed);

/// y_i = sum_l taps[l] s_{i-l} + n_i with an all-zero channel memory at the
/// head of the block.
Vector transmit_siso_isi(const Vector& taps, const Vector& symbols, double snr_db,
                         std::uint64_t seed);

/// One coherence block: pilots precede information symbols. Symbols are
/// stored as constellation indices (rows = time, cols = users); outputs as
/// rows = time, cols = antennas (1 for SISO).
struct TransmissionBlock {
  int block_index = 0;
  IndexMatrix pilots_tx;
  IndexMatrix info_tx;
  Matrix pilots_rx;
  Matrix info_rx;

  int pilot_count() const { return static_cast<int>(pilots_tx.rows()); }
  int info_count() const { return static_cast<int>(info_tx.rows()); }
};

/// Draws uniform pilot and information symbols for block t and passes the
/// whole block through h[t]. Symbol draws depend only on (seed, t), so any two
/// callers with the same seed see identical blocks.
TransmissionBlock make_block(const ChannelTrajectory& trajectory, int t,
                             const Constellation& constellation, int pilot_count,
                             int info_count, double snr_db, std::uint64_t seed);

}  // namespace asyncrx
