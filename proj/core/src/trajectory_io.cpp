// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "asyncrx/channel.hpp"
#include "asyncrx/error.hpp"

namespace asyncrx {

namespace {

constexpr std::string_view kMagic = "# asyncrx-trajectory";

std::string_view kind_name(TrajectoryKind kind) {
  return kind == TrajectoryKind::kMimoMatrix ? "mimo_matrix" : "siso_taps";
}

}  // namespace

void write_trajectory(std::ostream& out, const ChannelTrajectory& trajectory) {
  out << kMagic << " kind=" << kind_name(trajectory.shape.kind) << " rows=" << trajectory.shape.rows
      << " cols=" << trajectory.shape.cols << " blocks=" << trajectory.block_count() << '\n';
  out << std::setprecision(17);
  for (int t = 1; t <= trajectory.block_count(); ++t) {
    const Matrix& h = trajectory.at_block(t);
    out << t;
    for (Eigen::Index r = 0; r < h.rows(); ++r)
      for (Eigen::Index c = 0; c < h.cols(); ++c) out << ' ' << h(r, c);
    out << '\n';
  }
}

ChannelTrajectory read_trajectory(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind(kMagic, 0) != 0)
    throw FormatError("trajectory: missing header line");

  std::istringstream hs(header.substr(kMagic.size()));
  std::string field;
  std::string kind;
  int rows = -1, cols = -1, blocks = -1;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw FormatError("trajectory: bad header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "kind") kind = value;
    else if (key == "rows") rows = std::stoi(value);
    else if (key == "cols") cols = std::stoi(value);
    else if (key == "blocks") blocks = std::stoi(value);
  }
  if (rows < 1 || cols < 1 || blocks < 1) throw FormatError("trajectory: incomplete header");

  ChannelTrajectory traj;
  if (kind == "mimo_matrix") traj.shape = ChannelShape::mimo(rows, cols);
  else if (kind == "siso_taps") traj.shape = {TrajectoryKind::kSisoTaps, rows, cols};
  else throw FormatError("trajectory: unknown kind '" + kind + "'");

  for (int t = 1; t <= blocks; ++t) {
    int index = 0;
    if (!(in >> index) || index != t) throw FormatError("trajectory: expected record for block " + std::to_string(t));
    Matrix h(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (!(in >> h(r, c))) throw FormatError("trajectory: short record for block " + std::to_string(t));
    traj.states.push_back(std::move(h));
  }
  return traj;
}

}  // namespace asyncrx
