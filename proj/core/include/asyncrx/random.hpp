// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>

namespace asyncrx {

// Stream identifiers for derive_seed. Every random draw in a run comes from a
// generator seeded through one of these, so adding a consumer never shifts the
// draws of another.
enum class SeedStream : std::uint64_t {
  kTrajectory = 1,
  kPilotSymbols = 2,
  kInfoSymbols = 3,
  kNoise = 4,
  kInit = 5,
  kTraining = 6,
  kBootstrap = 7,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child seed for (base, stream, indices...).
constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream,
                                    std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = mix64(base ^ mix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t i : indices) h = mix64(h ^ (i + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace asyncrx
