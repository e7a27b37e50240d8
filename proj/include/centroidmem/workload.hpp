// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "centroidmem/trace.hpp"

namespace cmem {

/// Knobs for the synthetic workload. The defaults follow the measured shape
/// of real heaps: a bimodal size distribution where the overwhelming share of
/// objects is small (under 1 KiB) and short-lived while a handful of large
/// long-lived objects dominates the footprint. The lifetime and access-rate
/// parameters are synthetic defaults, not measurements.
struct WorkloadParams {
  std::uint64_t events = 10'000;
  double p_small = 0.99;
  std::uint64_t small_min = 16;               // inclusive
  std::uint64_t small_max = 1024;             // exclusive
  std::uint64_t large_min = 64ull << 10;      // inclusive
  std::uint64_t large_max = 16ull << 20;      // exclusive
  double p_free_small = 0.95;                 // freed once its accesses run out
  double p_free_large = 0.2;
  std::uint32_t small_access_limit = 8;       // accesses sampled per small object
  std::uint32_t large_access_limit = 64;
  double alloc_share = 0.3;                   // chance a step allocates vs touches
  // Violation injection rates, applied by inject() after generation.
  double spatial_rate = 0.0;
  double temporal_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

/// Deterministic benign trace: same params, byte-identical output. Sizes are
/// drawn log-uniformly (uniform octave, then uniform within it); small
/// objects allocate at user level, large ones at system level.
Trace generate(const WorkloadParams& params);

/// Copies the trace, inserting labeled violations: spatial ones access at
/// offset >= object size (alternating between within-slot slack and past the
/// slot), temporal ones touch an object right after its free. Existing
/// events keep their labels; everything is resequenced.
Trace inject(const Trace& base, double spatial_rate, double temporal_rate, std::uint64_t seed);

}  // namespace cmem
