// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "centroidmem/alloc_sim.hpp"
#include "centroidmem/descriptor_store.hpp"
#include "centroidmem/dgu.hpp"
#include "centroidmem/multilevel.hpp"
#include "centroidmem/trace.hpp"

namespace cmem {

struct ReplayConfig {
  AllocatorConfig allocator{};
  StoreConfig store{};
  DguConfig dgu{};
  /// Force every allocation into one bounds back-end, ignoring size policy
  /// and per-event overrides (the compare command replays a trace once per
  /// back-end this way).
  std::optional<PtrMode> force_mode;
  /// When set, system-level allocations become page-granular parents and
  /// every issued access performs a parent-descriptor lookup under this
  /// scheme.
  std::optional<ParentScheme> parent_scheme;
};

struct FaultRecord {
  std::uint64_t seq = 0;
  FaultKind kind = FaultKind::MalformedTag;
  std::uint64_t word = 0;
  LinearAddress effective_address = 0;
  std::string detail;
};

struct DetectionStats {
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  std::uint64_t true_negatives = 0;
  std::uint64_t labeled = 0;

  /// 1.0 with no false positives (vacuously perfect on a benign trace);
  /// undefined before any labeled event was checked.
  std::optional<double> precision() const;
  /// Undefined when the trace contains no labeled violations.
  std::optional<double> recall() const;
};

inline constexpr std::size_t kFaultKindCount = 6;

struct Report {
  std::uint64_t allocs = 0;
  std::uint64_t frees = 0;
  std::uint64_t attempted_accesses = 0;
  std::uint64_t issued_accesses = 0;
  std::array<std::uint64_t, kFaultKindCount> faults_by_kind{};
  DetectionStats detection;
  CacheStats descriptor_cache;
  CacheStats range_cache;
  std::uint64_t table_lookups = 0;
  FragmentationReport fragmentation;
  std::uint64_t aligned_objects = 0;
  std::uint64_t centroid_objects = 0;
  std::optional<ParentScheme> scheme;
  SchemeCounters scheme_counters;
  std::vector<FaultRecord> fault_log;
  // Echo of the policy knobs that shaped this run.
  std::uint64_t mode_threshold = 0;
  bool reuse = false;
  bool aligned_liveness = false;
  bool allow_one_past_arith = false;
  std::optional<PtrMode> force_mode;

  std::uint64_t fault_count(FaultKind kind) const {
    return faults_by_kind[static_cast<std::size_t>(kind)];
  }
  std::uint64_t fault_total() const;
  /// Faults raised by access events (everything except double frees).
  std::uint64_t access_faults() const;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Drives a trace through the allocator and the check pipeline. Deterministic:
/// identical (trace, config) pairs produce byte-identical reports. Throws
/// TraceParseError when the trace is malformed (naming the offending seq) and
/// std::runtime_error when the arena is exhausted.
Report replay(const Trace& trace, const ReplayConfig& config, std::ostream* explain = nullptr);

}  // namespace cmem
