// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/workload.hpp"

#include <bit>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace cmem {

namespace {

// Hand-rolled draws on top of the raw engine keep traces byte-identical
// across standard libraries; std::uniform_*_distribution is not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  std::uint64_t between(std::uint64_t lo, std::uint64_t hi_exclusive) {
    return lo + below(hi_exclusive - lo);
  }

  /// Log-uniform-ish draw: uniform octave, then uniform inside it.
  std::uint64_t log_uniform(std::uint64_t lo, std::uint64_t hi_exclusive) {
    const int lo_exp = std::bit_width(lo) - 1;
    const int hi_exp = std::bit_width(hi_exclusive - 1) - 1;
    const int exp = static_cast<int>(between(static_cast<std::uint64_t>(lo_exp),
                                             static_cast<std::uint64_t>(hi_exp) + 1));
    std::uint64_t bucket_lo = std::uint64_t{1} << exp;
    std::uint64_t bucket_hi = std::uint64_t{1} << (exp + 1);
    if (bucket_lo < lo) bucket_lo = lo;
    if (bucket_hi > hi_exclusive) bucket_hi = hi_exclusive;
    return between(bucket_lo, bucket_hi);
  }

 private:
  std::mt19937_64 engine_;
};

struct LiveObject {
  std::uint64_t id = 0;
  std::uint64_t size = 0;
  bool small = true;
  std::uint32_t accesses_left = 0;
};

// Slot capacity the default policy would reserve for this size, used to pick
// the two spatial sub-kinds (inside the slack vs. past the slot).
std::uint64_t default_slot_capacity(std::uint64_t size) {
  const std::uint64_t widened = size < 2 ? 2 : size;
  return std::uint64_t{1} << std::bit_width(widened - 1);
}

}  // namespace

void WorkloadParams::validate() const {
  if (p_small < 0.0 || p_small > 1.0) {
    throw std::invalid_argument{"workload: p_small outside [0, 1]"};
  }
  if (p_free_small < 0.0 || p_free_small > 1.0 || p_free_large < 0.0 || p_free_large > 1.0) {
    throw std::invalid_argument{"workload: free probability outside [0, 1]"};
  }
  if (alloc_share <= 0.0 || alloc_share > 1.0) {
    throw std::invalid_argument{"workload: alloc_share outside (0, 1]"};
  }
  if (spatial_rate < 0.0 || spatial_rate > 1.0 || temporal_rate < 0.0 || temporal_rate > 1.0) {
    throw std::invalid_argument{"workload: injection rate outside [0, 1]"};
  }
  if (small_min < 1 || small_min >= small_max || large_min < 1 || large_min >= large_max) {
    throw std::invalid_argument{"workload: empty size range"};
  }
  if (small_access_limit == 0 || large_access_limit == 0) {
    throw std::invalid_argument{"workload: access limit must be positive"};
  }
  if (events == 0) {
    throw std::invalid_argument{"workload: event count must be positive"};
  }
}

Trace generate(const WorkloadParams& params) {
  params.validate();
  Rng rng{params.seed};
  Trace trace;
  trace.events.reserve(params.events);

  std::vector<LiveObject> live;
  std::uint64_t next_id = 1;
  std::uint64_t seq = 1;

  auto emit = [&](TraceEvent event) {
    event.seq = seq++;
    event.label = TraceLabel::Benign;
    trace.events.push_back(std::move(event));
  };

  while (trace.events.size() < params.events) {
    const bool must_alloc = live.empty();
    if (must_alloc || rng.u01() < params.alloc_share) {
      const bool small = rng.u01() < params.p_small;
      const std::uint64_t size = small ? rng.log_uniform(params.small_min, params.small_max)
                                       : rng.log_uniform(params.large_min, params.large_max);
      const std::uint32_t limit = small ? params.small_access_limit : params.large_access_limit;
      const AllocLevel level = small ? AllocLevel::User : AllocLevel::System;
      emit(TraceEvent::alloc(0, next_id, size, level));
      live.push_back(LiveObject{next_id, size, small,
                                static_cast<std::uint32_t>(1 + rng.below(limit))});
      ++next_id;
      continue;
    }

    const std::size_t idx = static_cast<std::size_t>(rng.below(live.size()));
    LiveObject& object = live[idx];
    if (object.accesses_left == 0) {
      const double p_free = object.small ? params.p_free_small : params.p_free_large;
      if (rng.u01() < p_free) {
        emit(TraceEvent::free_of(0, object.id));
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
      } else {
        // Long-lived object keeps receiving accesses.
        const std::uint32_t limit =
            object.small ? params.small_access_limit : params.large_access_limit;
        object.accesses_left = static_cast<std::uint32_t>(1 + rng.below(limit));
      }
      continue;
    }

    std::uint64_t span = std::uint64_t{1} << rng.below(4);
    if (span > object.size) span = 1;
    const std::int64_t offset = static_cast<std::int64_t>(rng.below(object.size - span + 1));
    const AccessKind kind = rng.u01() < 0.7 ? AccessKind::Load : AccessKind::Store;
    emit(TraceEvent::access(0, object.id, offset, span, kind));
    --object.accesses_left;
  }

  return trace;
}

Trace inject(const Trace& base, double spatial_rate, double temporal_rate, std::uint64_t seed) {
  if (spatial_rate < 0.0 || spatial_rate > 1.0 || temporal_rate < 0.0 || temporal_rate > 1.0) {
    throw std::invalid_argument{"inject: rates must lie in [0, 1]"};
  }
  Rng rng{seed};
  Trace out;
  out.events.reserve(base.events.size());

  std::unordered_map<std::uint64_t, std::uint64_t> size_of;
  bool within_slack_next = true;

  for (const TraceEvent& event : base.events) {
    if (event.type == EventType::Alloc) {
      size_of[event.object_id] = event.size;
    }
    out.events.push_back(event);

    if (event.type == EventType::Access &&
        event.label.value_or(TraceLabel::Benign) == TraceLabel::Benign &&
        rng.u01() < spatial_rate) {
      auto it = size_of.find(event.object_id);
      if (it != size_of.end()) {
        const std::uint64_t size = it->second;
        const std::uint64_t capacity = default_slot_capacity(size);
        const bool within = within_slack_next && capacity > size;
        within_slack_next = !within_slack_next;
        const std::uint64_t offset =
            within ? rng.between(size, capacity) : capacity + rng.below(16);
        TraceEvent bad = TraceEvent::access(0, event.object_id,
                                            static_cast<std::int64_t>(offset), 1);
        bad.label = TraceLabel::SpatialViolation;
        out.events.push_back(bad);
      }
    }

    if (event.type == EventType::Free && rng.u01() < temporal_rate) {
      TraceEvent bad = TraceEvent::access(0, event.object_id, 0, 1);
      bad.label = TraceLabel::TemporalViolation;
      out.events.push_back(bad);
    }
  }

  out.resequence();
  return out;
}

}  // namespace cmem
