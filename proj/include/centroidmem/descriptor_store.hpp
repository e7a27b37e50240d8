// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "centroidmem/ptr_codec.hpp"

namespace cmem {

struct Permissions {
  bool read = true;
  bool write = true;
  bool execute = false;

  static constexpr Permissions read_only() { return {true, false, false}; }
  static constexpr Permissions read_write() { return {true, true, false}; }
  static constexpr Permissions all() { return {true, true, true}; }

  friend bool operator==(const Permissions&, const Permissions&) = default;
};

enum class AllocLevel : std::uint8_t { User, System };
enum class DescriptorState : std::uint8_t { Live, Revoked };

/// Centralized per-object record: bounds, permissions, liveness, lineage.
/// Keyed by the object's canonical centroid, which always lies inside
/// [base, bound] while the object is live.
struct ObjectDescriptor {
  LinearAddress centroid = 0;
  LinearAddress base = 0;
  LinearAddress bound = 0;
  Permissions permissions{};
  AllocLevel level = AllocLevel::User;
  DescriptorState state = DescriptorState::Live;
  std::uint32_t generation = 0;
  std::optional<LinearAddress> parent_centroid;
  std::optional<std::uint16_t> semantic_tag;

  BoundsDescriptor bounds() const { return BoundsDescriptor{base, bound}; }

  friend bool operator==(const ObjectDescriptor&, const ObjectDescriptor&) = default;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;

  double hit_rate() const {
    const std::uint64_t total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

/// Set-associative descriptor cache model keyed by centroid, LRU per set.
///
/// The set index is taken from the centroid bits just above its trailing
/// ...1000 pattern, so that the variable-width low pattern never aliases the
/// index. This indexing choice is a simulation parameter, not a hardware
/// claim.
class DescriptorCacheModel {
 public:
  explicit DescriptorCacheModel(std::size_t sets = 64, std::size_t ways = 4);

  /// Returns the cached copy and refreshes its LRU position; counts a hit or
  /// a miss either way.
  std::optional<ObjectDescriptor> lookup(LinearAddress centroid);

  /// Installs a copy, evicting the set's LRU entry when full.
  void fill(const ObjectDescriptor& descriptor);

  /// Drops any copy for this centroid (descriptor revoked or replaced).
  void invalidate(LinearAddress centroid);

  void clear();

  std::size_t set_index(LinearAddress centroid) const;
  std::size_t sets() const { return sets_.size(); }
  std::size_t ways() const { return ways_; }
  const CacheStats& stats() const { return stats_; }

  /// Cached centroids, for coherence checks in tests.
  std::vector<LinearAddress> cached_keys() const;

 private:
  struct Entry {
    LinearAddress tag = 0;
    ObjectDescriptor descriptor{};
  };
  // Each set holds entries in LRU order, most recent at the front.
  std::vector<std::list<Entry>> sets_;
  std::size_t ways_;
  CacheStats stats_;
};

/// Small fully-associative range cache: answers "which registered range
/// contains this address" by parallel comparison, LRU replacement. Entries
/// never overlap.
class RangeCacheModel {
 public:
  explicit RangeCacheModel(std::size_t capacity = 16);

  /// Returns the unique entry whose [base, bound] contains addr, refreshing
  /// its LRU position. Counts a hit or a miss.
  std::optional<ObjectDescriptor> lookup(LinearAddress addr);

  /// Installs a range, evicting the LRU entry at capacity. Returns false and
  /// leaves the cache unchanged when the range would overlap a cached one.
  bool insert(const ObjectDescriptor& descriptor);

  void invalidate(LinearAddress centroid);
  void clear();

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const CacheStats& stats() const { return stats_; }

 private:
  std::size_t capacity_;
  std::list<ObjectDescriptor> entries_;  // LRU order, most recent first
  CacheStats stats_;
};

enum class LookupStatus : std::uint8_t {
  Hit,           ///< served from the descriptor cache
  MissThenFill,  ///< table hit after a cache miss; cache filled
  NotFound,      ///< no entry was ever registered for this key
  RevokedEntry,  ///< entry exists but was revoked; stale copy attached
};

struct LookupResult {
  LookupStatus status = LookupStatus::NotFound;
  std::optional<ObjectDescriptor> descriptor;  // engaged except for NotFound

  bool live() const { return status == LookupStatus::Hit || status == LookupStatus::MissThenFill; }
};

struct StoreConfig {
  std::size_t cache_sets = 64;
  std::size_t cache_ways = 4;
  std::size_t range_capacity = 16;
};

/// The memory-resident descriptor table plus its cache models. The table is
/// an associative map keyed by the canonical centroid; keys are unique per
/// live object by construction, so no collision scheme is needed.
///
/// Revoked entries are tombstoned rather than erased, which keeps
/// use-after-free diagnoses precise while addresses are never reused. An
/// allocator that recycles a slot calls collect_revoked_in() before
/// re-registering.
///
/// Single-writer contract: mutations are serialized by the replay engine;
/// lookups may be issued freely between mutations.
class DescriptorStore {
 public:
  explicit DescriptorStore(StoreConfig config = {});

  /// Registers a live descriptor. Throws std::logic_error when a live entry
  /// with the same centroid exists (an allocator bug, since live ranges are
  /// disjoint and centroids lie inside their range).
  void insert(const ObjectDescriptor& descriptor);

  /// Marks the entry revoked and drops any cached copies. Throws
  /// std::logic_error unless a live entry exists.
  void revoke(LinearAddress centroid);

  /// Cache-first lookup; fills the cache on a table hit.
  LookupResult lookup(LinearAddress centroid);

  /// Range-cache-only lookup; a miss means the caller walks its own sorted
  /// structure and calls range_fill with the result.
  std::optional<ObjectDescriptor> range_lookup(LinearAddress addr);
  bool range_fill(const ObjectDescriptor& descriptor);

  /// Rewrites the parent link of a live entry, keeping any cache copy
  /// coherent.
  void set_parent(LinearAddress centroid, LinearAddress parent_centroid);

  /// Garbage-collects revoked entries whose centroid falls inside
  /// [base, bound]; used when an address range is re-issued.
  void collect_revoked_in(LinearAddress base, LinearAddress bound);

  /// Table-only peek without touching caches or counters.
  const ObjectDescriptor* find(LinearAddress centroid) const;

  std::size_t live_count() const { return live_count_; }
  std::size_t revoked_count() const { return table_.size() - live_count_; }
  std::uint64_t table_lookups() const { return table_lookups_; }

  DescriptorCacheModel& descriptor_cache() { return dcache_; }
  const DescriptorCacheModel& descriptor_cache() const { return dcache_; }
  RangeCacheModel& range_cache() { return rcache_; }
  const RangeCacheModel& range_cache() const { return rcache_; }

 private:
  std::unordered_map<LinearAddress, ObjectDescriptor> table_;
  DescriptorCacheModel dcache_;
  RangeCacheModel rcache_;
  std::size_t live_count_ = 0;
  std::uint64_t table_lookups_ = 0;
};

}  // namespace cmem
