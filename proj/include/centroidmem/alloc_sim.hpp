// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "centroidmem/descriptor_store.hpp"
#include "centroidmem/ptr_codec.hpp"

namespace cmem {

/// Ordered (max_size, slot exponent) pairs for aligned-mode binning.
/// The default table is powers of two from 2 B to 1 KiB, which makes the
/// class exponent equal bit_width(size - 1).
class SizeClassTable {
 public:
  struct SizeClass {
    std::uint64_t max_size = 0;
    std::uint8_t exponent = 0;
  };

  static SizeClassTable default_table();
  /// Parses [{"max_size": 16, "exponent": 4}, ...]; throws
  /// std::invalid_argument on malformed or non-monotonic input.
  static SizeClassTable from_json_text(const std::string& text);

  explicit SizeClassTable(std::vector<SizeClass> classes);

  /// Exponent of the smallest class holding `size`, or nullopt above the
  /// table maximum (callers fall back to the minimal-slot formula).
  std::optional<std::uint8_t> exponent_for(std::uint64_t size) const;

  std::uint64_t max_size() const { return classes_.empty() ? 0 : classes_.back().max_size; }
  const std::vector<SizeClass>& classes() const { return classes_; }

 private:
  std::vector<SizeClass> classes_;
};

enum class AllocState : std::uint8_t { Live, Freed };

struct AllocationRecord {
  std::uint64_t object_id = 0;
  std::uint64_t requested_size = 0;
  LinearAddress base = 0;
  LinearAddress bound = 0;  // last byte of the reserved storage
  SlotSpec slot{};
  PtrMode mode = PtrMode::Aligned;
  AllocLevel level = AllocLevel::User;
  std::uint32_t generation = 0;
  AllocState state = AllocState::Live;
  std::optional<LinearAddress> centroid;  // key of the registered descriptor, if any
  /// Carved from a caller-owned region (a parent object) rather than the main
  /// arena; nested inside that region's own record by design.
  bool sub_allocation = false;

  std::uint64_t reserved() const { return bound - base + 1; }
  std::uint64_t slack() const { return reserved() - requested_size; }
};

/// A contiguous allocation window with a bump cursor. The main arena is one
/// region; parent objects carve out sub-regions for their children.
struct Region {
  LinearAddress next = 0;
  LinearAddress limit = 0;  // first address past the region

  std::uint64_t remaining() const { return limit - next; }
};

struct AllocatorConfig {
  LinearAddress arena_base = 0x4000'0000;
  std::uint64_t arena_size = std::uint64_t{1} << 32;
  /// Sizes below this use aligned mode unless overridden.
  std::uint64_t mode_threshold = 1024;
  /// Recycle freed slots. Off by default so that every stale pointer is
  /// detectable by descriptor miss; on, it reproduces the aliasing window
  /// that quarantine-style allocators close.
  bool reuse = false;
  /// Also register descriptors for aligned-mode slots, so liveness checks can
  /// cover aligned words too.
  bool register_aligned = false;
  /// Round centroid-mode storage up to slot sub-blocks (2^N split into
  /// 2^lowfat_block_count_exponent blocks) instead of exact bytes. Models the
  /// sub-block-bounds baseline for side-by-side comparison.
  bool lowfat_storage = false;
  int lowfat_block_count_exponent = 5;  // M
  SizeClassTable size_classes = SizeClassTable::default_table();
};

struct Allocation {
  TaggedWord word{};
  std::uint64_t object_id = 0;
};

enum class FreeOutcome : std::uint8_t { Freed, DoubleFree };

struct ModeFragmentation {
  std::uint64_t objects = 0;
  std::uint64_t total_requested = 0;
  std::uint64_t total_reserved = 0;
  std::uint64_t max_slack = 0;

  double mean_slack() const {
    return objects == 0
               ? 0.0
               : static_cast<double>(total_reserved - total_requested) / static_cast<double>(objects);
  }
};

struct FragmentationReport {
  ModeFragmentation aligned;
  ModeFragmentation centroid;
};

/// Virtual binning allocator. Places objects in minimal aligned slots and
/// issues tagged words; only bookkeeping exists, no host memory is reserved.
///
/// Aligned mode reserves the whole slot at its base, so the tag alone
/// recovers the storage bounds. Centroid mode reserves the exact byte range,
/// aligned so the minimal slot exponent equals the size's own bit length (a
/// small object must not inherit a large exponent), and registers a
/// descriptor keyed by the range's canonical centroid.
///
/// Single-owner mutable state: one logical thread drives it. Returned
/// records and words are plain values, freely shareable.
class Allocator {
 public:
  Allocator(DescriptorStore& store, AllocatorConfig config = {});

  Allocation allocate(std::uint64_t size, AllocLevel level = AllocLevel::User,
                      std::optional<PtrMode> mode_override = std::nullopt);

  /// Same policy, but carving from the caller's region (parent objects hand
  /// their own window here). Throws std::runtime_error when the region
  /// cannot fit the request.
  Allocation allocate_within(Region& region, std::uint64_t size, AllocLevel level,
                             std::optional<PtrMode> mode_override = std::nullopt);

  /// Marks the record freed and revokes its descriptor. Returns DoubleFree
  /// (and records nothing else) when the record is already freed. Throws
  /// std::out_of_range for an unknown id.
  FreeOutcome free_object(std::uint64_t object_id);

  const AllocationRecord& record(std::uint64_t object_id) const;
  const std::vector<AllocationRecord>& records() const { return records_; }

  FragmentationReport fragmentation_report() const;

  std::uint64_t live_objects() const { return live_ranges_.size(); }
  const AllocatorConfig& config() const { return config_; }
  Region& main_region() { return main_region_; }

 private:
  // Freed ranges are recyclable only by an exactly matching request class.
  struct FreeListKey {
    PtrMode mode;
    std::uint64_t exponent;
    std::uint64_t bytes;
    auto operator<=>(const FreeListKey&) const = default;
  };

  Allocation allocate_impl(Region& region, std::uint64_t size, AllocLevel level,
                           std::optional<PtrMode> mode_override);
  std::uint8_t aligned_exponent(std::uint64_t size) const;
  LinearAddress take_range(Region& region, std::uint64_t alignment_exponent, std::uint64_t bytes);
  LinearAddress reuse_or_take(Region& region, PtrMode mode, std::uint64_t alignment_exponent,
                              std::uint64_t bytes);
  static FreeListKey free_list_key(const AllocationRecord& rec);
  void track_live(const AllocationRecord& rec);

  DescriptorStore& store_;
  AllocatorConfig config_;
  Region main_region_;
  std::vector<AllocationRecord> records_;               // indexed by object_id - 1
  std::map<LinearAddress, LinearAddress> live_ranges_;  // base -> bound, for disjointness
  std::map<FreeListKey, std::vector<LinearAddress>> free_slots_;
  std::map<LinearAddress, std::uint32_t> slot_generation_;
};

}  // namespace cmem
