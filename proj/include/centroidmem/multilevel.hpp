// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "centroidmem/alloc_sim.hpp"
#include "centroidmem/descriptor_store.hpp"
#include "centroidmem/dgu.hpp"
#include "centroidmem/ptr_codec.hpp"

namespace cmem {

/// How a child address resolves its parent's descriptor.
enum class ParentScheme : std::uint8_t { DualTag, RangeCache, Pte };

const char* parent_scheme_name(ParentScheme scheme);

struct PageTableEntry {
  std::uint64_t vpn = 0;
  bool present = false;
  Permissions permissions{};
  /// Parent object centroid carried by the translation entry (the system
  /// tag). Engaged for every present page inside a mapped parent region.
  std::optional<LinearAddress> s_tag;
};

/// Flat single-level page table. Walk depth is a counter, not a latency
/// model.
class PageTable {
 public:
  explicit PageTable(int page_bits = 12);

  std::uint64_t page_size() const { return std::uint64_t{1} << page_bits_; }
  std::uint64_t vpn_of(LinearAddress addr) const { return addr >> page_bits_; }

  void map_page(std::uint64_t vpn, Permissions permissions, std::optional<LinearAddress> s_tag);
  void unmap_page(std::uint64_t vpn);

  /// Translation walk; counts one walk whether or not the page is present.
  const PageTableEntry* walk(LinearAddress addr);

  /// Non-counting inspection.
  const PageTableEntry* peek(std::uint64_t vpn) const;

  std::uint64_t walk_count() const { return walks_; }
  std::size_t mapped_pages() const { return entries_.size(); }

 private:
  int page_bits_;
  std::unordered_map<std::uint64_t, PageTableEntry> entries_;
  std::uint64_t walks_ = 0;
};

/// Dual-tag pointer layout: bits 63..57 carry the child tag exactly as the
/// single-tag encoding, bits 56..51 the parent slot exponent, bits 50..0 the
/// address. Spending a second tag shrinks the usable address window to 51
/// bits; words are only valid below that boundary.
inline constexpr int kDualAddressBits = 51;
inline constexpr LinearAddress kDualAddressMask = (std::uint64_t{1} << kDualAddressBits) - 1;

struct DualTagWord {
  PtrMode mode = PtrMode::Aligned;
  std::uint8_t child_exponent = kExponentMin;
  std::uint8_t parent_exponent = kExponentMin;
  LinearAddress address = 0;  // below 2^51

  friend bool operator==(const DualTagWord&, const DualTagWord&) = default;
};

std::uint64_t encode_dual(const DualTagWord& word);
std::optional<DualTagWord> decode_dual(std::uint64_t word);

/// A page-granular parent object and the window its children are carved
/// from.
struct ParentRegion {
  LinearAddress centroid = 0;
  LinearAddress base = 0;
  LinearAddress bound = 0;
  std::uint64_t object_id = 0;
  Region arena{};
  std::vector<std::uint64_t> children;
};

struct SchemeCounters {
  std::uint64_t lookups = 0;
  std::uint64_t tag_decodes = 0;
  std::uint64_t range_hits = 0;
  std::uint64_t range_fills = 0;
  std::uint64_t pte_walks = 0;
  std::uint64_t store_lookups = 0;
  std::uint64_t sorted_walks = 0;
};

/// Parent/child descriptor management over a simulated page table.
///
/// Mapping a parent registers a system-level descriptor, tags the covered
/// page table entries, and records the region in a sorted index. Lookup cost
/// differs per scheme: a dual-tag word resolves with no walk at all, a range
/// cache hit avoids the walk, and the page-table path pays one walk plus one
/// descriptor lookup.
class MultiLevel {
 public:
  struct MapResult {
    Allocation allocation;
    LinearAddress centroid = 0;
  };

  MultiLevel(Allocator& allocator, DescriptorStore& store,
             ParentScheme scheme = ParentScheme::Pte, int page_bits = 12);

  /// Maps a page-granular parent (size rounded up to whole pages).
  MapResult map_parent(std::uint64_t size);

  /// Frees the parent, revokes its descriptor, and unmaps every covered page
  /// so no stale system tag survives.
  void unmap_parent(LinearAddress centroid);

  /// Allocates a child inside the parent window under the normal binning
  /// policy; centroid-mode children record their parent's centroid.
  Allocation child_alloc(LinearAddress parent_centroid, std::uint64_t size,
                         AllocLevel level = AllocLevel::User,
                         std::optional<PtrMode> mode_override = std::nullopt);

  /// Issue-time tagging: the dual-tag word a pointer into `addr`'s parent
  /// would carry. Throws std::out_of_range when no parent is mapped there.
  std::uint64_t dual_word_for(LinearAddress addr,
                              std::optional<TaggedWord> child_tag = std::nullopt) const;

  FaultOr<ObjectDescriptor> parent_of(LinearAddress addr);
  FaultOr<ObjectDescriptor> parent_of(LinearAddress addr, ParentScheme scheme);
  FaultOr<ObjectDescriptor> parent_of_word(std::uint64_t dual_word);

  const SchemeCounters& counters(ParentScheme scheme) const {
    return counters_[static_cast<std::size_t>(scheme)];
  }
  ParentScheme scheme() const { return scheme_; }
  PageTable& page_table() { return page_table_; }
  const PageTable& page_table() const { return page_table_; }
  const ParentRegion* parent_region(LinearAddress centroid) const;
  std::size_t parent_count() const { return parents_by_base_.size(); }

 private:
  const ParentRegion* containing_parent(LinearAddress addr) const;
  FaultOr<ObjectDescriptor> lookup_parent_descriptor(LinearAddress centroid,
                                                     SchemeCounters& counters);

  Allocator& allocator_;
  DescriptorStore& store_;
  ParentScheme scheme_;
  PageTable page_table_;
  std::map<LinearAddress, ParentRegion> parents_by_base_;
  std::unordered_map<LinearAddress, LinearAddress> base_by_centroid_;
  std::array<SchemeCounters, 3> counters_{};
};

}  // namespace cmem
