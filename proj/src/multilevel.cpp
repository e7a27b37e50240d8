// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/multilevel.hpp"

#include <stdexcept>

namespace cmem {

const char* parent_scheme_name(ParentScheme scheme) {
  switch (scheme) {
    case ParentScheme::DualTag: return "dualtag";
    case ParentScheme::RangeCache: return "rangecache";
    case ParentScheme::Pte: return "pte";
  }
  return "unknown";
}

PageTable::PageTable(int page_bits) : page_bits_(page_bits) {
  if (page_bits < 1 || page_bits > 30) {
    throw std::invalid_argument{"PageTable: unreasonable page size"};
  }
}

void PageTable::map_page(std::uint64_t vpn, Permissions permissions,
                         std::optional<LinearAddress> s_tag) {
  entries_[vpn] = PageTableEntry{vpn, true, permissions, s_tag};
}

void PageTable::unmap_page(std::uint64_t vpn) {
  entries_.erase(vpn);
}

const PageTableEntry* PageTable::walk(LinearAddress addr) {
  ++walks_;
  auto it = entries_.find(vpn_of(addr));
  return it == entries_.end() ? nullptr : &it->second;
}

const PageTableEntry* PageTable::peek(std::uint64_t vpn) const {
  auto it = entries_.find(vpn);
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint64_t encode_dual(const DualTagWord& word) {
  if (word.child_exponent < kExponentMin || word.child_exponent > kExponentMax) {
    throw std::invalid_argument{"encode_dual: child exponent outside [1, 56]"};
  }
  if (word.parent_exponent < kExponentMin || word.parent_exponent > kDualAddressBits) {
    throw std::invalid_argument{"encode_dual: parent exponent outside [1, 51]"};
  }
  if ((word.address & ~kDualAddressMask) != 0) {
    throw std::invalid_argument{"encode_dual: address outside the 51-bit window"};
  }
  return (static_cast<std::uint64_t>(word.mode) << 63) |
         (static_cast<std::uint64_t>(word.child_exponent) << 57) |
         (static_cast<std::uint64_t>(word.parent_exponent) << kDualAddressBits) | word.address;
}

std::optional<DualTagWord> decode_dual(std::uint64_t word) {
  const int child = static_cast<int>((word >> 57) & 0x3F);
  const int parent = static_cast<int>((word >> kDualAddressBits) & 0x3F);
  if (child < kExponentMin || child > kExponentMax || parent < kExponentMin ||
      parent > kDualAddressBits) {
    return std::nullopt;
  }
  return DualTagWord{
      (word >> 63) != 0 ? PtrMode::Centroid : PtrMode::Aligned,
      static_cast<std::uint8_t>(child),
      static_cast<std::uint8_t>(parent),
      word & kDualAddressMask,
  };
}

MultiLevel::MultiLevel(Allocator& allocator, DescriptorStore& store, ParentScheme scheme,
                       int page_bits)
    : allocator_(allocator), store_(store), scheme_(scheme), page_table_(page_bits) {}

MultiLevel::MapResult MultiLevel::map_parent(std::uint64_t size) {
  if (size == 0) {
    throw std::invalid_argument{"map_parent: zero size"};
  }
  const std::uint64_t page = page_table_.page_size();
  const std::uint64_t rounded = (size + page - 1) / page * page;

  const Allocation allocation =
      allocator_.allocate(rounded, AllocLevel::System, PtrMode::Centroid);
  const AllocationRecord& rec = allocator_.record(allocation.object_id);

  ParentRegion region;
  region.centroid = *rec.centroid;
  region.base = rec.base;
  region.bound = rec.bound;
  region.object_id = allocation.object_id;
  region.arena = Region{rec.base, rec.bound + 1};

  for (std::uint64_t vpn = page_table_.vpn_of(region.base);
       vpn <= page_table_.vpn_of(region.bound); ++vpn) {
    page_table_.map_page(vpn, Permissions::read_write(), region.centroid);
  }

  base_by_centroid_.emplace(region.centroid, region.base);
  parents_by_base_.emplace(region.base, std::move(region));
  return MapResult{allocation, *rec.centroid};
}

void MultiLevel::unmap_parent(LinearAddress centroid) {
  auto by_centroid = base_by_centroid_.find(centroid);
  if (by_centroid == base_by_centroid_.end()) {
    throw std::out_of_range{"unmap_parent: unknown parent centroid"};
  }
  auto it = parents_by_base_.find(by_centroid->second);
  const ParentRegion& region = it->second;

  for (std::uint64_t vpn = page_table_.vpn_of(region.base);
       vpn <= page_table_.vpn_of(region.bound); ++vpn) {
    page_table_.unmap_page(vpn);
  }
  allocator_.free_object(region.object_id);

  base_by_centroid_.erase(by_centroid);
  parents_by_base_.erase(it);
}

Allocation MultiLevel::child_alloc(LinearAddress parent_centroid, std::uint64_t size,
                                   AllocLevel level, std::optional<PtrMode> mode_override) {
  auto by_centroid = base_by_centroid_.find(parent_centroid);
  if (by_centroid == base_by_centroid_.end()) {
    throw std::out_of_range{"child_alloc: unknown parent centroid"};
  }
  ParentRegion& region = parents_by_base_.at(by_centroid->second);
  const Allocation allocation = allocator_.allocate_within(region.arena, size, level, mode_override);
  const AllocationRecord& rec = allocator_.record(allocation.object_id);
  if (rec.centroid) {
    store_.set_parent(*rec.centroid, parent_centroid);
  }
  region.children.push_back(allocation.object_id);
  return allocation;
}

const ParentRegion* MultiLevel::parent_region(LinearAddress centroid) const {
  auto by_centroid = base_by_centroid_.find(centroid);
  if (by_centroid == base_by_centroid_.end()) return nullptr;
  return &parents_by_base_.at(by_centroid->second);
}

const ParentRegion* MultiLevel::containing_parent(LinearAddress addr) const {
  auto it = parents_by_base_.upper_bound(addr);
  if (it == parents_by_base_.begin()) return nullptr;
  --it;
  return addr <= it->second.bound ? &it->second : nullptr;
}

std::uint64_t MultiLevel::dual_word_for(LinearAddress addr,
                                        std::optional<TaggedWord> child_tag) const {
  const ParentRegion* parent = containing_parent(addr);
  if (parent == nullptr) {
    throw std::out_of_range{"dual_word_for: address is not inside a mapped parent"};
  }
  const std::uint8_t parent_exponent = exponent_from_centroid(parent->centroid, CentroidKind::High);
  DualTagWord word;
  word.mode = child_tag ? child_tag->mode : PtrMode::Aligned;
  word.child_exponent = child_tag ? child_tag->exponent : kExponentMin;
  word.parent_exponent = parent_exponent;
  word.address = addr;
  return encode_dual(word);
}

FaultOr<ObjectDescriptor> MultiLevel::lookup_parent_descriptor(LinearAddress centroid,
                                                               SchemeCounters& counters) {
  ++counters.store_lookups;
  LookupResult found = store_.lookup(centroid);
  switch (found.status) {
    case LookupStatus::Hit:
    case LookupStatus::MissThenFill:
      return *found.descriptor;
    case LookupStatus::RevokedEntry:
      return AccessFault{FaultKind::UseAfterFree, 0, centroid, "parent descriptor revoked"};
    case LookupStatus::NotFound:
      return AccessFault{FaultKind::DescriptorMiss, 0, centroid, "no parent descriptor"};
  }
  return AccessFault{FaultKind::DescriptorMiss, 0, centroid, "unreachable"};
}

FaultOr<ObjectDescriptor> MultiLevel::parent_of(LinearAddress addr) {
  return parent_of(addr, scheme_);
}

FaultOr<ObjectDescriptor> MultiLevel::parent_of(LinearAddress addr, ParentScheme scheme) {
  SchemeCounters& counters = counters_[static_cast<std::size_t>(scheme)];
  ++counters.lookups;

  switch (scheme) {
    case ParentScheme::DualTag: {
      const ParentRegion* parent = containing_parent(addr);
      if (parent == nullptr) {
        return AccessFault{FaultKind::DescriptorMiss, 0, addr, "unmapped address"};
      }
      return parent_of_word(dual_word_for(addr));
    }

    case ParentScheme::RangeCache: {
      if (auto cached = store_.range_lookup(addr)) {
        ++counters.range_hits;
        return *cached;
      }
      // Miss: walk the sorted parent index and fill the range cache.
      ++counters.sorted_walks;
      const ParentRegion* parent = containing_parent(addr);
      if (parent == nullptr) {
        return AccessFault{FaultKind::DescriptorMiss, 0, addr, "unmapped address"};
      }
      FaultOr<ObjectDescriptor> descriptor = lookup_parent_descriptor(parent->centroid, counters);
      if (descriptor) {
        store_.range_fill(descriptor.value());
        ++counters.range_fills;
      }
      return descriptor;
    }

    case ParentScheme::Pte: {
      ++counters.pte_walks;
      const PageTableEntry* pte = page_table_.walk(addr);
      if (pte == nullptr || !pte->present) {
        return AccessFault{FaultKind::DescriptorMiss, 0, addr, "unmapped address"};
      }
      if (!pte->s_tag) {
        return AccessFault{FaultKind::DescriptorMiss, 0, addr, "page carries no system tag"};
      }
      return lookup_parent_descriptor(*pte->s_tag, counters);
    }
  }
  return AccessFault{FaultKind::DescriptorMiss, 0, addr, "unreachable"};
}

FaultOr<ObjectDescriptor> MultiLevel::parent_of_word(std::uint64_t dual_word) {
  SchemeCounters& counters = counters_[static_cast<std::size_t>(ParentScheme::DualTag)];
  const std::optional<DualTagWord> word = decode_dual(dual_word);
  if (!word) {
    return AccessFault{FaultKind::MalformedTag, dual_word, 0, "invalid dual tag"};
  }
  ++counters.tag_decodes;
  const SlotSpec parent_slot = slot_of(word->address, word->parent_exponent);
  return lookup_parent_descriptor(centroid_pair(parent_slot).high, counters);
}

}  // namespace cmem
