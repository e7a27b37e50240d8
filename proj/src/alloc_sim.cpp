// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/alloc_sim.hpp"

#include <bit>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace cmem {

namespace {

LinearAddress align_up(LinearAddress addr, std::uint64_t alignment) {
  return (addr + alignment - 1) & ~(alignment - 1);
}

}  // namespace

SizeClassTable SizeClassTable::default_table() {
  std::vector<SizeClass> classes;
  for (int exponent = 1; exponent <= 10; ++exponent) {
    classes.push_back(SizeClass{std::uint64_t{1} << exponent, static_cast<std::uint8_t>(exponent)});
  }
  return SizeClassTable{std::move(classes)};
}

SizeClassTable::SizeClassTable(std::vector<SizeClass> classes) : classes_(std::move(classes)) {
  std::uint64_t prev_max = 0;
  for (const auto& c : classes_) {
    if (c.max_size <= prev_max) {
      throw std::invalid_argument{"SizeClassTable: classes must be strictly increasing"};
    }
    if (c.exponent < kExponentMin || c.exponent > kExponentMax ||
        (std::uint64_t{1} << c.exponent) < c.max_size) {
      throw std::invalid_argument{"SizeClassTable: class slot cannot hold its max size"};
    }
    prev_max = c.max_size;
  }
}

SizeClassTable SizeClassTable::from_json_text(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument{std::string{"SizeClassTable: bad JSON: "} + e.what()};
  }
  if (!parsed.is_array()) {
    throw std::invalid_argument{"SizeClassTable: expected a JSON array"};
  }
  std::vector<SizeClass> classes;
  for (const auto& item : parsed) {
    if (!item.is_object() || !item.contains("max_size") || !item.contains("exponent")) {
      throw std::invalid_argument{"SizeClassTable: each class needs max_size and exponent"};
    }
    classes.push_back(SizeClass{item.at("max_size").get<std::uint64_t>(),
                                item.at("exponent").get<std::uint8_t>()});
  }
  return SizeClassTable{std::move(classes)};
}

std::optional<std::uint8_t> SizeClassTable::exponent_for(std::uint64_t size) const {
  for (const auto& c : classes_) {
    if (size <= c.max_size) return c.exponent;
  }
  return std::nullopt;
}

Allocator::Allocator(DescriptorStore& store, AllocatorConfig config)
    : store_(store), config_(std::move(config)) {
  if (!is_canonical(config_.arena_base) ||
      !is_canonical(config_.arena_base + config_.arena_size - 1)) {
    throw std::invalid_argument{"Allocator: arena window leaves the canonical address space"};
  }
  main_region_ = Region{config_.arena_base, config_.arena_base + config_.arena_size};
}

std::uint8_t Allocator::aligned_exponent(std::uint64_t size) const {
  if (auto from_table = config_.size_classes.exponent_for(size)) {
    return *from_table;
  }
  const std::uint64_t widened = size < 2 ? 2 : size;
  const int n = std::bit_width(widened - 1);
  return static_cast<std::uint8_t>(n < kExponentMin ? kExponentMin : n);
}

LinearAddress Allocator::take_range(Region& region, std::uint64_t alignment_exponent,
                                    std::uint64_t bytes) {
  const LinearAddress aligned = align_up(region.next, std::uint64_t{1} << alignment_exponent);
  if (aligned < region.next || aligned + bytes > region.limit || aligned + bytes < aligned) {
    throw std::runtime_error{"allocator: address window exhausted"};
  }
  region.next = aligned + bytes;
  return aligned;
}

Allocator::FreeListKey Allocator::free_list_key(const AllocationRecord& rec) {
  return FreeListKey{rec.mode, rec.slot.exponent, rec.reserved()};
}

LinearAddress Allocator::reuse_or_take(Region& region, PtrMode mode,
                                       std::uint64_t alignment_exponent, std::uint64_t bytes) {
  // Sub-allocations bump inside their own window and are never recycled, so
  // a freed child range cannot leak into another region.
  if (config_.reuse && &region == &main_region_) {
    auto it = free_slots_.find(FreeListKey{mode, alignment_exponent, bytes});
    if (it != free_slots_.end() && !it->second.empty()) {
      const LinearAddress base = it->second.back();
      it->second.pop_back();
      return base;
    }
  }
  return take_range(region, alignment_exponent, bytes);
}

void Allocator::track_live(const AllocationRecord& rec) {
  auto next = live_ranges_.lower_bound(rec.base);
  if (next != live_ranges_.end() && next->first <= rec.bound) {
    throw std::logic_error{"allocator: live ranges overlap"};
  }
  if (next != live_ranges_.begin()) {
    auto prev = std::prev(next);
    if (prev->second >= rec.base) {
      throw std::logic_error{"allocator: live ranges overlap"};
    }
  }
  live_ranges_.emplace(rec.base, rec.bound);
}

Allocation Allocator::allocate(std::uint64_t size, AllocLevel level,
                               std::optional<PtrMode> mode_override) {
  return allocate_impl(main_region_, size, level, mode_override);
}

Allocation Allocator::allocate_within(Region& region, std::uint64_t size, AllocLevel level,
                                      std::optional<PtrMode> mode_override) {
  return allocate_impl(region, size, level, mode_override);
}

Allocation Allocator::allocate_impl(Region& region, std::uint64_t size, AllocLevel level,
                                    std::optional<PtrMode> mode_override) {
  if (size == 0) {
    throw std::invalid_argument{"allocate: zero size"};
  }
  const PtrMode mode = mode_override.value_or(size < config_.mode_threshold ? PtrMode::Aligned
                                                                            : PtrMode::Centroid);
  AllocationRecord rec;
  rec.object_id = records_.size() + 1;
  rec.requested_size = size;
  rec.mode = mode;
  rec.level = level;
  rec.sub_allocation = &region != &main_region_;

  if (mode == PtrMode::Aligned) {
    const std::uint8_t n = aligned_exponent(size);
    const std::uint64_t capacity = std::uint64_t{1} << n;
    if (size > capacity) {
      throw std::logic_error{"allocate: size class slot cannot hold the request"};
    }
    rec.base = reuse_or_take(region, mode, n, capacity);
    rec.bound = rec.base + capacity - 1;
    rec.slot = SlotSpec{rec.base, n};
  } else {
    const std::uint64_t widened = size < 2 ? 2 : size;
    const int n0 = std::bit_width(widened - 1) < kExponentMin ? kExponentMin
                                                              : std::bit_width(widened - 1);
    std::uint64_t storage = widened;
    if (config_.lowfat_storage) {
      const LowFatFields fit = lowfat_fit(widened, config_.lowfat_block_count_exponent);
      storage = (std::uint64_t{fit.last_block} + 1) << fit.sub_block_exponent;
    }
    rec.base = reuse_or_take(region, mode, static_cast<std::uint64_t>(n0), storage);
    rec.bound = rec.base + storage - 1;
    const std::uint8_t n = min_slot_exponent(rec.base, rec.bound);
    rec.slot = slot_of(rec.base, n);
  }

  auto& generation = slot_generation_[rec.base];
  rec.generation = generation;
  ++generation;

  if (rec.mode == PtrMode::Centroid || config_.register_aligned) {
    const LinearAddress key = rec.mode == PtrMode::Centroid
                                  ? canonical_centroid(rec.base, rec.bound)
                                  : centroid_pair(rec.slot).high;
    if (config_.reuse) {
      store_.collect_revoked_in(rec.base, rec.bound);
    }
    ObjectDescriptor d;
    d.centroid = key;
    d.base = rec.base;
    d.bound = rec.bound;
    d.permissions = Permissions::read_write();
    d.level = level;
    d.generation = rec.generation;
    store_.insert(d);
    rec.centroid = key;
  }

  if (!rec.sub_allocation) {
    track_live(rec);
  }
  records_.push_back(rec);
  return Allocation{TaggedWord{rec.mode, rec.slot.exponent, rec.base}, rec.object_id};
}

FreeOutcome Allocator::free_object(std::uint64_t object_id) {
  if (object_id == 0 || object_id > records_.size()) {
    throw std::out_of_range{"free: unknown object id"};
  }
  AllocationRecord& rec = records_[object_id - 1];
  if (rec.state == AllocState::Freed) {
    return FreeOutcome::DoubleFree;
  }
  rec.state = AllocState::Freed;
  if (!rec.sub_allocation) {
    live_ranges_.erase(rec.base);
  }
  if (rec.centroid) {
    store_.revoke(*rec.centroid);
  }
  if (config_.reuse && !rec.sub_allocation) {
    free_slots_[free_list_key(rec)].push_back(rec.base);
  }
  return FreeOutcome::Freed;
}

const AllocationRecord& Allocator::record(std::uint64_t object_id) const {
  if (object_id == 0 || object_id > records_.size()) {
    throw std::out_of_range{"record: unknown object id"};
  }
  return records_[object_id - 1];
}

FragmentationReport Allocator::fragmentation_report() const {
  FragmentationReport report;
  for (const auto& rec : records_) {
    ModeFragmentation& frag = rec.mode == PtrMode::Aligned ? report.aligned : report.centroid;
    ++frag.objects;
    frag.total_requested += rec.requested_size;
    frag.total_reserved += rec.reserved();
    if (rec.slack() > frag.max_slack) {
      frag.max_slack = rec.slack();
    }
  }
  return report;
}

}  // namespace cmem
