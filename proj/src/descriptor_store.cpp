// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/descriptor_store.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace cmem {

DescriptorCacheModel::DescriptorCacheModel(std::size_t sets, std::size_t ways)
    : sets_(sets == 0 ? 1 : sets), ways_(ways == 0 ? 1 : ways) {}

std::size_t DescriptorCacheModel::set_index(LinearAddress centroid) const {
  if (centroid == 0) return 0;
  // Skip the trailing zeros plus the single set bit of the ...1000 pattern.
  const int skip = std::countr_zero(centroid) + 1;
  return static_cast<std::size_t>(centroid >> skip) % sets_.size();
}

std::optional<ObjectDescriptor> DescriptorCacheModel::lookup(LinearAddress centroid) {
  auto& set = sets_[set_index(centroid)];
  for (auto it = set.begin(); it != set.end(); ++it) {
    if (it->tag == centroid) {
      set.splice(set.begin(), set, it);
      ++stats_.hits;
      return set.front().descriptor;
    }
  }
  ++stats_.misses;
  return std::nullopt;
}

void DescriptorCacheModel::fill(const ObjectDescriptor& descriptor) {
  auto& set = sets_[set_index(descriptor.centroid)];
  for (auto it = set.begin(); it != set.end(); ++it) {
    if (it->tag == descriptor.centroid) {
      it->descriptor = descriptor;
      set.splice(set.begin(), set, it);
      return;
    }
  }
  if (set.size() >= ways_) {
    set.pop_back();
    ++stats_.evictions;
  }
  set.push_front(Entry{descriptor.centroid, descriptor});
}

void DescriptorCacheModel::invalidate(LinearAddress centroid) {
  auto& set = sets_[set_index(centroid)];
  set.remove_if([centroid](const Entry& e) { return e.tag == centroid; });
}

void DescriptorCacheModel::clear() {
  for (auto& set : sets_) set.clear();
}

std::vector<LinearAddress> DescriptorCacheModel::cached_keys() const {
  std::vector<LinearAddress> keys;
  for (const auto& set : sets_) {
    for (const auto& entry : set) keys.push_back(entry.tag);
  }
  return keys;
}

RangeCacheModel::RangeCacheModel(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

std::optional<ObjectDescriptor> RangeCacheModel::lookup(LinearAddress addr) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->base <= addr && addr <= it->bound) {
      entries_.splice(entries_.begin(), entries_, it);
      ++stats_.hits;
      return entries_.front();
    }
  }
  ++stats_.misses;
  return std::nullopt;
}

bool RangeCacheModel::insert(const ObjectDescriptor& descriptor) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->centroid == descriptor.centroid) {
      *it = descriptor;
      entries_.splice(entries_.begin(), entries_, it);
      return true;
    }
    if (descriptor.base <= it->bound && it->base <= descriptor.bound) {
      return false;
    }
  }
  if (entries_.size() >= capacity_) {
    entries_.pop_back();
    ++stats_.evictions;
  }
  entries_.push_front(descriptor);
  return true;
}

void RangeCacheModel::invalidate(LinearAddress centroid) {
  entries_.remove_if([centroid](const ObjectDescriptor& d) { return d.centroid == centroid; });
}

void RangeCacheModel::clear() {
  entries_.clear();
}

DescriptorStore::DescriptorStore(StoreConfig config)
    : dcache_(config.cache_sets, config.cache_ways), rcache_(config.range_capacity) {}

void DescriptorStore::insert(const ObjectDescriptor& descriptor) {
  auto [it, inserted] = table_.try_emplace(descriptor.centroid, descriptor);
  if (!inserted) {
    if (it->second.state == DescriptorState::Live) {
      throw std::logic_error{"DescriptorStore::insert: duplicate live centroid"};
    }
    // Stale tombstone for a recycled slot; replace it.
    dcache_.invalidate(descriptor.centroid);
    rcache_.invalidate(descriptor.centroid);
    it->second = descriptor;
    ++live_count_;
    return;
  }
  ++live_count_;
}

void DescriptorStore::revoke(LinearAddress centroid) {
  auto it = table_.find(centroid);
  if (it == table_.end() || it->second.state != DescriptorState::Live) {
    throw std::logic_error{"DescriptorStore::revoke: no live entry for centroid"};
  }
  it->second.state = DescriptorState::Revoked;
  --live_count_;
  dcache_.invalidate(centroid);
  rcache_.invalidate(centroid);
}

LookupResult DescriptorStore::lookup(LinearAddress centroid) {
  if (auto cached = dcache_.lookup(centroid)) {
    return LookupResult{LookupStatus::Hit, std::move(cached)};
  }
  ++table_lookups_;
  auto it = table_.find(centroid);
  if (it == table_.end()) {
    return LookupResult{LookupStatus::NotFound, std::nullopt};
  }
  if (it->second.state == DescriptorState::Revoked) {
    return LookupResult{LookupStatus::RevokedEntry, it->second};
  }
  dcache_.fill(it->second);
  return LookupResult{LookupStatus::MissThenFill, it->second};
}

std::optional<ObjectDescriptor> DescriptorStore::range_lookup(LinearAddress addr) {
  return rcache_.lookup(addr);
}

bool DescriptorStore::range_fill(const ObjectDescriptor& descriptor) {
  return rcache_.insert(descriptor);
}

void DescriptorStore::set_parent(LinearAddress centroid, LinearAddress parent_centroid) {
  auto it = table_.find(centroid);
  if (it == table_.end() || it->second.state != DescriptorState::Live) {
    throw std::logic_error{"DescriptorStore::set_parent: no live entry for centroid"};
  }
  it->second.parent_centroid = parent_centroid;
  dcache_.invalidate(centroid);
  rcache_.invalidate(centroid);
}

void DescriptorStore::collect_revoked_in(LinearAddress base, LinearAddress bound) {
  for (auto it = table_.begin(); it != table_.end();) {
    if (it->second.state == DescriptorState::Revoked && it->first >= base && it->first <= bound) {
      dcache_.invalidate(it->first);
      rcache_.invalidate(it->first);
      it = table_.erase(it);
    } else {
      ++it;
    }
  }
}

const ObjectDescriptor* DescriptorStore::find(LinearAddress centroid) const {
  auto it = table_.find(centroid);
  return it == table_.end() ? nullptr : &it->second;
}

}  // namespace cmem
