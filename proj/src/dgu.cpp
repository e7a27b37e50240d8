// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/dgu.hpp"

#include <stdexcept>

namespace cmem {

const char* fault_kind_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::MalformedTag: return "malformed_tag";
    case FaultKind::OutOfBounds: return "out_of_bounds";
    case FaultKind::UseAfterFree: return "use_after_free";
    case FaultKind::PermissionDenied: return "permission_denied";
    case FaultKind::DescriptorMiss: return "descriptor_miss";
    case FaultKind::DoubleFree: return "double_free";
  }
  return "unknown";
}

const char* access_kind_name(AccessKind kind) {
  switch (kind) {
    case AccessKind::Load: return "load";
    case AccessKind::Store: return "store";
    case AccessKind::Fetch: return "fetch";
  }
  return "unknown";
}

namespace {

bool permits(const Permissions& permissions, AccessKind kind) {
  switch (kind) {
    case AccessKind::Load: return permissions.read;
    case AccessKind::Store: return permissions.write;
    case AccessKind::Fetch: return permissions.execute;
  }
  return false;
}

ObjectDescriptor synthesize_aligned(const TaggedWord& word) {
  const BoundsDescriptor bounds = aligned_bounds(word);
  ObjectDescriptor d;
  d.centroid = centroid_pair(slot_of(word.address, word.exponent)).high;
  d.base = bounds.base;
  d.bound = bounds.bound;
  d.permissions = Permissions::read_write();
  d.level = AllocLevel::User;
  d.state = DescriptorState::Live;
  return d;
}

}  // namespace

Dgu::Dgu(DescriptorStore& store, DguConfig config) : store_(store), config_(config) {}

FaultOr<ObjectDescriptor> Dgu::derive_descriptor(const TaggedWord& word) {
  const LinearAddress centroid = centroid_pair(slot_of(word.address, word.exponent)).high;

  if (word.mode == PtrMode::Aligned) {
    if (config_.aligned_liveness) {
      LookupResult found = store_.lookup(centroid);
      if (found.status == LookupStatus::RevokedEntry) {
        return AccessFault{FaultKind::UseAfterFree, encode(word), word.address,
                           "aligned slot descriptor revoked"};
      }
      if (found.live()) {
        return *found.descriptor;
      }
      // Not registered by the allocator; fall back to the synthesized form.
    }
    return synthesize_aligned(word);
  }

  LookupResult found = store_.lookup(centroid);
  switch (found.status) {
    case LookupStatus::Hit:
    case LookupStatus::MissThenFill:
      return *found.descriptor;
    case LookupStatus::RevokedEntry:
      return AccessFault{FaultKind::UseAfterFree, encode(word), word.address,
                         "descriptor revoked"};
    case LookupStatus::NotFound:
      return AccessFault{FaultKind::DescriptorMiss, encode(word), word.address,
                         "no descriptor for centroid"};
  }
  return AccessFault{FaultKind::DescriptorMiss, encode(word), word.address, "unreachable"};
}

FaultOr<EffectiveAccess> Dgu::authenticate(const AccessRequest& request) {
  if (request.size == 0) {
    throw std::invalid_argument{"authenticate: zero-size access"};
  }

  // Phase 1: tag well-formedness.
  const std::optional<TaggedWord> word = decode(request.word);
  if (!word) {
    return AccessFault{FaultKind::MalformedTag, request.word, 0, "invalid tag exponent"};
  }

  // Phase 2: descriptor derivation.
  FaultOr<ObjectDescriptor> derived = derive_descriptor(*word);
  if (!derived) {
    return derived.fault();
  }
  const ObjectDescriptor& descriptor = derived.value();

  // Phase 3: address authentication over the whole byte span.
  const __int128 ea_wide = static_cast<__int128>(word->address) + request.offset;
  const __int128 last_wide = ea_wide + static_cast<__int128>(request.size) - 1;
  if (ea_wide < static_cast<__int128>(descriptor.base) ||
      last_wide > static_cast<__int128>(descriptor.bound)) {
    const LinearAddress ea = static_cast<LinearAddress>(static_cast<std::uint64_t>(ea_wide));
    return AccessFault{FaultKind::OutOfBounds, request.word, ea,
                       "address span outside descriptor bounds"};
  }
  const LinearAddress ea = static_cast<LinearAddress>(ea_wide);

  // Phase 4: access control.
  if (!permits(descriptor.permissions, request.kind)) {
    return AccessFault{FaultKind::PermissionDenied, request.word, ea,
                       std::string{access_kind_name(request.kind)} + " not permitted"};
  }

  // Phase 5: temporal check.
  if (descriptor.state != DescriptorState::Live) {
    return AccessFault{FaultKind::UseAfterFree, request.word, ea, "descriptor revoked"};
  }

  return EffectiveAccess{ea, descriptor};
}

FaultOr<BoundsDescriptor> Dgu::derivable_bounds(const TaggedWord& word) {
  if (word.mode == PtrMode::Aligned) {
    return aligned_bounds(word);
  }
  const LinearAddress centroid = centroid_pair(slot_of(word.address, word.exponent)).high;
  LookupResult found = store_.lookup(centroid);
  switch (found.status) {
    case LookupStatus::Hit:
    case LookupStatus::MissThenFill:
      return found.descriptor->bounds();
    case LookupStatus::RevokedEntry:
      return AccessFault{FaultKind::UseAfterFree, encode(word), word.address,
                         "descriptor revoked"};
    case LookupStatus::NotFound:
      return AccessFault{FaultKind::DescriptorMiss, encode(word), word.address,
                         "dangling centroid word"};
  }
  return AccessFault{FaultKind::DescriptorMiss, encode(word), word.address, "unreachable"};
}

FaultOr<TaggedWord> Dgu::ptr_add(const TaggedWord& word, std::int64_t delta) {
  FaultOr<BoundsDescriptor> bounds = derivable_bounds(word);
  if (!bounds) {
    return bounds.fault();
  }
  const __int128 target = static_cast<__int128>(word.address) + delta;
  const __int128 base = static_cast<__int128>(bounds.value().base);
  const __int128 bound = static_cast<__int128>(bounds.value().bound);
  const __int128 allowed_top = config_.allow_one_past_arith ? bound + 1 : bound;
  if (target < base || target > allowed_top ||
      target > static_cast<__int128>(kAddressMask)) {
    return AccessFault{FaultKind::OutOfBounds, encode(word),
                       static_cast<LinearAddress>(static_cast<std::uint64_t>(target)),
                       "pointer arithmetic leaves the derivable bounds"};
  }
  return TaggedWord{word.mode, word.exponent, static_cast<LinearAddress>(target)};
}

}  // namespace cmem
