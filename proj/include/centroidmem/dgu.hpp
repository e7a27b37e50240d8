// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "centroidmem/descriptor_store.hpp"
#include "centroidmem/ptr_codec.hpp"

namespace cmem {

enum class AccessKind : std::uint8_t { Load, Store, Fetch };

enum class FaultKind : std::uint8_t {
  MalformedTag,
  OutOfBounds,
  UseAfterFree,
  PermissionDenied,
  DescriptorMiss,
  DoubleFree,
};

const char* fault_kind_name(FaultKind kind);
const char* access_kind_name(AccessKind kind);

/// A blocked request. Exactly one kind per fault; the first failing pipeline
/// phase decides which.
struct AccessFault {
  FaultKind kind = FaultKind::MalformedTag;
  std::uint64_t word = 0;
  LinearAddress effective_address = 0;
  std::string detail;
};

/// A memory demand: raw encoded word plus the offset/size/kind of the access.
struct AccessRequest {
  std::uint64_t word = 0;
  std::int64_t offset = 0;
  std::uint64_t size = 1;
  AccessKind kind = AccessKind::Load;
};

/// A request that survived every check and may be issued downstream.
struct EffectiveAccess {
  LinearAddress effective_address = 0;
  ObjectDescriptor descriptor{};

  LinearAddress last_byte(std::uint64_t size) const { return effective_address + size - 1; }
};

/// Either the successful result of a pipeline stage or the fault that
/// blocked it.
template <typename T>
class FaultOr {
 public:
  FaultOr(T value) : value_(std::move(value)) {}
  FaultOr(AccessFault fault) : value_(std::move(fault)) {}

  bool ok() const { return std::holds_alternative<T>(value_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { return std::get<T>(value_); }
  T& value() { return std::get<T>(value_); }
  const AccessFault& fault() const { return std::get<AccessFault>(value_); }

 private:
  std::variant<T, AccessFault> value_;
};

struct DguConfig {
  /// Derive the centroid from aligned-mode words too and consult the store,
  /// so freed aligned objects are caught (requires the allocator to register
  /// aligned slots).
  bool aligned_liveness = false;
  /// Tolerate pointer arithmetic landing one byte past the bounds, the C
  /// idiom. Accesses through such a pointer still fault; only ptr_add is
  /// relaxed.
  bool allow_one_past_arith = false;
};

/// Descriptor generation and the in-order security check pipeline.
///
/// Every access walks the same phases: tag well-formedness, descriptor
/// derivation, address authentication against [base, bound], access control
/// against the descriptor's permissions, and the temporal liveness check.
/// A request that fails any phase is blocked, never issued.
class Dgu {
 public:
  explicit Dgu(DescriptorStore& store, DguConfig config = {});

  /// Aligned words synthesize their descriptor from the tag alone; centroid
  /// words derive the slot centroid and fetch the stored descriptor.
  FaultOr<ObjectDescriptor> derive_descriptor(const TaggedWord& word);

  FaultOr<EffectiveAccess> authenticate(const AccessRequest& request);

  /// Pointer arithmetic with the tag preserved. The result must stay inside
  /// the derivable bounds: the slot for aligned words, the stored descriptor
  /// range for centroid words.
  FaultOr<TaggedWord> ptr_add(const TaggedWord& word, std::int64_t delta);

  const DguConfig& config() const { return config_; }

 private:
  FaultOr<BoundsDescriptor> derivable_bounds(const TaggedWord& word);

  DescriptorStore& store_;
  DguConfig config_;
};

}  // namespace cmem
