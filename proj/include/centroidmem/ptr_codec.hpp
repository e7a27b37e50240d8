// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

namespace cmem {

/// A simulated virtual address. The simulator models a canonical 57-bit
/// address space: bits 56..0 carry the address, bits 63..57 must be zero.
using LinearAddress = std::uint64_t;

inline constexpr int kAddressBits = 57;
inline constexpr LinearAddress kAddressMask = (std::uint64_t{1} << kAddressBits) - 1;

/// Slot exponents N valid in a tag. N=0 is unrepresentable by design:
/// single-byte objects are widened to 2-byte slots before encoding.
inline constexpr int kExponentMin = 1;
inline constexpr int kExponentMax = 56;

constexpr bool is_canonical(LinearAddress addr) noexcept {
  return (addr & ~kAddressMask) == 0;
}

enum class PtrMode : std::uint8_t {
  Aligned = 0,   ///< bounds derived from the tag alone, no table lookup
  Centroid = 1,  ///< bounds held by a stored descriptor keyed by the slot centroid
};

/// Decoded form of a 64-bit tagged pointer word.
///
/// Packed layout: bit 63 = mode selector, bits 62..57 = slot exponent N,
/// bits 56..0 = linear address. This is the wire contract for trace files
/// that carry raw encoded words.
struct TaggedWord {
  PtrMode mode = PtrMode::Aligned;
  std::uint8_t exponent = kExponentMin;  // N, in [1, 56]
  LinearAddress address = 0;

  friend bool operator==(const TaggedWord&, const TaggedWord&) = default;
};

/// A 2^N-byte aligned memory slot: the minimal aligned region containing an
/// object. All bounds and centroid arithmetic derives from slots.
struct SlotSpec {
  LinearAddress base = 0;                // multiple of 2^exponent
  std::uint8_t exponent = kExponentMin;  // N

  constexpr std::uint64_t size() const noexcept { return std::uint64_t{1} << exponent; }
  constexpr LinearAddress last() const noexcept { return base | (size() - 1); }
  constexpr bool contains(LinearAddress addr) const noexcept {
    return (addr >> exponent) == (base >> exponent);
  }

  friend bool operator==(const SlotSpec&, const SlotSpec&) = default;
};

/// Inclusive address range [base, bound] of an allocated object; bound is the
/// last valid byte, not one past it.
struct BoundsDescriptor {
  LinearAddress base = 0;
  LinearAddress bound = 0;

  constexpr std::uint64_t size() const noexcept { return bound - base + 1; }
  constexpr bool contains(LinearAddress addr) const noexcept {
    return base <= addr && addr <= bound;
  }
  /// True when the n-byte span starting at addr lies entirely inside the range.
  constexpr bool contains_span(LinearAddress addr, std::uint64_t n) const noexcept {
    return n >= 1 && addr >= base && addr <= bound && n - 1 <= bound - addr;
  }

  friend bool operator==(const BoundsDescriptor&, const BoundsDescriptor&) = default;
};

/// Sub-block refinement of a slot: the 2^N slot is split into 2^M sub-blocks
/// of 2^E bytes (M = N - E); an object occupies sub-blocks B..T inclusive.
struct LowFatFields {
  std::uint8_t exponent = kExponentMin;  // N
  std::uint8_t sub_block_exponent = 0;   // E
  std::uint32_t first_block = 0;         // B
  std::uint32_t last_block = 0;          // T

  constexpr int block_count_exponent() const noexcept { return exponent - sub_block_exponent; }

  friend bool operator==(const LowFatFields&, const LowFatFields&) = default;
};

/// The two addresses bisecting a slot: low = ...0111, high = ...1000 at the
/// slot midpoint. A minimal slot's object necessarily contains both, so either
/// one uniquely identifies the live object.
struct CentroidPair {
  LinearAddress low = 0;
  LinearAddress high = 0;
};

enum class CentroidKind : std::uint8_t { Low, High };

/// Smallest N >= 1 such that start and end share one 2^N-aligned slot.
/// Computed as the bit length of start XOR end, clamped to kExponentMin.
/// Throws std::invalid_argument when start > end or either is non-canonical.
std::uint8_t min_slot_exponent(LinearAddress start, LinearAddress end);

/// addr with its low N bits cleared. Valid for n in [1, kAddressBits].
LinearAddress slot_base(LinearAddress addr, int n);

/// The N-slot containing addr.
SlotSpec slot_of(LinearAddress addr, int n);

/// True iff addr falls in the slot, i.e. the address bits above N are
/// invariant between addr and the slot base.
bool in_slot_check(LinearAddress addr, const SlotSpec& slot);

/// The slot-invariant address prefix shared by every byte of the slot
/// (base >> N). Every address inside the slot reproduces it.
LinearAddress cid_prefix(const SlotSpec& slot);

/// Bounds of an aligned-mode word: the full slot named by its tag.
/// Base = address & ~(2^N - 1), Bound = Base | (2^N - 1).
/// Throws std::invalid_argument for centroid-mode input.
BoundsDescriptor aligned_bounds(const TaggedWord& word);

/// Sub-block bounds: Base = SlotBase | (B << E), Bound = SlotBase | (T << E)
/// | (2^E - 1). Throws std::invalid_argument when the fields are inconsistent
/// with the slot or B > T.
BoundsDescriptor lowfat_bounds(const SlotSpec& slot, const LowFatFields& fields);

/// Smallest sub-block cover for an object of `size` bytes placed at the base
/// of its minimal slot, with 2^block_count_exponent sub-blocks per slot.
LowFatFields lowfat_fit(std::uint64_t size, int block_count_exponent);

/// The two midpoint addresses of a slot:
///   low  = base | (2^(N-1) - 1)
///   high = base | 2^(N-1)
/// high = low + 1 and both lie inside the slot.
CentroidPair centroid_pair(const SlotSpec& slot);

/// The canonical object identifier for the range [start, end]: the high
/// centroid of the minimal slot containing the range. Guaranteed to lie in
/// [start, end]. Throws std::invalid_argument unless start < end (single-byte
/// ranges are widened by the allocator before this is called).
LinearAddress canonical_centroid(LinearAddress start, LinearAddress end);

/// Recover the slot exponent from a centroid address: count-trailing-ones + 1
/// for the low centroid, count-trailing-zeros + 1 for the high one. Garbage
/// input yields a garbage exponent; callers validate via descriptor lookup.
std::uint8_t exponent_from_centroid(LinearAddress centroid, CentroidKind kind);

/// Pack a tag into its 64-bit wire form: (mode << 63) | (N << 57) | address.
/// Throws std::invalid_argument when N is outside [1, 56] or the address is
/// non-canonical.
std::uint64_t encode(PtrMode mode, int exponent, LinearAddress addr);
std::uint64_t encode(const TaggedWord& word);

/// Exact inverse of encode. Returns nullopt for a malformed tag (exponent
/// field 0 or above 56).
std::optional<TaggedWord> decode(std::uint64_t word);

}  // namespace cmem
