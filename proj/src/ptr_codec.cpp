// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/ptr_codec.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace cmem {

namespace {

void require_canonical(LinearAddress addr, const char* what) {
  if (!is_canonical(addr)) {
    throw std::invalid_argument{std::string{what} + ": address is not canonical"};
  }
}

void require_slot_exponent(int n, const char* what) {
  if (n < kExponentMin || n > kAddressBits) {
    throw std::invalid_argument{std::string{what} + ": slot exponent out of range"};
  }
}

}  // namespace

std::uint8_t min_slot_exponent(LinearAddress start, LinearAddress end) {
  if (start > end) {
    throw std::invalid_argument{"min_slot_exponent: start > end"};
  }
  require_canonical(start, "min_slot_exponent");
  require_canonical(end, "min_slot_exponent");
  // start and end land in the same 2^N slot exactly when no bit at or above
  // position N differs, so the smallest such N is the bit length of the XOR.
  const int width = std::bit_width(start ^ end);
  return static_cast<std::uint8_t>(width < kExponentMin ? kExponentMin : width);
}

LinearAddress slot_base(LinearAddress addr, int n) {
  require_slot_exponent(n, "slot_base");
  return addr & ~((std::uint64_t{1} << n) - 1);
}

SlotSpec slot_of(LinearAddress addr, int n) {
  return SlotSpec{slot_base(addr, n), static_cast<std::uint8_t>(n)};
}

bool in_slot_check(LinearAddress addr, const SlotSpec& slot) {
  return (addr >> slot.exponent) == (slot.base >> slot.exponent);
}

LinearAddress cid_prefix(const SlotSpec& slot) {
  return slot.base >> slot.exponent;
}

BoundsDescriptor aligned_bounds(const TaggedWord& word) {
  if (word.mode != PtrMode::Aligned) {
    throw std::invalid_argument{"aligned_bounds: centroid-mode word has no derivable bounds"};
  }
  const LinearAddress base = slot_base(word.address, word.exponent);
  return BoundsDescriptor{base, base | ((std::uint64_t{1} << word.exponent) - 1)};
}

BoundsDescriptor lowfat_bounds(const SlotSpec& slot, const LowFatFields& fields) {
  if (fields.exponent != slot.exponent) {
    throw std::invalid_argument{"lowfat_bounds: fields disagree with slot exponent"};
  }
  if (fields.sub_block_exponent > fields.exponent) {
    throw std::invalid_argument{"lowfat_bounds: sub-block exponent exceeds slot exponent"};
  }
  if (fields.first_block > fields.last_block) {
    throw std::invalid_argument{"lowfat_bounds: first block index above last"};
  }
  const int m = fields.block_count_exponent();
  if (fields.last_block >= (std::uint64_t{1} << m)) {
    throw std::invalid_argument{"lowfat_bounds: block index outside the slot"};
  }
  const int e = fields.sub_block_exponent;
  const LinearAddress base = slot.base | (std::uint64_t{fields.first_block} << e);
  const LinearAddress bound =
      slot.base | (std::uint64_t{fields.last_block} << e) | ((std::uint64_t{1} << e) - 1);
  return BoundsDescriptor{base, bound};
}

LowFatFields lowfat_fit(std::uint64_t size, int block_count_exponent) {
  if (size == 0) {
    throw std::invalid_argument{"lowfat_fit: zero size"};
  }
  const std::uint64_t widened = size < 2 ? 2 : size;
  int n = std::bit_width(widened - 1);
  if (n < kExponentMin) n = kExponentMin;
  const int e = n > block_count_exponent ? n - block_count_exponent : 0;
  const std::uint64_t sub_block = std::uint64_t{1} << e;
  const std::uint64_t blocks = (size + sub_block - 1) >> e;
  return LowFatFields{static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(e), 0,
                      static_cast<std::uint32_t>(blocks - 1)};
}

CentroidPair centroid_pair(const SlotSpec& slot) {
  require_slot_exponent(slot.exponent, "centroid_pair");
  const LinearAddress half = std::uint64_t{1} << (slot.exponent - 1);
  return CentroidPair{slot.base | (half - 1), slot.base | half};
}

LinearAddress canonical_centroid(LinearAddress start, LinearAddress end) {
  if (start >= end) {
    throw std::invalid_argument{"canonical_centroid: range must span at least two bytes"};
  }
  const std::uint8_t n = min_slot_exponent(start, end);
  return centroid_pair(slot_of(start, n)).high;
}

std::uint8_t exponent_from_centroid(LinearAddress centroid, CentroidKind kind) {
  if (kind == CentroidKind::Low) {
    return static_cast<std::uint8_t>(std::countr_one(centroid) + 1);
  }
  return static_cast<std::uint8_t>(std::countr_zero(centroid) + 1);
}

std::uint64_t encode(PtrMode mode, int exponent, LinearAddress addr) {
  if (exponent < kExponentMin || exponent > kExponentMax) {
    throw std::invalid_argument{"encode: exponent outside [1, 56]"};
  }
  require_canonical(addr, "encode");
  return (static_cast<std::uint64_t>(mode) << 63) |
         (static_cast<std::uint64_t>(exponent) << kAddressBits) | addr;
}

std::uint64_t encode(const TaggedWord& word) {
  return encode(word.mode, word.exponent, word.address);
}

std::optional<TaggedWord> decode(std::uint64_t word) {
  const int exponent = static_cast<int>((word >> kAddressBits) & 0x3F);
  if (exponent < kExponentMin || exponent > kExponentMax) {
    return std::nullopt;
  }
  return TaggedWord{
      (word >> 63) != 0 ? PtrMode::Centroid : PtrMode::Aligned,
      static_cast<std::uint8_t>(exponent),
      word & kAddressMask,
  };
}

}  // namespace cmem
