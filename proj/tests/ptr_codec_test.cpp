// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>
#include <stdexcept>

#include "centroidmem/ptr_codec.hpp"

using namespace cmem;

namespace {

// Independent oracles. These deliberately avoid the bit tricks under test.

// Smallest N whose slot holds both endpoints, found by linear scan.
int min_exponent_oracle(std::uint64_t start, std::uint64_t end) {
  for (int n = 1;; ++n) {
    if ((start >> n) == (end >> n)) return n;
  }
}

// Slot membership by brute force: walk down/up from addr while the quotient
// stays the same.
std::uint64_t slot_base_oracle(std::uint64_t addr, int n) {
  std::uint64_t base = addr;
  while (base > 0 && ((base - 1) >> n) == (addr >> n)) --base;
  return base;
}

std::uint64_t slot_last_oracle(std::uint64_t addr, int n) {
  std::uint64_t last = addr;
  while (((last + 1) >> n) == (addr >> n)) ++last;
  return last;
}

}  // namespace

TEST_CASE("min_slot_exponent matches the linear-scan oracle and frozen values") {
  CHECK(min_exponent_oracle(0x1234, 0x1260) == 7);
  CHECK(min_slot_exponent(0x1234, 0x1260) == 7);

  CHECK(min_slot_exponent(0x1000, 0x1000) == 1);  // zero XOR clamps to the minimum

  CHECK(min_exponent_oracle(0x0000, 0x00FF) == 8);
  CHECK(min_slot_exponent(0x0000, 0x00FF) == 8);

  std::mt19937_64 rng{7};
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t a = rng() & kAddressMask;
    const std::uint64_t b = rng() & kAddressMask;
    const std::uint64_t lo = a < b ? a : b;
    const std::uint64_t hi = a < b ? b : a;
    CHECK(min_slot_exponent(lo, hi) == min_exponent_oracle(lo, hi));
  }

  CHECK_THROWS_AS(min_slot_exponent(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(min_slot_exponent(0, ~std::uint64_t{0}), std::invalid_argument);
}

TEST_CASE("slot_base clears the low bits") {
  CHECK(slot_base(0x1234, 4) == 0x1230);
  CHECK(slot_base_oracle(0x1234, 4) == 0x1230);
  CHECK(slot_base(0x1230, 4) == 0x1230);
  CHECK(slot_base(0x1234, 8) == 0x1200);
  CHECK(slot_base_oracle(0x1234, 8) == 0x1200);

  // The byte-walking oracle is only tractable for small slots; wide slots are
  // covered by the containment properties below.
  std::mt19937_64 rng{11};
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t addr = rng() & kAddressMask;
    const int n = 1 + static_cast<int>(rng() % 12);
    CHECK(slot_base(addr, n) == slot_base_oracle(addr, n));
  }
}

TEST_CASE("slot containment holds for every address and exponent") {
  std::mt19937_64 rng{13};
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t addr = rng() & kAddressMask;
    const int n = 1 + static_cast<int>(rng() % 56);
    const SlotSpec slot = slot_of(addr, n);
    CHECK(slot.base <= addr);
    CHECK(addr <= slot.last());
    CHECK(slot.contains(addr));
  }
}

TEST_CASE("aligned_bounds covers exactly the slot") {
  const BoundsDescriptor b1 = aligned_bounds({PtrMode::Aligned, 4, 0x1234});
  CHECK(b1.base == 0x1230);
  CHECK(b1.bound == 0x123F);
  CHECK(slot_base_oracle(0x1234, 4) == b1.base);
  CHECK(slot_last_oracle(0x1234, 4) == b1.bound);

  const BoundsDescriptor b2 = aligned_bounds({PtrMode::Aligned, 1, 0x0001});
  CHECK(b2.base == 0x0000);
  CHECK(b2.bound == 0x0001);

  const BoundsDescriptor b3 = aligned_bounds({PtrMode::Aligned, 12, 0x402FFF});
  CHECK(b3.base == 0x402000);
  CHECK(b3.bound == 0x402FFF);

  CHECK_THROWS_AS(aligned_bounds({PtrMode::Centroid, 4, 0x1234}), std::invalid_argument);
}

TEST_CASE("lowfat_bounds follows the sub-block formulas") {
  const SlotSpec slot{0x1000, 8};
  const BoundsDescriptor b1 = lowfat_bounds(slot, {8, 6, 1, 2});
  CHECK(b1.base == 0x1040);
  CHECK(b1.bound == 0x10BF);
  // Cross-check by enumerating sub-blocks: block k spans
  // [base + k*64, base + k*64 + 63].
  CHECK(b1.base == 0x1000 + 1 * 64);
  CHECK(b1.bound == 0x1000 + 2 * 64 + 63);

  const BoundsDescriptor full = lowfat_bounds(slot, {8, 6, 0, 3});
  CHECK(full.base == 0x1000);
  CHECK(full.bound == 0x10FF);
  CHECK(full == aligned_bounds({PtrMode::Aligned, 8, 0x1000}));

  const BoundsDescriptor single = lowfat_bounds({0x2000, 7}, {7, 5, 2, 2});
  CHECK(single.base == 0x2040);
  CHECK(single.bound == 0x205F);

  CHECK_THROWS_AS(lowfat_bounds(slot, {8, 6, 3, 1}), std::invalid_argument);  // B > T
  CHECK_THROWS_AS(lowfat_bounds(slot, {7, 5, 0, 1}), std::invalid_argument);  // wrong N
  CHECK_THROWS_AS(lowfat_bounds(slot, {8, 6, 0, 4}), std::invalid_argument);  // T past slot
}

TEST_CASE("lowfat bounds stay inside the slot; full cover equals aligned bounds") {
  std::mt19937_64 rng{17};
  for (int i = 0; i < 2000; ++i) {
    const int n = 2 + static_cast<int>(rng() % 20);
    const int e = static_cast<int>(rng() % n);
    const int m = n - e;
    const std::uint64_t blocks = std::uint64_t{1} << m;
    std::uint64_t b = rng() % blocks;
    std::uint64_t t = rng() % blocks;
    if (b > t) std::swap(b, t);
    const SlotSpec slot = slot_of(rng() & kAddressMask, n);
    const LowFatFields fields{static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(e),
                              static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(t)};
    const BoundsDescriptor bounds = lowfat_bounds(slot, fields);
    CHECK(bounds.base <= bounds.bound);
    CHECK(slot.contains(bounds.base));
    CHECK(slot.contains(bounds.bound));
    if (b == 0 && t == blocks - 1) {
      CHECK(bounds == aligned_bounds({PtrMode::Aligned, static_cast<std::uint8_t>(n), slot.base}));
    }
  }
}

TEST_CASE("centroid_pair bisects the slot") {
  const CentroidPair p1 = centroid_pair({0x100, 4});
  CHECK(p1.low == 0x107);
  CHECK(p1.high == 0x108);
  // Midpoint bisection: exactly 2^(N-1) slot bytes at or below low, and the
  // same count at or above high.
  CHECK(p1.low - 0x100 + 1 == 8);
  CHECK(0x10F - p1.high + 1 == 8);

  const CentroidPair p2 = centroid_pair({0x000, 1});
  CHECK(p2.low == 0x000);
  CHECK(p2.high == 0x001);

  const CentroidPair p3 = centroid_pair({0x1200, 7});
  CHECK(p3.low == 0x123F);
  CHECK(p3.high == 0x1240);

  std::mt19937_64 rng{19};
  for (int i = 0; i < 2000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 56);
    const SlotSpec slot = slot_of(rng() & kAddressMask, n);
    const CentroidPair pair = centroid_pair(slot);
    CHECK(pair.high == pair.low + 1);
    CHECK(slot.contains(pair.low));
    CHECK(slot.contains(pair.high));
    CHECK(pair.low - slot.base + 1 == slot.size() / 2);
    CHECK(slot.last() - pair.high + 1 == slot.size() / 2);
  }
}

TEST_CASE("canonical_centroid lies inside the range") {
  CHECK(canonical_centroid(0x102, 0x10C) == 0x108);
  CHECK(canonical_centroid(0x1200, 0x127F) == 0x1240);
  CHECK(canonical_centroid(0x0000, 0x0001) == 0x0001);
  CHECK_THROWS_AS(canonical_centroid(5, 5), std::invalid_argument);
  CHECK_THROWS_AS(canonical_centroid(6, 5), std::invalid_argument);
}

TEST_CASE("centroid containment: exhaustive over an 8-bit space") {
  std::uint64_t violations = 0;
  for (std::uint64_t start = 0; start < 256; ++start) {
    for (std::uint64_t end = start + 1; end < 256; ++end) {
      const int n = min_slot_exponent(start, end);
      const CentroidPair pair = centroid_pair(slot_of(start, n));
      if (start > pair.low || pair.high > end) ++violations;
      // Minimality: no smaller slot holds both endpoints.
      if (n > 1 && (start >> (n - 1)) == (end >> (n - 1))) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("exponent recovery inverts centroid_pair for every N") {
  CHECK(exponent_from_centroid(0x107, CentroidKind::Low) == 4);
  CHECK(exponent_from_centroid(0x108, CentroidKind::High) == 4);
  CHECK(exponent_from_centroid(0x001, CentroidKind::High) == 1);

  std::mt19937_64 rng{23};
  for (int n = kExponentMin; n <= kExponentMax; ++n) {
    const SlotSpec slot = slot_of(rng() & kAddressMask, n);
    const CentroidPair pair = centroid_pair(slot);
    CHECK(exponent_from_centroid(pair.low, CentroidKind::Low) == n);
    CHECK(exponent_from_centroid(pair.high, CentroidKind::High) == n);
  }
}

TEST_CASE("encode produces the documented layout") {
  // Independent evaluation: assemble the word arithmetically.
  const std::uint64_t expected_centroid =
      std::uint64_t{1} * (std::uint64_t{1} << 63) + std::uint64_t{12} * (std::uint64_t{1} << 57) +
      std::uint64_t{0x402FFF};
  CHECK(expected_centroid == 0x9800000000402FFFull);
  CHECK(encode(PtrMode::Centroid, 12, 0x402FFF) == 0x9800000000402FFFull);

  const std::uint64_t expected_aligned =
      std::uint64_t{4} * (std::uint64_t{1} << 57) + std::uint64_t{0x1234};
  CHECK(expected_aligned == 0x0800000000001234ull);
  CHECK(encode(PtrMode::Aligned, 4, 0x1234) == 0x0800000000001234ull);

  CHECK_THROWS_AS(encode(PtrMode::Aligned, 0, 0x1234), std::invalid_argument);
  CHECK_THROWS_AS(encode(PtrMode::Aligned, 57, 0x1234), std::invalid_argument);
  CHECK_THROWS_AS(encode(PtrMode::Aligned, 4, ~std::uint64_t{0}), std::invalid_argument);
}

TEST_CASE("decode is the exact inverse of encode") {
  std::mt19937_64 rng{29};
  for (int n = kExponentMin; n <= kExponentMax; ++n) {
    for (int i = 0; i < 64; ++i) {
      const TaggedWord word{rng() % 2 == 0 ? PtrMode::Aligned : PtrMode::Centroid,
                            static_cast<std::uint8_t>(n), rng() & kAddressMask};
      const auto back = decode(encode(word));
      REQUIRE(back.has_value());
      CHECK(*back == word);
    }
  }

  // Malformed exponent fields decode to nothing.
  CHECK(!decode(0x0000000000001234ull).has_value());                 // N = 0
  CHECK(!decode(std::uint64_t{57} << kAddressBits).has_value());     // N = 57
  CHECK(!decode(std::uint64_t{63} << kAddressBits).has_value());     // N = 63
}

TEST_CASE("in_slot_check equals the interval test on a 12-bit space") {
  CHECK(in_slot_check(0x123F, SlotSpec{0x1230, 4}));
  CHECK(!in_slot_check(0x1240, SlotSpec{0x1230, 4}));

  std::uint64_t mismatches = 0;
  for (int n = 1; n <= 12; ++n) {
    for (std::uint64_t base = 0; base < 4096; base += std::uint64_t{1} << n) {
      const SlotSpec slot{base, static_cast<std::uint8_t>(n)};
      for (std::uint64_t addr = 0; addr < 4096; ++addr) {
        const bool interval = slot.base <= addr && addr <= slot.last();
        if (in_slot_check(addr, slot) != interval) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("cid prefix is invariant across the slot") {
  std::mt19937_64 rng{31};
  for (int i = 0; i < 500; ++i) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const SlotSpec slot = slot_of(rng() & kAddressMask, n);
    const LinearAddress prefix = cid_prefix(slot);
    for (int k = 0; k < 8; ++k) {
      const LinearAddress inside = slot.base + rng() % slot.size();
      CHECK((inside >> n) == prefix);
    }
  }
}

TEST_CASE("disjoint ranges have distinct canonical centroids") {
  std::mt19937_64 rng{37};
  for (int round = 0; round < 200; ++round) {
    std::uint64_t cursor = rng() % 32;
    std::set<LinearAddress> seen;
    while (true) {
      const std::uint64_t gap = rng() % 16;
      const std::uint64_t size = 2 + rng() % 64;
      if (cursor + gap + size > 4096) break;
      const std::uint64_t start = cursor + gap;
      const std::uint64_t end = start + size - 1;
      const LinearAddress centroid = canonical_centroid(start, end);
      CHECK(start <= centroid);
      CHECK(centroid <= end);
      CHECK(seen.insert(centroid).second);
      cursor = end + 1;
    }
  }
}
