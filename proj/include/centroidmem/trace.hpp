// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "centroidmem/descriptor_store.hpp"
#include "centroidmem/dgu.hpp"
#include "centroidmem/ptr_codec.hpp"

namespace cmem {

enum class TraceLabel : std::uint8_t { Benign, SpatialViolation, TemporalViolation };
enum class EventType : std::uint8_t { Alloc, Free, Access, RawAccess };

const char* trace_label_name(TraceLabel label);
const char* event_type_name(EventType type);
const char* alloc_level_name(AllocLevel level);
const char* ptr_mode_name(PtrMode mode);

/// One line of a trace file. Field usage depends on the event type:
/// alloc uses object_id/size/level/mode_override, free uses object_id,
/// access uses object_id/offset/size/kind, raw_access uses
/// word/offset/size/kind. Any event may carry a ground-truth label.
struct TraceEvent {
  std::uint64_t seq = 0;
  EventType type = EventType::Alloc;
  std::uint64_t object_id = 0;
  std::uint64_t size = 0;
  AllocLevel level = AllocLevel::User;
  std::optional<PtrMode> mode_override;
  std::int64_t offset = 0;
  AccessKind kind = AccessKind::Load;
  std::uint64_t word = 0;
  std::optional<TraceLabel> label;

  static TraceEvent alloc(std::uint64_t seq, std::uint64_t object_id, std::uint64_t size,
                          AllocLevel level = AllocLevel::User,
                          std::optional<PtrMode> mode_override = std::nullopt);
  static TraceEvent free_of(std::uint64_t seq, std::uint64_t object_id);
  static TraceEvent access(std::uint64_t seq, std::uint64_t object_id, std::int64_t offset,
                           std::uint64_t size, AccessKind kind = AccessKind::Load);
  static TraceEvent raw_access(std::uint64_t seq, std::uint64_t word, std::int64_t offset,
                               std::uint64_t size, AccessKind kind = AccessKind::Load);
};

struct Trace {
  std::vector<TraceEvent> events;

  /// Rewrites seq to the 1-based position of each event.
  void resequence();
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::uint64_t line, const std::string& message);
  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

inline constexpr int kTraceVersion = 1;

std::string hex_word(std::uint64_t value);
std::optional<std::uint64_t> parse_hex_word(const std::string& text);

/// One JSON object per line; the first line is the version header {"v":1}.
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(std::istream& in);

void save_trace(const Trace& trace, const std::string& path);
Trace load_trace(const std::string& path);

}  // namespace cmem
