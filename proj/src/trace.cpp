// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/trace.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"

namespace cmem {

using nlohmann::json;

const char* trace_label_name(TraceLabel label) {
  switch (label) {
    case TraceLabel::Benign: return "benign";
    case TraceLabel::SpatialViolation: return "spatial_violation";
    case TraceLabel::TemporalViolation: return "temporal_violation";
  }
  return "unknown";
}

const char* event_type_name(EventType type) {
  switch (type) {
    case EventType::Alloc: return "alloc";
    case EventType::Free: return "free";
    case EventType::Access: return "access";
    case EventType::RawAccess: return "raw_access";
  }
  return "unknown";
}

const char* alloc_level_name(AllocLevel level) {
  return level == AllocLevel::User ? "user" : "system";
}

const char* ptr_mode_name(PtrMode mode) {
  return mode == PtrMode::Aligned ? "aligned" : "centroid";
}

TraceEvent TraceEvent::alloc(std::uint64_t seq, std::uint64_t object_id, std::uint64_t size,
                             AllocLevel level, std::optional<PtrMode> mode_override) {
  TraceEvent e;
  e.seq = seq;
  e.type = EventType::Alloc;
  e.object_id = object_id;
  e.size = size;
  e.level = level;
  e.mode_override = mode_override;
  return e;
}

TraceEvent TraceEvent::free_of(std::uint64_t seq, std::uint64_t object_id) {
  TraceEvent e;
  e.seq = seq;
  e.type = EventType::Free;
  e.object_id = object_id;
  return e;
}

TraceEvent TraceEvent::access(std::uint64_t seq, std::uint64_t object_id, std::int64_t offset,
                              std::uint64_t size, AccessKind kind) {
  TraceEvent e;
  e.seq = seq;
  e.type = EventType::Access;
  e.object_id = object_id;
  e.offset = offset;
  e.size = size;
  e.kind = kind;
  return e;
}

TraceEvent TraceEvent::raw_access(std::uint64_t seq, std::uint64_t word, std::int64_t offset,
                                  std::uint64_t size, AccessKind kind) {
  TraceEvent e;
  e.seq = seq;
  e.type = EventType::RawAccess;
  e.word = word;
  e.offset = offset;
  e.size = size;
  e.kind = kind;
  return e;
}

void Trace::resequence() {
  std::uint64_t seq = 1;
  for (auto& event : events) {
    event.seq = seq++;
  }
}

TraceParseError::TraceParseError(std::uint64_t line, const std::string& message)
    : std::runtime_error{"trace line " + std::to_string(line) + ": " + message}, line_(line) {}

std::string hex_word(std::uint64_t value) {
  std::ostringstream out;
  out << "0x" << std::hex << value;
  return out.str();
}

std::optional<std::uint64_t> parse_hex_word(const std::string& text) {
  std::string_view body = text;
  if (body.size() > 2 && (body.substr(0, 2) == "0x" || body.substr(0, 2) == "0X")) {
    body.remove_prefix(2);
  }
  if (body.empty() || body.size() > 16) {
    return std::nullopt;
  }
  std::uint64_t value = 0;
  for (char c : body) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else return std::nullopt;
    value = (value << 4) | static_cast<std::uint64_t>(digit);
  }
  return value;
}

namespace {

json event_to_json(const TraceEvent& e) {
  json line;
  line["seq"] = e.seq;
  line["type"] = event_type_name(e.type);
  switch (e.type) {
    case EventType::Alloc:
      line["object_id"] = e.object_id;
      line["size"] = e.size;
      line["level"] = alloc_level_name(e.level);
      if (e.mode_override) line["mode_override"] = ptr_mode_name(*e.mode_override);
      break;
    case EventType::Free:
      line["object_id"] = e.object_id;
      break;
    case EventType::Access:
      line["object_id"] = e.object_id;
      line["offset"] = e.offset;
      line["size"] = e.size;
      line["kind"] = access_kind_name(e.kind);
      break;
    case EventType::RawAccess:
      line["word"] = hex_word(e.word);
      line["offset"] = e.offset;
      line["size"] = e.size;
      line["kind"] = access_kind_name(e.kind);
      break;
  }
  if (e.label) line["label"] = trace_label_name(*e.label);
  return line;
}

template <typename T>
T required(const json& line, const char* field, std::uint64_t line_no) {
  if (!line.contains(field)) {
    throw TraceParseError{line_no, std::string{"missing field '"} + field + "'"};
  }
  try {
    return line.at(field).get<T>();
  } catch (const json::exception&) {
    throw TraceParseError{line_no, std::string{"field '"} + field + "' has the wrong type"};
  }
}

AccessKind parse_kind(const std::string& name, std::uint64_t line_no) {
  if (name == "load") return AccessKind::Load;
  if (name == "store") return AccessKind::Store;
  if (name == "fetch") return AccessKind::Fetch;
  throw TraceParseError{line_no, "unknown access kind '" + name + "'"};
}

AllocLevel parse_level(const std::string& name, std::uint64_t line_no) {
  if (name == "user") return AllocLevel::User;
  if (name == "system") return AllocLevel::System;
  throw TraceParseError{line_no, "unknown level '" + name + "'"};
}

PtrMode parse_mode(const std::string& name, std::uint64_t line_no) {
  if (name == "aligned") return PtrMode::Aligned;
  if (name == "centroid") return PtrMode::Centroid;
  throw TraceParseError{line_no, "unknown mode '" + name + "'"};
}

TraceLabel parse_label(const std::string& name, std::uint64_t line_no) {
  if (name == "benign") return TraceLabel::Benign;
  if (name == "spatial_violation") return TraceLabel::SpatialViolation;
  if (name == "temporal_violation") return TraceLabel::TemporalViolation;
  throw TraceParseError{line_no, "unknown label '" + name + "'"};
}

TraceEvent event_from_json(const json& line, std::uint64_t line_no) {
  TraceEvent e;
  e.seq = required<std::uint64_t>(line, "seq", line_no);
  const auto type = required<std::string>(line, "type", line_no);
  if (type == "alloc") {
    e.type = EventType::Alloc;
    e.object_id = required<std::uint64_t>(line, "object_id", line_no);
    e.size = required<std::uint64_t>(line, "size", line_no);
    e.level = parse_level(required<std::string>(line, "level", line_no), line_no);
    if (line.contains("mode_override")) {
      e.mode_override = parse_mode(line.at("mode_override").get<std::string>(), line_no);
    }
    if (e.size == 0) throw TraceParseError{line_no, "alloc size must be at least 1"};
  } else if (type == "free") {
    e.type = EventType::Free;
    e.object_id = required<std::uint64_t>(line, "object_id", line_no);
  } else if (type == "access" || type == "raw_access") {
    e.type = type == "access" ? EventType::Access : EventType::RawAccess;
    if (e.type == EventType::Access) {
      e.object_id = required<std::uint64_t>(line, "object_id", line_no);
    } else {
      const auto word = parse_hex_word(required<std::string>(line, "word", line_no));
      if (!word) throw TraceParseError{line_no, "word is not a hex value"};
      e.word = *word;
    }
    e.offset = required<std::int64_t>(line, "offset", line_no);
    e.size = required<std::uint64_t>(line, "size", line_no);
    e.kind = parse_kind(required<std::string>(line, "kind", line_no), line_no);
    if (e.size == 0) throw TraceParseError{line_no, "access size must be at least 1"};
  } else {
    throw TraceParseError{line_no, "unknown event type '" + type + "'"};
  }
  if (line.contains("label")) {
    e.label = parse_label(line.at("label").get<std::string>(), line_no);
  }
  return e;
}

}  // namespace

std::string trace_to_jsonl(const Trace& trace) {
  std::ostringstream out;
  out << json{{"v", kTraceVersion}}.dump() << '\n';
  for (const auto& event : trace.events) {
    out << event_to_json(event).dump() << '\n';
  }
  return out.str();
}

Trace trace_from_jsonl(std::istream& in) {
  Trace trace;
  std::string line;
  std::uint64_t line_no = 0;
  std::uint64_t last_seq = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& e) {
      throw TraceParseError{line_no, std::string{"invalid JSON: "} + e.what()};
    }
    if (!saw_header) {
      if (!parsed.contains("v")) {
        throw TraceParseError{line_no, "missing version header {\"v\":1}"};
      }
      if (parsed.at("v").get<int>() != kTraceVersion) {
        throw TraceParseError{line_no, "unsupported trace version"};
      }
      saw_header = true;
      continue;
    }
    TraceEvent event = event_from_json(parsed, line_no);
    if (event.seq <= last_seq) {
      throw TraceParseError{line_no, "seq must be strictly increasing"};
    }
    last_seq = event.seq;
    trace.events.push_back(std::move(event));
  }
  if (!saw_header) {
    throw TraceParseError{1, "empty trace: missing version header"};
  }
  return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out{path, std::ios::binary};
  if (!out) {
    throw std::ios_base::failure{"cannot open for writing: " + path};
  }
  out << trace_to_jsonl(trace);
  if (!out) {
    throw std::ios_base::failure{"write failed: " + path};
  }
}

Trace load_trace(const std::string& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw std::ios_base::failure{"cannot open for reading: " + path};
  }
  return trace_from_jsonl(in);
}

}  // namespace cmem
