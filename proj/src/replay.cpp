// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "centroidmem/replay.hpp"

#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace cmem {

using nlohmann::json;

std::optional<double> DetectionStats::precision() const {
  if (labeled == 0) return std::nullopt;
  if (false_positives == 0) return 1.0;
  return static_cast<double>(true_positives) /
         static_cast<double>(true_positives + false_positives);
}

std::optional<double> DetectionStats::recall() const {
  const std::uint64_t positives = true_positives + false_negatives;
  if (positives == 0) return std::nullopt;
  return static_cast<double>(true_positives) / static_cast<double>(positives);
}

std::uint64_t Report::fault_total() const {
  std::uint64_t total = 0;
  for (std::uint64_t n : faults_by_kind) total += n;
  return total;
}

std::uint64_t Report::access_faults() const {
  return fault_total() - fault_count(FaultKind::DoubleFree);
}

namespace {

json optional_double(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json cache_json(const CacheStats& stats) {
  return json{{"hits", stats.hits},
              {"misses", stats.misses},
              {"evictions", stats.evictions},
              {"hit_rate", stats.hit_rate()}};
}

json mode_fragmentation_json(const ModeFragmentation& frag) {
  return json{{"objects", frag.objects},
              {"total_requested", frag.total_requested},
              {"total_reserved", frag.total_reserved},
              {"max_slack", frag.max_slack},
              {"mean_slack", frag.mean_slack()}};
}

struct ScoreKeeper {
  DetectionStats& stats;

  void score(const std::optional<TraceLabel>& label, bool faulted) {
    if (!label) return;
    ++stats.labeled;
    const bool positive = *label != TraceLabel::Benign;
    if (positive && faulted) ++stats.true_positives;
    else if (positive) ++stats.false_negatives;
    else if (faulted) ++stats.false_positives;
    else ++stats.true_negatives;
  }
};

}  // namespace

std::string Report::to_json() const {
  json by_kind;
  for (std::size_t i = 0; i < kFaultKindCount; ++i) {
    by_kind[fault_kind_name(static_cast<FaultKind>(i))] = faults_by_kind[i];
  }
  json log = json::array();
  for (const auto& fault : fault_log) {
    log.push_back(json{{"seq", fault.seq},
                       {"kind", fault_kind_name(fault.kind)},
                       {"word", hex_word(fault.word)},
                       {"effective_address", hex_word(fault.effective_address)},
                       {"detail", fault.detail}});
  }

  json scheme_block(nullptr);
  if (scheme) {
    scheme_block = json{{"name", parent_scheme_name(*scheme)},
                        {"lookups", scheme_counters.lookups},
                        {"tag_decodes", scheme_counters.tag_decodes},
                        {"range_hits", scheme_counters.range_hits},
                        {"range_fills", scheme_counters.range_fills},
                        {"pte_walks", scheme_counters.pte_walks},
                        {"store_lookups", scheme_counters.store_lookups},
                        {"sorted_walks", scheme_counters.sorted_walks}};
  }

  const json report{
      {"v", 1},
      {"counts",
       {{"allocs", allocs},
        {"frees", frees},
        {"attempted_accesses", attempted_accesses},
        {"issued_accesses", issued_accesses}}},
      {"faults", {{"by_kind", by_kind}, {"total", fault_total()}, {"log", log}}},
      {"detection",
       {{"true_positives", detection.true_positives},
        {"false_positives", detection.false_positives},
        {"false_negatives", detection.false_negatives},
        {"true_negatives", detection.true_negatives},
        {"labeled_events", detection.labeled},
        {"precision", optional_double(detection.precision())},
        {"recall", optional_double(detection.recall())}}},
      {"caches",
       {{"descriptor", cache_json(descriptor_cache)},
        {"range", cache_json(range_cache)},
        {"table_lookups", table_lookups}}},
      {"fragmentation",
       {{"aligned", mode_fragmentation_json(fragmentation.aligned)},
        {"centroid", mode_fragmentation_json(fragmentation.centroid)}}},
      {"modes", {{"aligned_objects", aligned_objects}, {"centroid_objects", centroid_objects}}},
      {"scheme", scheme_block},
      {"config",
       {{"mode_threshold", mode_threshold},
        {"reuse", reuse},
        {"aligned_liveness", aligned_liveness},
        {"cpp_oob_one_past", allow_one_past_arith},
        {"force_mode", force_mode ? json(ptr_mode_name(*force_mode)) : json(nullptr)}}},
  };
  return report.dump(2) + "\n";
}

std::string Report::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "allocs," << allocs << "\n";
  out << "frees," << frees << "\n";
  out << "attempted_accesses," << attempted_accesses << "\n";
  out << "issued_accesses," << issued_accesses << "\n";
  for (std::size_t i = 0; i < kFaultKindCount; ++i) {
    out << "faults." << fault_kind_name(static_cast<FaultKind>(i)) << ","
        << faults_by_kind[i] << "\n";
  }
  out << "faults.total," << fault_total() << "\n";
  out << "detection.true_positives," << detection.true_positives << "\n";
  out << "detection.false_positives," << detection.false_positives << "\n";
  out << "detection.false_negatives," << detection.false_negatives << "\n";
  out << "detection.true_negatives," << detection.true_negatives << "\n";
  out << "detection.labeled_events," << detection.labeled << "\n";
  const auto precision = detection.precision();
  const auto recall = detection.recall();
  out << "detection.precision," << (precision ? std::to_string(*precision) : "") << "\n";
  out << "detection.recall," << (recall ? std::to_string(*recall) : "") << "\n";
  out << "caches.descriptor.hits," << descriptor_cache.hits << "\n";
  out << "caches.descriptor.misses," << descriptor_cache.misses << "\n";
  out << "caches.descriptor.evictions," << descriptor_cache.evictions << "\n";
  out << "caches.range.hits," << range_cache.hits << "\n";
  out << "caches.range.misses," << range_cache.misses << "\n";
  out << "caches.range.evictions," << range_cache.evictions << "\n";
  out << "caches.table_lookups," << table_lookups << "\n";
  out << "fragmentation.aligned.objects," << fragmentation.aligned.objects << "\n";
  out << "fragmentation.aligned.total_requested," << fragmentation.aligned.total_requested << "\n";
  out << "fragmentation.aligned.total_reserved," << fragmentation.aligned.total_reserved << "\n";
  out << "fragmentation.aligned.max_slack," << fragmentation.aligned.max_slack << "\n";
  out << "fragmentation.centroid.objects," << fragmentation.centroid.objects << "\n";
  out << "fragmentation.centroid.total_requested," << fragmentation.centroid.total_requested
      << "\n";
  out << "fragmentation.centroid.total_reserved," << fragmentation.centroid.total_reserved << "\n";
  out << "fragmentation.centroid.max_slack," << fragmentation.centroid.max_slack << "\n";
  out << "modes.aligned_objects," << aligned_objects << "\n";
  out << "modes.centroid_objects," << centroid_objects << "\n";
  if (scheme) {
    out << "scheme.name," << parent_scheme_name(*scheme) << "\n";
    out << "scheme.lookups," << scheme_counters.lookups << "\n";
    out << "scheme.tag_decodes," << scheme_counters.tag_decodes << "\n";
    out << "scheme.range_hits," << scheme_counters.range_hits << "\n";
    out << "scheme.range_fills," << scheme_counters.range_fills << "\n";
    out << "scheme.pte_walks," << scheme_counters.pte_walks << "\n";
    out << "scheme.store_lookups," << scheme_counters.store_lookups << "\n";
    out << "scheme.sorted_walks," << scheme_counters.sorted_walks << "\n";
  }
  return out.str();
}

Report replay(const Trace& trace, const ReplayConfig& config, std::ostream* explain) {
  DescriptorStore store{config.store};
  Allocator allocator{store, config.allocator};
  Dgu dgu{store, config.dgu};
  std::optional<MultiLevel> multilevel;
  if (config.parent_scheme) {
    multilevel.emplace(allocator, store, *config.parent_scheme);
  }

  Report report;
  report.scheme = config.parent_scheme;
  report.mode_threshold = config.allocator.mode_threshold;
  report.reuse = config.allocator.reuse;
  report.aligned_liveness = config.dgu.aligned_liveness;
  report.allow_one_past_arith = config.dgu.allow_one_past_arith;
  report.force_mode = config.force_mode;

  ScoreKeeper scorer{report.detection};
  std::unordered_map<std::uint64_t, Allocation> issued_words;
  std::unordered_map<std::uint64_t, LinearAddress> parent_centroids;  // trace id -> centroid

  auto record_fault = [&](std::uint64_t seq, const AccessFault& fault) {
    ++report.faults_by_kind[static_cast<std::size_t>(fault.kind)];
    report.fault_log.push_back(
        FaultRecord{seq, fault.kind, fault.word, fault.effective_address, fault.detail});
  };

  std::uint64_t last_seq = 0;
  for (const TraceEvent& event : trace.events) {
    if (event.seq <= last_seq) {
      throw TraceParseError{event.seq, "seq must be strictly increasing"};
    }
    last_seq = event.seq;

    switch (event.type) {
      case EventType::Alloc: {
        if (issued_words.contains(event.object_id)) {
          throw TraceParseError{event.seq, "object_id was already allocated"};
        }
        const std::optional<PtrMode> mode =
            config.force_mode ? config.force_mode : event.mode_override;
        const PtrMode resolved = mode.value_or(event.size < config.allocator.mode_threshold
                                                   ? PtrMode::Aligned
                                                   : PtrMode::Centroid);
        if (multilevel && event.level == AllocLevel::System && resolved == PtrMode::Centroid) {
          const MultiLevel::MapResult mapped = multilevel->map_parent(event.size);
          issued_words.emplace(event.object_id, mapped.allocation);
          parent_centroids.emplace(event.object_id, mapped.centroid);
        } else {
          issued_words.emplace(event.object_id, allocator.allocate(event.size, event.level, mode));
        }
        ++report.allocs;
        if (explain) {
          const Allocation& a = issued_words.at(event.object_id);
          *explain << "seq " << event.seq << ": alloc object " << event.object_id << " size "
                   << event.size << " -> word " << hex_word(encode(a.word)) << "\n";
        }
        break;
      }

      case EventType::Free: {
        auto it = issued_words.find(event.object_id);
        if (it == issued_words.end()) {
          throw TraceParseError{event.seq, "free of an object with no prior alloc"};
        }
        FreeOutcome outcome;
        auto parent = parent_centroids.find(event.object_id);
        if (parent != parent_centroids.end()) {
          if (allocator.record(it->second.object_id).state == AllocState::Freed) {
            outcome = FreeOutcome::DoubleFree;
          } else {
            multilevel->unmap_parent(parent->second);
            outcome = FreeOutcome::Freed;
          }
        } else {
          outcome = allocator.free_object(it->second.object_id);
        }
        const bool faulted = outcome == FreeOutcome::DoubleFree;
        if (faulted) {
          record_fault(event.seq,
                       AccessFault{FaultKind::DoubleFree, encode(it->second.word),
                                   it->second.word.address, "object already freed"});
        } else {
          ++report.frees;
        }
        scorer.score(event.label, faulted);
        if (explain) {
          *explain << "seq " << event.seq << ": free object " << event.object_id << " -> "
                   << (faulted ? "double_free" : "freed") << "\n";
        }
        break;
      }

      case EventType::Access:
      case EventType::RawAccess: {
        std::uint64_t raw = event.word;
        if (event.type == EventType::Access) {
          auto it = issued_words.find(event.object_id);
          if (it == issued_words.end()) {
            throw TraceParseError{event.seq, "access to an object with no prior alloc"};
          }
          raw = encode(it->second.word);
        }
        ++report.attempted_accesses;
        const AccessRequest request{raw, event.offset, event.size, event.kind};
        const FaultOr<EffectiveAccess> verdict = dgu.authenticate(request);
        if (verdict) {
          ++report.issued_accesses;
          if (multilevel) {
            // Translation metadata lookup for the issued address.
            (void)multilevel->parent_of(verdict.value().effective_address);
          }
        } else {
          record_fault(event.seq, verdict.fault());
        }
        scorer.score(event.label, !verdict.ok());
        if (explain) {
          *explain << "seq " << event.seq << ": " << access_kind_name(event.kind);
          if (event.type == EventType::Access) {
            *explain << " object " << event.object_id;
          } else {
            *explain << " word " << hex_word(event.word);
          }
          *explain << " offset " << event.offset << " size " << event.size << " -> ";
          if (verdict) {
            *explain << "issued ea=" << hex_word(verdict.value().effective_address) << " bounds=["
                     << hex_word(verdict.value().descriptor.base) << ", "
                     << hex_word(verdict.value().descriptor.bound) << "]\n";
          } else {
            *explain << fault_kind_name(verdict.fault().kind)
                     << " ea=" << hex_word(verdict.fault().effective_address) << "\n";
          }
        }
        break;
      }
    }
  }

  report.descriptor_cache = store.descriptor_cache().stats();
  report.range_cache = store.range_cache().stats();
  report.table_lookups = store.table_lookups();
  report.fragmentation = allocator.fragmentation_report();
  for (const AllocationRecord& rec : allocator.records()) {
    if (rec.mode == PtrMode::Aligned) ++report.aligned_objects;
    else ++report.centroid_objects;
  }
  if (multilevel) {
    report.scheme_counters = multilevel->counters(*config.parent_scheme);
  }
  return report;
}

}  // namespace cmem
