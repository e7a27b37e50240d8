// Copyright 2026 The centroidmem Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "centroidmem/alloc_sim.hpp"
#include "centroidmem/ptr_codec.hpp"
#include "centroidmem/replay.hpp"
#include "centroidmem/trace.hpp"
#include "centroidmem/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFaultsUnderStrict = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

std::uint64_t seed_or_env(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("CENTROID_MEM_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out{path, std::ios::binary};
  if (!out) throw std::ios_base::failure{"cannot open for writing: " + path};
  out << content;
  if (!out) throw std::ios_base::failure{"write failed: " + path};
}

int run_inspect(const std::string& word_text, std::optional<std::string> mode_name,
                std::optional<int> exponent, std::optional<std::string> addr_text) {
  cmem::TaggedWord word;
  if (!word_text.empty()) {
    const auto raw = cmem::parse_hex_word(word_text);
    if (!raw) {
      std::cerr << "inspect: '" << word_text << "' is not a hex word\n";
      return kExitUsage;
    }
    const auto decoded = cmem::decode(*raw);
    if (!decoded) {
      std::cerr << "inspect: MalformedTag: exponent field of " << cmem::hex_word(*raw)
                << " is outside [1, 56]\n";
      return kExitData;
    }
    word = *decoded;
  } else {
    if (!mode_name || !exponent || !addr_text) {
      std::cerr << "inspect: give either a hex word or --mode, --n and --addr\n";
      return kExitUsage;
    }
    const auto addr = cmem::parse_hex_word(*addr_text);
    if (!addr) {
      std::cerr << "inspect: '" << *addr_text << "' is not a hex address\n";
      return kExitUsage;
    }
    if (*exponent < cmem::kExponentMin || *exponent > cmem::kExponentMax) {
      std::cerr << "inspect: MalformedTag: exponent " << *exponent << " is outside [1, 56]\n";
      return kExitData;
    }
    word.mode = *mode_name == "centroid" ? cmem::PtrMode::Centroid : cmem::PtrMode::Aligned;
    word.exponent = static_cast<std::uint8_t>(*exponent);
    word.address = *addr & cmem::kAddressMask;
  }

  const cmem::SlotSpec slot = cmem::slot_of(word.address, word.exponent);
  std::cout << "word:      " << cmem::hex_word(cmem::encode(word)) << "\n";
  std::cout << "mode:      " << cmem::ptr_mode_name(word.mode) << "\n";
  std::cout << "exponent:  " << static_cast<int>(word.exponent) << "\n";
  std::cout << "address:   " << cmem::hex_word(word.address) << "\n";
  std::cout << "slot:      [" << cmem::hex_word(slot.base) << ", " << cmem::hex_word(slot.last())
            << "] (" << slot.size() << " bytes)\n";
  std::cout << "cid:       " << cmem::hex_word(cmem::cid_prefix(slot)) << "\n";
  if (word.mode == cmem::PtrMode::Aligned) {
    const cmem::BoundsDescriptor bounds = cmem::aligned_bounds(word);
    std::cout << "bounds:    [" << cmem::hex_word(bounds.base) << ", "
              << cmem::hex_word(bounds.bound) << "]\n";
  } else {
    const cmem::CentroidPair pair = cmem::centroid_pair(slot);
    std::cout << "centroids: low " << cmem::hex_word(pair.low) << ", high "
              << cmem::hex_word(pair.high) << "\n";
    std::cout << "key:       " << cmem::hex_word(pair.high) << "\n";
  }
  return kExitOk;
}

std::string human_report(const cmem::Report& report) {
  std::ostringstream out;
  out << "events:   " << report.allocs << " allocs, " << report.frees << " frees, "
      << report.attempted_accesses << " accesses attempted\n";
  out << "issued:   " << report.issued_accesses << " (" << report.access_faults()
      << " blocked)\n";
  out << "faults:\n";
  for (std::size_t i = 0; i < cmem::kFaultKindCount; ++i) {
    if (report.faults_by_kind[i] == 0) continue;
    out << "  " << cmem::fault_kind_name(static_cast<cmem::FaultKind>(i)) << ": "
        << report.faults_by_kind[i] << "\n";
  }
  if (report.fault_total() == 0) out << "  none\n";
  if (report.detection.labeled > 0) {
    out << "detection: tp=" << report.detection.true_positives
        << " fp=" << report.detection.false_positives
        << " fn=" << report.detection.false_negatives
        << " tn=" << report.detection.true_negatives;
    if (const auto p = report.detection.precision()) out << " precision=" << *p;
    if (const auto r = report.detection.recall()) out << " recall=" << *r;
    out << "\n";
  }
  out << "caches:   descriptor " << report.descriptor_cache.hits << "/"
      << (report.descriptor_cache.hits + report.descriptor_cache.misses) << " hits, range "
      << report.range_cache.hits << "/"
      << (report.range_cache.hits + report.range_cache.misses) << " hits\n";
  out << "objects:  " << report.aligned_objects << " aligned, " << report.centroid_objects
      << " centroid\n";
  out << "slack:    aligned max " << report.fragmentation.aligned.max_slack << " mean "
      << report.fragmentation.aligned.mean_slack() << ", centroid max "
      << report.fragmentation.centroid.max_slack << " mean "
      << report.fragmentation.centroid.mean_slack() << "\n";
  if (report.scheme) {
    out << "scheme:   " << cmem::parent_scheme_name(*report.scheme) << " lookups "
        << report.scheme_counters.lookups << " walks " << report.scheme_counters.pte_walks
        << " range hits " << report.scheme_counters.range_hits << "\n";
  }
  return out.str();
}

struct RunOptions {
  std::string trace_path;
  std::string output_path;
  std::string csv_path;
  std::string format = "human";
  bool strict = false;
  bool explain = false;
  bool reuse = false;
  bool aligned_liveness = false;
  bool cpp_oob_one_past = false;
  std::uint64_t mode_threshold = 1024;
  std::uint64_t arena_size = std::uint64_t{1} << 32;
  std::size_t cache_sets = 64;
  std::size_t cache_ways = 4;
  std::size_t range_capacity = 16;
  std::string parent_scheme;
  std::string size_classes_path;
};

cmem::ReplayConfig config_from(const RunOptions& options) {
  cmem::ReplayConfig config;
  config.allocator.mode_threshold = options.mode_threshold;
  config.allocator.arena_size = options.arena_size;
  config.allocator.reuse = options.reuse;
  config.allocator.register_aligned = options.aligned_liveness;
  config.store.cache_sets = options.cache_sets;
  config.store.cache_ways = options.cache_ways;
  config.store.range_capacity = options.range_capacity;
  config.dgu.aligned_liveness = options.aligned_liveness;
  config.dgu.allow_one_past_arith = options.cpp_oob_one_past;
  if (options.parent_scheme == "dualtag") config.parent_scheme = cmem::ParentScheme::DualTag;
  if (options.parent_scheme == "rangecache") config.parent_scheme = cmem::ParentScheme::RangeCache;
  if (options.parent_scheme == "pte") config.parent_scheme = cmem::ParentScheme::Pte;
  if (!options.size_classes_path.empty()) {
    std::ifstream in{options.size_classes_path};
    if (!in) throw std::ios_base::failure{"cannot open " + options.size_classes_path};
    std::ostringstream text;
    text << in.rdbuf();
    config.allocator.size_classes = cmem::SizeClassTable::from_json_text(text.str());
  }
  return config;
}

int run_replay(const RunOptions& options) {
  const cmem::Trace trace = cmem::load_trace(options.trace_path);
  const cmem::ReplayConfig config = config_from(options);
  const cmem::Report report =
      cmem::replay(trace, config, options.explain ? &std::cout : nullptr);

  if (!options.output_path.empty()) {
    write_file(options.output_path, report.to_json());
  }
  if (!options.csv_path.empty()) {
    write_file(options.csv_path, report.to_csv());
  }
  if (options.format == "json") {
    std::cout << report.to_json();
  } else if (options.format == "csv") {
    std::cout << report.to_csv();
  } else {
    std::cout << human_report(report);
  }
  if (options.strict && report.fault_total() > 0) {
    return kExitFaultsUnderStrict;
  }
  return kExitOk;
}

int run_compare(const std::string& trace_path, const std::string& output_path,
                const std::string& format) {
  const cmem::Trace trace = cmem::load_trace(trace_path);

  struct Backend {
    const char* name;
    cmem::ReplayConfig config;
  };
  Backend backends[3] = {{"aligned", {}}, {"lowfat", {}}, {"centroid", {}}};
  backends[0].config.force_mode = cmem::PtrMode::Aligned;
  backends[1].config.force_mode = cmem::PtrMode::Centroid;
  backends[1].config.allocator.lowfat_storage = true;
  backends[2].config.force_mode = cmem::PtrMode::Centroid;

  nlohmann::json table = nlohmann::json::array();
  std::ostringstream human;
  human << "backend    max_slack  mean_slack  reserved    issued  oob     uaf     recall\n";
  for (const Backend& backend : backends) {
    const cmem::Report report = cmem::replay(trace, backend.config);
    const cmem::ModeFragmentation& frag = backend.config.force_mode == cmem::PtrMode::Aligned
                                              ? report.fragmentation.aligned
                                              : report.fragmentation.centroid;
    const auto recall = report.detection.recall();
    table.push_back(nlohmann::json{
        {"backend", backend.name},
        {"max_slack", frag.max_slack},
        {"mean_slack", frag.mean_slack()},
        {"total_requested", frag.total_requested},
        {"total_reserved", frag.total_reserved},
        {"issued", report.issued_accesses},
        {"out_of_bounds", report.fault_count(cmem::FaultKind::OutOfBounds)},
        {"use_after_free", report.fault_count(cmem::FaultKind::UseAfterFree)},
        {"precision", report.detection.precision() ? nlohmann::json(*report.detection.precision())
                                                   : nlohmann::json(nullptr)},
        {"recall", recall ? nlohmann::json(*recall) : nlohmann::json(nullptr)},
    });
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-10llu %-11.2f %-11llu %-7llu %-7llu %-7llu %s\n",
                  backend.name, static_cast<unsigned long long>(frag.max_slack),
                  frag.mean_slack(), static_cast<unsigned long long>(frag.total_reserved),
                  static_cast<unsigned long long>(report.issued_accesses),
                  static_cast<unsigned long long>(report.fault_count(cmem::FaultKind::OutOfBounds)),
                  static_cast<unsigned long long>(report.fault_count(cmem::FaultKind::UseAfterFree)),
                  recall ? std::to_string(*recall).c_str() : "-");
    human << line;
  }

  const std::string json_text = table.dump(2) + "\n";
  if (!output_path.empty()) {
    write_file(output_path, json_text);
  }
  if (format == "json") {
    std::cout << json_text;
  } else {
    std::cout << human.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"centroidmem: desk-scale simulator for descriptor-based object-aware memory"};
  app.require_subcommand(1);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "decode a tagged word");
  std::string inspect_word;
  std::optional<std::string> inspect_mode;
  std::optional<int> inspect_n;
  std::optional<std::string> inspect_addr;
  inspect->add_option("word", inspect_word, "hex word, e.g. 0x9800000000402fff");
  inspect->add_option("--mode", inspect_mode, "aligned|centroid")
      ->check(CLI::IsMember({"aligned", "centroid"}));
  inspect->add_option("--n", inspect_n, "slot exponent");
  inspect->add_option("--addr", inspect_addr, "hex address");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic trace");
  std::string gen_output;
  std::optional<std::uint64_t> gen_seed;
  std::uint64_t gen_inject_seed = 1;
  cmem::WorkloadParams params;
  gen->add_option("-o,--output", gen_output, "trace file to write")->required();
  gen->add_option("--events", params.events, "number of events");
  gen->add_option("--seed", gen_seed, "generator seed (falls back to CENTROID_MEM_SEED)");
  gen->add_option("--p-small", params.p_small, "share of small objects");
  gen->add_option("--spatial-rate", params.spatial_rate, "spatial violation injection rate");
  gen->add_option("--temporal-rate", params.temporal_rate, "temporal violation injection rate");
  gen->add_option("--inject-seed", gen_inject_seed, "injection seed");

  // run
  auto* run = app.add_subcommand("run", "replay a trace and report");
  RunOptions run_options;
  run->add_option("trace", run_options.trace_path, "trace file")->required();
  run->add_option("-o,--output", run_options.output_path, "write the JSON report here");
  run->add_option("--csv", run_options.csv_path, "write the CSV report here");
  run->add_option("--format", run_options.format, "stdout format")
      ->check(CLI::IsMember({"json", "csv", "human"}));
  run->add_flag("--strict", run_options.strict, "exit 2 when any fault occurred");
  run->add_flag("--explain", run_options.explain, "print a verdict per event");
  run->add_flag("--reuse", run_options.reuse, "recycle freed slots (aliasing demo)");
  run->add_flag("--aligned-liveness", run_options.aligned_liveness,
                "register aligned slots and check their liveness");
  run->add_flag("--cpp-oob-one-past", run_options.cpp_oob_one_past,
                "tolerate one-past-the-end pointer arithmetic");
  run->add_option("--mode-threshold", run_options.mode_threshold,
                  "sizes below this use aligned mode");
  run->add_option("--arena-size", run_options.arena_size, "simulated arena bytes");
  run->add_option("--cache-sets", run_options.cache_sets, "descriptor cache sets");
  run->add_option("--cache-ways", run_options.cache_ways, "descriptor cache ways");
  run->add_option("--range-capacity", run_options.range_capacity, "range cache entries");
  run->add_option("--parent-scheme", run_options.parent_scheme,
                  "parent lookup scheme for system objects")
      ->check(CLI::IsMember({"dualtag", "rangecache", "pte"}));
  run->add_option("--size-classes", run_options.size_classes_path,
                  "JSON size class table for aligned mode");

  // compare
  auto* compare = app.add_subcommand("compare", "replay under each bounds back-end");
  std::string compare_trace;
  std::string compare_output;
  std::string compare_format = "human";
  compare->add_option("trace", compare_trace, "trace file")->required();
  compare->add_option("-o,--output", compare_output, "write the JSON table here");
  compare->add_option("--format", compare_format, "stdout format")
      ->check(CLI::IsMember({"json", "human"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (inspect->parsed()) {
      return run_inspect(inspect_word, inspect_mode, inspect_n, inspect_addr);
    }
    if (gen->parsed()) {
      params.seed = seed_or_env(gen_seed);
      cmem::Trace trace = cmem::generate(params);
      if (params.spatial_rate > 0.0 || params.temporal_rate > 0.0) {
        trace = cmem::inject(trace, params.spatial_rate, params.temporal_rate, gen_inject_seed);
      }
      cmem::save_trace(trace, gen_output);
      return kExitOk;
    }
    if (run->parsed()) {
      return run_replay(run_options);
    }
    if (compare->parsed()) {
      return run_compare(compare_trace, compare_output, compare_format);
    }
  } catch (const cmem::TraceParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
