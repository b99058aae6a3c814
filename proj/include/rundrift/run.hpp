// Trace to partially-ordered-run transformation. Starting from the
// directly-precedes chain over occurrence-indexed events, concurrent
// label pairs are cut out of its transitive closure, the remainder is
// re-closed into the causality order, and the transitive reduction of
// that order gives the run's edges. Equal runs have equal canonical keys.
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rundrift/concurrency.hpp"
#include "rundrift/stats.hpp"

namespace rundrift {

struct RunNode {
  std::string label;
  std::uint32_t occurrence;  // 1-based occurrence index within the trace
  bool operator==(const RunNode&) const = default;
};

struct Run {
  std::vector<RunNode> nodes;  // in trace order
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // indices into nodes
  // "label#k" node list and "src>dst" edge list, each sorted
  // lexicographically, joined with ';' and separated by '|'.
  std::string canonical_key;
};

Run trace_to_run(const CompactTrace& trace, const ConcurrentSet& concurrent,
                 const LabelTable& labels);

// Convenience form for string traces and unordered label pairs.
Run trace_to_run(const std::vector<std::string>& labels,
                 const std::vector<std::pair<std::string, std::string>>& concurrent_pairs);

// Batch conversion of independent traces. The parallel variant uses
// OpenMP when available and produces output identical to the serial
// reference, which is kept for testing and benchmarking.
std::vector<Run> build_runs_serial(std::span<const CompactTrace> traces,
                                   const ConcurrentSet& concurrent, const LabelTable& labels);
std::vector<Run> build_runs_parallel(std::span<const CompactTrace> traces,
                                     const ConcurrentSet& concurrent, const LabelTable& labels,
                                     int threads);
std::vector<Run> build_runs(std::span<const CompactTrace> traces, const ConcurrentSet& concurrent,
                            const LabelTable& labels, int threads = 1);

Histogram run_histogram(std::span<const Run> runs);

}  // namespace rundrift
