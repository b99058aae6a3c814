#include "rundrift/run.hpp"

#include <algorithm>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rundrift {

Run trace_to_run(const CompactTrace& trace, const ConcurrentSet& concurrent,
                 const LabelTable& labels) {
  const std::size_t n = trace.size();
  const std::size_t words = (n + 63) / 64;

  // The directly-precedes relation over a single trace is the chain
  // e_i -> e_{i+1}, whose irreflexive transitive closure is simply i < j.
  // Drop closure pairs whose labels are concurrent, then re-close: with
  // indices in trace order the graph is already topologically sorted, so
  // a right-to-left sweep unions successor reachability.
  std::vector<std::uint64_t> reach(n * words, 0);
  for (std::size_t i = n; i-- > 0;) {
    std::uint64_t* row = reach.data() + i * words;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (trace[i] != trace[j] && concurrent.contains(trace[i], trace[j])) continue;
      row[j / 64] |= 1ull << (j % 64);
      const std::uint64_t* rj = reach.data() + j * words;
      for (std::size_t k = 0; k < words; ++k) row[k] |= rj[k];
    }
  }

  // Predecessor masks for the reduction test: an edge (i, j) of the
  // causality order is kept iff no k has both i -> k and k -> j.
  std::vector<std::uint64_t> pred(n * words, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* row = reach.data() + i * words;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (row[j / 64] >> (j % 64) & 1) pred[j * words + i / 64] |= 1ull << (i % 64);
    }
  }

  Run run;
  run.nodes.reserve(n);
  std::unordered_map<std::uint32_t, std::uint32_t> seen;
  std::vector<std::string> node_strs(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t occ = ++seen[trace[i]];
    const std::string& name = labels.name(trace[i]);
    run.nodes.push_back(RunNode{name, occ});
    node_strs[i] = name + "#" + std::to_string(occ);
  }

  std::vector<std::string> edge_strs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* row = reach.data() + i * words;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(row[j / 64] >> (j % 64) & 1)) continue;
      const std::uint64_t* pj = pred.data() + j * words;
      bool redundant = false;
      for (std::size_t k = 0; k < words; ++k) {
        if (row[k] & pj[k]) {
          redundant = true;
          break;
        }
      }
      if (redundant) continue;
      run.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      edge_strs.push_back(node_strs[i] + ">" + node_strs[j]);
    }
  }

  std::sort(node_strs.begin(), node_strs.end());
  std::sort(edge_strs.begin(), edge_strs.end());
  std::string key;
  for (std::size_t i = 0; i < node_strs.size(); ++i) {
    if (i) key += ';';
    key += node_strs[i];
  }
  key += '|';
  for (std::size_t i = 0; i < edge_strs.size(); ++i) {
    if (i) key += ';';
    key += edge_strs[i];
  }
  run.canonical_key = std::move(key);
  return run;
}

Run trace_to_run(const std::vector<std::string>& labels,
                 const std::vector<std::pair<std::string, std::string>>& concurrent_pairs) {
  LabelTable table;
  CompactTrace trace;
  trace.reserve(labels.size());
  for (const auto& l : labels) trace.push_back(table.intern(l));
  ConcurrentSet conc;
  for (const auto& [a, b] : concurrent_pairs) conc.insert(table.intern(a), table.intern(b));
  return trace_to_run(trace, conc, table);
}

std::vector<Run> build_runs_serial(std::span<const CompactTrace> traces,
                                   const ConcurrentSet& concurrent, const LabelTable& labels) {
  std::vector<Run> out(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out[i] = trace_to_run(traces[i], concurrent, labels);
  }
  return out;
}

std::vector<Run> build_runs_parallel(std::span<const CompactTrace> traces,
                                     const ConcurrentSet& concurrent, const LabelTable& labels,
                                     int threads) {
  std::vector<Run> out(traces.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads > 0 ? threads : 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(traces.size()); ++i) {
    out[i] = trace_to_run(traces[i], concurrent, labels);
  }
#else
  (void)threads;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out[i] = trace_to_run(traces[i], concurrent, labels);
  }
#endif
  return out;
}

std::vector<Run> build_runs(std::span<const CompactTrace> traces, const ConcurrentSet& concurrent,
                            const LabelTable& labels, int threads) {
  if (threads > 1 && traces.size() > 1) {
    return build_runs_parallel(traces, concurrent, labels, threads);
  }
  return build_runs_serial(traces, concurrent, labels);
}

Histogram run_histogram(std::span<const Run> runs) {
  Histogram h;
  for (const auto& r : runs) h.add(r.canonical_key);
  return h;
}

}  // namespace rundrift
