// Micro-benchmark of the two OpenMP-parallel kernels against their serial
// reference implementations: batch trace-to-run conversion and synthetic
// log sampling.  Results are validated for equality before timing is
// reported, so a speedup is only ever printed for matching output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "rundrift/concurrency.hpp"
#include "rundrift/generator.hpp"
#include "rundrift/run.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const Clock::time_point& a, const Clock::time_point& b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

bool same_runs(const std::vector<rundrift::Run>& a, const std::vector<rundrift::Run>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].canonical_key != b[i].canonical_key) return false;
  }
  return true;
}

bool same_logs(const rundrift::EventLog& a, const rundrift::EventLog& b) {
  if (a.traces.size() != b.traces.size()) return false;
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    const auto& ta = a.traces[i];
    const auto& tb = b.traces[i];
    if (ta.case_id != tb.case_id || ta.events.size() != tb.events.size()) return false;
    for (std::size_t j = 0; j < ta.events.size(); ++j) {
      if (ta.events[j].label != tb.events[j].label ||
          ta.events[j].timestamp != tb.events[j].timestamp) {
        return false;
      }
    }
  }
  return true;
}

void report(const char* name, std::size_t items, double serial_ms,
            double parallel_ms, bool equal) {
  std::printf("%-22s %8zu items   serial %9.2f ms   parallel %9.2f ms   "
              "speedup %5.2fx   outputs %s\n",
              name, items, serial_ms, parallel_ms,
              parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0,
              equal ? "equal" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_traces = 20000;
  if (argc > 1) n_traces = static_cast<std::size_t>(std::strtoull(argv[1], nullptr, 10));
  const int threads = static_cast<int>(
      std::max(2u, std::thread::hardware_concurrency()));
  std::printf("traces: %zu, threads: %d\n", n_traces, threads);

  const rundrift::ProcessModel model = rundrift::bundled_base_model();
  const std::vector<rundrift::SuddenSegment> segments{{model, n_traces}};

  // Kernel 1: synthetic log sampling.
  const auto g0 = Clock::now();
  const auto serial_log = rundrift::compose_sudden(segments, 7, 1);
  const auto g1 = Clock::now();
  const auto parallel_log = rundrift::compose_sudden(segments, 7, threads);
  const auto g2 = Clock::now();
  const bool logs_equal = same_logs(serial_log.first, parallel_log.first);
  report("log sampling", n_traces, time_ms(g0, g1), time_ms(g1, g2), logs_equal);

  // Kernel 2: batch trace-to-run conversion under the full-log relation.
  rundrift::LabelTable labels;
  std::vector<rundrift::CompactTrace> traces;
  traces.reserve(serial_log.first.traces.size());
  for (const rundrift::Trace& t : serial_log.first.traces) {
    rundrift::CompactTrace ct;
    ct.reserve(t.events.size());
    for (const rundrift::Event& e : t.events) ct.push_back(labels.intern(e.label));
    traces.push_back(std::move(ct));
  }
  const rundrift::ConcurrentSet concurrent = rundrift::alpha_concurrency(traces);

  const auto r0 = Clock::now();
  const auto serial_runs = rundrift::build_runs_serial(traces, concurrent, labels);
  const auto r1 = Clock::now();
  const auto parallel_runs = rundrift::build_runs_parallel(traces, concurrent, labels, threads);
  const auto r2 = Clock::now();
  const bool runs_equal = same_runs(serial_runs, parallel_runs);
  report("trace-to-run", traces.size(), time_ms(r0, r1), time_ms(r1, r2), runs_equal);

  return (logs_equal && runs_equal) ? 0 : 1;
}
