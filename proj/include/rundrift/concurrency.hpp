// Counted directly-precedes evidence over a sliding multiset of traces
// and the concurrency relation it induces: two labels are concurrent
// when each has been observed directly preceding the other. Counts make
// removal exact: removing a trace restores the previous state.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rundrift {

// Dense ids for activity labels.
class LabelTable {
 public:
  std::uint32_t intern(const std::string& label);
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

using CompactTrace = std::vector<std::uint32_t>;

constexpr std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Symmetric set of concurrent label pairs; pairs are stored unordered.
class ConcurrentSet {
 public:
  bool contains(std::uint32_t a, std::uint32_t b) const {
    return pairs_.count(key(a, b)) != 0;
  }
  void insert(std::uint32_t a, std::uint32_t b) { pairs_.insert(key(a, b)); }
  void erase(std::uint32_t a, std::uint32_t b) { pairs_.erase(key(a, b)); }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::unordered_set<std::uint64_t>& raw() const { return pairs_; }
  bool operator==(const ConcurrentSet& other) const { return pairs_ == other.pairs_; }

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return a < b ? pack_pair(a, b) : pack_pair(b, a);
  }
  std::unordered_set<std::uint64_t> pairs_;
};

class ConcurrencyState {
 public:
  void add_trace(const CompactTrace& t);
  // Exact inverse of add_trace; throws std::logic_error when the trace's
  // evidence was never added.
  void remove_trace(const CompactTrace& t);

  const ConcurrentSet& concurrent_pairs() const { return concurrent_; }
  // Bumped whenever the concurrent pair set changes; cheap staleness check.
  std::uint64_t version() const { return version_; }
  std::uint32_t dp_count(std::uint32_t a, std::uint32_t b) const;

 private:
  void bump(std::uint32_t a, std::uint32_t b, int delta);

  std::unordered_map<std::uint64_t, std::uint32_t> dp_counts_;
  ConcurrentSet concurrent_;
  std::uint64_t version_ = 0;
};

// Relation computed in one shot from a window of traces; this is what the
// incremental state converges to and doubles as the pluggable-oracle shape.
ConcurrentSet alpha_concurrency(std::span<const CompactTrace> traces);

}  // namespace rundrift
