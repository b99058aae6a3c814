#include "rundrift/concurrency.hpp"

#include <stdexcept>

namespace rundrift {

std::uint32_t LabelTable::intern(const std::string& label) {
  auto it = ids_.find(label);
  if (it != ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(names_.size());
  ids_.emplace(label, id);
  names_.push_back(label);
  return id;
}

std::uint32_t ConcurrencyState::dp_count(std::uint32_t a, std::uint32_t b) const {
  auto it = dp_counts_.find(pack_pair(a, b));
  return it == dp_counts_.end() ? 0 : it->second;
}

void ConcurrencyState::bump(std::uint32_t a, std::uint32_t b, int delta) {
  std::uint64_t k = pack_pair(a, b);
  if (delta > 0) {
    std::uint32_t& c = dp_counts_[k];
    ++c;
    // 0 -> 1 transition: pair becomes concurrent if the reverse direction
    // already has evidence. Self-pairs are never concurrent.
    if (c == 1 && a != b && dp_count(b, a) > 0) {
      concurrent_.insert(a, b);
      ++version_;
    }
  } else {
    auto it = dp_counts_.find(k);
    if (it == dp_counts_.end() || it->second == 0) {
      throw std::logic_error("ConcurrencyState: removing evidence that was never added");
    }
    if (--it->second == 0) {
      dp_counts_.erase(it);
      if (a != b && dp_count(b, a) > 0) {
        concurrent_.erase(a, b);
        ++version_;
      }
    }
  }
}

void ConcurrencyState::add_trace(const CompactTrace& t) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i) bump(t[i], t[i + 1], +1);
}

void ConcurrencyState::remove_trace(const CompactTrace& t) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i) bump(t[i], t[i + 1], -1);
}

ConcurrentSet alpha_concurrency(std::span<const CompactTrace> traces) {
  ConcurrencyState state;
  for (const auto& t : traces) state.add_trace(t);
  return state.concurrent_pairs();
}

}  // namespace rundrift
