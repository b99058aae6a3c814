#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "rundrift/concurrency.hpp"

using namespace rundrift;

namespace {

// Interns a..z style labels so tests read like the walk-through.
struct Fixture {
  LabelTable labels;
  CompactTrace trace(const std::string& word) {
    CompactTrace t;
    for (char c : word) t.push_back(labels.intern(std::string(1, c)));
    return t;
  }
};

}  // namespace

TEST_CASE("add_trace accumulates directly-precedes counts") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("abcd"));
  const auto a = fx.labels.intern("a");
  const auto b = fx.labels.intern("b");
  const auto c = fx.labels.intern("c");
  const auto d = fx.labels.intern("d");
  CHECK(state.dp_count(a, b) == 1);
  CHECK(state.dp_count(b, c) == 1);
  CHECK(state.dp_count(c, d) == 1);
  CHECK(state.dp_count(b, a) == 0);
  CHECK(state.concurrent_pairs().empty());

  state.add_trace(fx.trace("acbd"));
  CHECK(state.dp_count(a, c) == 1);
  CHECK(state.dp_count(c, b) == 1);
  CHECK(state.dp_count(b, d) == 1);
  CHECK(state.dp_count(a, b) == 1);
}

TEST_CASE("two interleaved traces induce exactly the {b,c} pair") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("abcd"));
  state.add_trace(fx.trace("acbd"));
  const auto b = fx.labels.intern("b");
  const auto c = fx.labels.intern("c");
  CHECK(state.concurrent_pairs().size() == 1);
  CHECK(state.concurrent_pairs().contains(b, c));
  CHECK(state.concurrent_pairs().contains(c, b));  // symmetric
}

TEST_CASE("single direction is not concurrency") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("ab"));
  CHECK(state.concurrent_pairs().empty());
}

TEST_CASE("self-pairs are never concurrent") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("aa"));
  state.add_trace(fx.trace("aaa"));
  CHECK(state.dp_count(fx.labels.intern("a"), fx.labels.intern("a")) == 3);
  CHECK(state.concurrent_pairs().empty());
}

TEST_CASE("remove_trace is the exact inverse of add_trace") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("abcd"));
  const std::uint64_t version_before = state.version();

  state.add_trace(fx.trace("acbd"));
  CHECK(state.concurrent_pairs().size() == 1);
  CHECK(state.version() > version_before);

  state.remove_trace(fx.trace("acbd"));
  CHECK(state.concurrent_pairs().empty());
  const auto a = fx.labels.intern("a");
  const auto b = fx.labels.intern("b");
  CHECK(state.dp_count(a, b) == 1);
  CHECK(state.dp_count(fx.labels.intern("c"), b) == 0);
}

TEST_CASE("counted evidence: pair persists until the last witness leaves") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("ab"));
  state.add_trace(fx.trace("ab"));
  state.add_trace(fx.trace("ba"));
  const auto a = fx.labels.intern("a");
  const auto b = fx.labels.intern("b");
  CHECK(state.concurrent_pairs().contains(a, b));
  state.remove_trace(fx.trace("ab"));
  CHECK(state.concurrent_pairs().contains(a, b));  // one ab witness remains
  state.remove_trace(fx.trace("ab"));
  CHECK(!state.concurrent_pairs().contains(a, b));
}

TEST_CASE("removing evidence that was never added throws") {
  Fixture fx;
  ConcurrencyState state;
  state.add_trace(fx.trace("ab"));
  CHECK_THROWS_AS(state.remove_trace(fx.trace("ba")), std::logic_error);
  CHECK_THROWS_AS(ConcurrencyState{}.remove_trace(fx.trace("ab")), std::logic_error);
}

TEST_CASE("version bumps exactly when the concurrent pair set changes") {
  Fixture fx;
  ConcurrencyState state;
  CHECK(state.version() == 0);
  state.add_trace(fx.trace("ab"));
  CHECK(state.version() == 0);  // no pair yet
  state.add_trace(fx.trace("ba"));
  const std::uint64_t v1 = state.version();
  CHECK(v1 > 0);
  state.add_trace(fx.trace("ab"));  // more evidence, same relation
  CHECK(state.version() == v1);
  state.remove_trace(fx.trace("ab"));
  CHECK(state.version() == v1);
  state.remove_trace(fx.trace("ab"));  // last ab witness: pair dissolves
  CHECK(state.version() > v1);
}

TEST_CASE("monotone evidence: adding a trace never removes a concurrent pair") {
  std::mt19937 rng(11);
  Fixture fx;
  std::uniform_int_distribution<int> len(2, 6);
  std::uniform_int_distribution<int> letter(0, 3);
  ConcurrencyState state;
  std::vector<std::uint64_t> previous;
  for (int i = 0; i < 200; ++i) {
    std::string word;
    const int n = len(rng);
    for (int j = 0; j < n; ++j) word.push_back(static_cast<char>('a' + letter(rng)));
    state.add_trace(fx.trace(word));
    for (std::uint64_t packed : previous) {
      CHECK(state.concurrent_pairs().raw().count(packed) == 1);
    }
    previous.assign(state.concurrent_pairs().raw().begin(),
                    state.concurrent_pairs().raw().end());
  }
}

TEST_CASE("windowed consistency: any add/remove interleaving matches the direct build") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> len(2, 5);
  std::uniform_int_distribution<int> letter(0, 4);

  for (int round = 0; round < 30; ++round) {
    Fixture fx;
    // Target window of 6 traces.
    std::vector<CompactTrace> window;
    for (int i = 0; i < 6; ++i) {
      std::string word;
      const int n = len(rng);
      for (int j = 0; j < n; ++j) word.push_back(static_cast<char>('a' + letter(rng)));
      window.push_back(fx.trace(word));
    }

    // Scenic route: add everything twice plus noise, then remove the extras
    // in shuffled order so exactly the window remains.
    std::vector<CompactTrace> extras = window;
    for (int i = 0; i < 4; ++i) {
      std::string word;
      const int n = len(rng);
      for (int j = 0; j < n; ++j) word.push_back(static_cast<char>('a' + letter(rng)));
      extras.push_back(fx.trace(word));
    }
    ConcurrencyState state;
    for (const auto& t : window) state.add_trace(t);
    for (const auto& t : extras) state.add_trace(t);
    std::shuffle(extras.begin(), extras.end(), rng);
    for (const auto& t : extras) state.remove_trace(t);

    CHECK(state.concurrent_pairs() == alpha_concurrency(window));
  }
}

TEST_CASE("alpha_concurrency one-shot matches the walk-through") {
  Fixture fx;
  const std::vector<CompactTrace> window{fx.trace("abcd"), fx.trace("acbd")};
  const ConcurrentSet pairs = alpha_concurrency(window);
  CHECK(pairs.size() == 1);
  CHECK(pairs.contains(fx.labels.intern("b"), fx.labels.intern("c")));
}
