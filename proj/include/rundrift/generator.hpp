// Synthetic log generation from block-structured process models:
// SEQ / AND / XOR / LOOP blocks over activities, structural edit
// operations to derive drifted variants, and log composition with a
// gold standard of injected drift positions.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rundrift/event_log.hpp"

namespace rundrift {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BlockKind { Activity, Sequence, Parallel, Choice, Loop };

// A node of the block tree. Loop bodies live in children[0]; Choice
// nodes carry one probability per child, summing to 1.
struct ModelNode {
  BlockKind kind = BlockKind::Sequence;
  std::string label;                // Activity
  std::vector<ModelNode> children;  // Sequence / Parallel / Choice / Loop
  std::vector<double> probs;        // Choice
  double repeat_prob = 0.0;         // Loop: probability of running the body again

  bool operator==(const ModelNode&) const = default;
};

struct ProcessModel {
  ModelNode root;

  void validate() const;  // throws ModelError
  bool operator==(const ProcessModel&) const = default;
};

// Tree builders, handy for fixtures and tests.
ModelNode act(std::string label);
ModelNode seq(std::vector<ModelNode> children);
ModelNode par(std::vector<ModelNode> children);
ModelNode branch(std::vector<ModelNode> children, std::vector<double> probs);
ModelNode loop(ModelNode body, double repeat_prob);

// Path from the root as child indices; a Loop's body is child 0.
using NodePath = std::vector<std::size_t>;

struct ProcessEdit {
  enum class Kind {
    InsertFragment,    // path -> Sequence; fragment inserted at its leading edge
    RemoveFragment,    // path -> any non-root child; Choice parents renormalize
    Parallelize,       // path -> Sequence with >= 2 children, becomes Parallel
    Sequentialize,     // path -> Parallel, becomes Sequence
    MakeLoopable,      // wraps node in Loop(node, param)
    MakeSkippable,     // wraps node in Choice(node : 0.5, empty Sequence : 0.5)
    SwapFragments,     // swaps disjoint subtrees at path / path_b
    DuplicateFragment, // copy of node placed at the leading edge of its Sequence parent
    SubstituteFragment,// node replaced by fragment
    ChangeBranchProbability,  // path -> Choice; probs replaced
  };

  Kind kind;
  NodePath path;
  NodePath path_b;                     // SwapFragments only
  std::optional<ModelNode> fragment;   // InsertFragment / SubstituteFragment
  std::vector<double> probs;           // ChangeBranchProbability
  double param = 0.3;                  // MakeLoopable repeat probability
};

ProcessModel apply_edit(const ProcessModel& model, const ProcessEdit& edit);  // throws EditError
ProcessModel apply_edits(const ProcessModel& model, std::span<const ProcessEdit> edits);

// One trace sampled from the model. AND blocks interleave their
// children's words uniformly at random; LOOP repeats its body
// geometrically. Throws ModelError if the sample comes out empty.
std::vector<std::string> sample_trace(const ProcessModel& model, std::uint64_t seed);

struct SuddenSegment {
  ProcessModel model;
  std::size_t count = 0;
};

struct GoldStandard {
  std::vector<std::int64_t> sudden;  // stream index of the first post-drift trace
  std::vector<std::pair<std::int64_t, std::int64_t>> gradual;  // [start, end)
};

// Concatenated segments with gold sudden drifts at the internal
// boundaries. Deterministic per seed, independent of thread count:
// every trace draws from its own derived seed.
std::pair<EventLog, GoldStandard> compose_sudden(std::span<const SuddenSegment> segments,
                                                 std::uint64_t seed, int threads = 1);

// pre_count traces of `a`, a linear transition where trace i of the
// interval picks `a` with probability max(0, 1 - slope * i), then
// post_count traces of `b`. Interval length is ceil(1 / slope).
std::pair<EventLog, GoldStandard> compose_gradual(const ProcessModel& a, const ProcessModel& b,
                                                  std::size_t pre_count, std::size_t post_count,
                                                  double slope, std::uint64_t seed,
                                                  int threads = 1);

// Model (de)serialization.
std::string model_to_json(const ProcessModel& model);
ProcessModel model_from_json(const std::string& json);

// Gold standard (de)serialization: {"sudden":[...],"gradual":[[s,e],...]}.
std::string gold_to_json(const GoldStandard& gold);
GoldStandard gold_from_json(const std::string& json);

// The bundled loan-handling base model (20 activities; one rework loop,
// one AND block, XOR branches) and its drifted variants, one per edit
// family: re, pl, lp, cb, sw, fr.
ProcessModel bundled_base_model();
std::vector<std::string> bundled_variant_names();
ProcessModel bundled_variant(const std::string& name);  // throws std::out_of_range
// Resolves "base" or "base-<variant>"; returns nullopt for other names.
std::optional<ProcessModel> resolve_builtin_model(const std::string& name);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace rundrift
