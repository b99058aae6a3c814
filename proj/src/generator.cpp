#include "rundrift/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rundrift {

using json = nlohmann::json;

namespace {

constexpr double kProbEps = 1e-9;

void validate_node(const ModelNode& n) {
  switch (n.kind) {
    case BlockKind::Activity:
      if (n.label.empty()) throw ModelError("activity with empty label");
      if (!n.children.empty()) throw ModelError("activity cannot have children");
      return;
    case BlockKind::Sequence:
    case BlockKind::Parallel:
      break;
    case BlockKind::Choice: {
      if (n.children.empty()) throw ModelError("choice with no branches");
      if (n.probs.size() != n.children.size()) {
        throw ModelError("choice branch/probability count mismatch");
      }
      double sum = 0.0;
      for (double p : n.probs) {
        if (p < 0.0 || p > 1.0) throw ModelError("choice probability outside [0, 1]");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kProbEps) throw ModelError("choice probabilities must sum to 1");
      break;
    }
    case BlockKind::Loop:
      if (n.children.size() != 1) throw ModelError("loop must have exactly one body");
      if (!(n.repeat_prob >= 0.0 && n.repeat_prob < 1.0)) {
        throw ModelError("loop repeat probability must be in [0, 1)");
      }
      break;
  }
  for (const auto& c : n.children) validate_node(c);
}

}  // namespace

void ProcessModel::validate() const { validate_node(root); }

ModelNode act(std::string label) {
  ModelNode n;
  n.kind = BlockKind::Activity;
  n.label = std::move(label);
  return n;
}

ModelNode seq(std::vector<ModelNode> children) {
  ModelNode n;
  n.kind = BlockKind::Sequence;
  n.children = std::move(children);
  return n;
}

ModelNode par(std::vector<ModelNode> children) {
  ModelNode n;
  n.kind = BlockKind::Parallel;
  n.children = std::move(children);
  return n;
}

ModelNode branch(std::vector<ModelNode> children, std::vector<double> probs) {
  ModelNode n;
  n.kind = BlockKind::Choice;
  n.children = std::move(children);
  n.probs = std::move(probs);
  return n;
}

ModelNode loop(ModelNode body, double repeat_prob) {
  ModelNode n;
  n.kind = BlockKind::Loop;
  n.children.push_back(std::move(body));
  n.repeat_prob = repeat_prob;
  return n;
}

// ---------------------------------------------------------------------------
// Edits

namespace {

ModelNode* node_at(ModelNode& root, const NodePath& path) {
  ModelNode* n = &root;
  for (std::size_t idx : path) {
    if (idx >= n->children.size()) return nullptr;
    n = &n->children[idx];
  }
  return n;
}

std::pair<ModelNode*, std::size_t> parent_of(ModelNode& root, const NodePath& path) {
  if (path.empty()) return {nullptr, 0};
  NodePath up(path.begin(), path.end() - 1);
  ModelNode* p = node_at(root, up);
  if (!p || path.back() >= p->children.size()) return {nullptr, 0};
  return {p, path.back()};
}

bool is_prefix(const NodePath& a, const NodePath& b) {
  if (a.size() > b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

[[noreturn]] void edit_fail(const std::string& what) { throw EditError(what); }

}  // namespace

ProcessModel apply_edit(const ProcessModel& model, const ProcessEdit& edit) {
  ProcessModel out = model;
  ModelNode* n = node_at(out.root, edit.path);
  if (!n) edit_fail("edit path does not address a node");

  using Kind = ProcessEdit::Kind;
  switch (edit.kind) {
    case Kind::InsertFragment: {
      if (n->kind != BlockKind::Sequence) edit_fail("insert_fragment target must be a sequence");
      if (!edit.fragment) edit_fail("insert_fragment needs a fragment");
      n->children.insert(n->children.begin(), *edit.fragment);
      break;
    }
    case Kind::RemoveFragment: {
      auto [parent, idx] = parent_of(out.root, edit.path);
      if (!parent) edit_fail("remove_fragment cannot remove the root");
      if (parent->kind == BlockKind::Loop) edit_fail("cannot remove a loop body");
      parent->children.erase(parent->children.begin() + idx);
      if (parent->kind == BlockKind::Choice) {
        parent->probs.erase(parent->probs.begin() + idx);
        double sum = 0.0;
        for (double p : parent->probs) sum += p;
        if (parent->probs.empty() || sum <= 0.0) {
          edit_fail("remove_fragment left a choice with no usable branch");
        }
        for (double& p : parent->probs) p /= sum;
      }
      break;
    }
    case Kind::Parallelize: {
      if (n->kind != BlockKind::Sequence || n->children.size() < 2) {
        edit_fail("parallelize target must be a sequence with at least two children");
      }
      n->kind = BlockKind::Parallel;
      break;
    }
    case Kind::Sequentialize: {
      if (n->kind != BlockKind::Parallel) edit_fail("sequentialize target must be parallel");
      n->kind = BlockKind::Sequence;
      break;
    }
    case Kind::MakeLoopable: {
      if (!(edit.param >= 0.0 && edit.param < 1.0)) {
        edit_fail("make_loopable repeat probability must be in [0, 1)");
      }
      *n = loop(std::move(*n), edit.param);
      break;
    }
    case Kind::MakeSkippable: {
      *n = branch({std::move(*n), seq({})}, {0.5, 0.5});
      break;
    }
    case Kind::SwapFragments: {
      if (is_prefix(edit.path, edit.path_b) || is_prefix(edit.path_b, edit.path)) {
        edit_fail("swap_fragments paths must be disjoint");
      }
      ModelNode* b = node_at(out.root, edit.path_b);
      if (!b) edit_fail("swap_fragments second path does not address a node");
      std::swap(*n, *b);
      break;
    }
    case Kind::DuplicateFragment: {
      auto [parent, idx] = parent_of(out.root, edit.path);
      if (!parent || parent->kind != BlockKind::Sequence) {
        edit_fail("duplicate_fragment target must sit in a sequence");
      }
      ModelNode copy = parent->children[idx];
      parent->children.insert(parent->children.begin(), std::move(copy));
      break;
    }
    case Kind::SubstituteFragment: {
      if (!edit.fragment) edit_fail("substitute_fragment needs a fragment");
      *n = *edit.fragment;
      break;
    }
    case Kind::ChangeBranchProbability: {
      if (n->kind != BlockKind::Choice) {
        edit_fail("change_branch_probability target must be a choice");
      }
      if (edit.probs.size() != n->children.size()) {
        edit_fail("change_branch_probability needs one probability per branch");
      }
      n->probs = edit.probs;
      break;
    }
  }
  out.validate();
  return out;
}

ProcessModel apply_edits(const ProcessModel& model, std::span<const ProcessEdit> edits) {
  ProcessModel out = model;
  for (const auto& e : edits) out = apply_edit(out, e);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

void sample_node(const ModelNode& n, std::mt19937_64& rng, std::vector<std::string>& out) {
  switch (n.kind) {
    case BlockKind::Activity:
      out.push_back(n.label);
      return;
    case BlockKind::Sequence:
      for (const auto& c : n.children) sample_node(c, rng, out);
      return;
    case BlockKind::Parallel: {
      std::vector<std::vector<std::string>> words(n.children.size());
      std::size_t total = 0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        sample_node(n.children[i], rng, words[i]);
        total += words[i].size();
      }
      // Uniform interleaving: repeatedly pick a child with probability
      // proportional to its remaining length.
      std::vector<std::size_t> at(n.children.size(), 0);
      while (total > 0) {
        std::uniform_int_distribution<std::size_t> dist(0, total - 1);
        std::size_t pick = dist(rng);
        for (std::size_t i = 0; i < words.size(); ++i) {
          std::size_t rem = words[i].size() - at[i];
          if (pick < rem) {
            out.push_back(words[i][at[i]++]);
            break;
          }
          pick -= rem;
        }
        --total;
      }
      return;
    }
    case BlockKind::Choice: {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      double u = dist(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        acc += n.probs[i];
        if (u < acc || i + 1 == n.children.size()) {
          sample_node(n.children[i], rng, out);
          return;
        }
      }
      return;
    }
    case BlockKind::Loop: {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      do {
        sample_node(n.children[0], rng, out);
      } while (dist(rng) < n.repeat_prob);
      return;
    }
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 step over a golden-ratio stride
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::string> sample_trace(const ProcessModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  sample_node(model.root, rng, out);
  if (out.empty()) throw ModelError("model produced an empty trace");
  return out;
}

// ---------------------------------------------------------------------------
// Composition

namespace {

// Synthetic timestamps keep stream order equal to generation order: one
// millisecond tick per event, one thousand per trace.
constexpr Timestamp kTimeBase = 1735689600000LL;  // 2025-01-01T00:00:00Z

Trace make_trace(std::vector<std::string> labels, std::size_t index) {
  Trace t;
  t.case_id = "case_" + std::to_string(index + 1);
  t.events.reserve(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    Timestamp ts = kTimeBase + static_cast<Timestamp>(index) * 1000 +
                   static_cast<Timestamp>(std::min<std::size_t>(j, 999));
    t.events.push_back(Event{std::move(labels[j]), ts});
  }
  return t;
}

void generate_block(const ProcessModel& model, std::uint64_t seed, std::size_t first_index,
                    std::size_t count, std::vector<Trace>& out, int threads) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1) if (threads > 1)
#endif
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(count); ++k) {
    std::size_t idx = first_index + static_cast<std::size_t>(k);
    out[idx] = make_trace(sample_trace(model, derive_seed(seed, idx)), idx);
  }
}

}  // namespace

std::pair<EventLog, GoldStandard> compose_sudden(std::span<const SuddenSegment> segments,
                                                 std::uint64_t seed, int threads) {
  if (segments.empty()) throw std::invalid_argument("compose_sudden: no segments");
  std::size_t total = 0;
  for (const auto& s : segments) {
    if (s.count == 0) throw std::invalid_argument("compose_sudden: segment count must be > 0");
    s.model.validate();
    total += s.count;
  }

  EventLog log;
  log.traces.resize(total);
  GoldStandard gold;
  std::size_t at = 0;
  for (std::size_t si = 0; si < segments.size(); ++si) {
    if (si > 0) gold.sudden.push_back(static_cast<std::int64_t>(at));
    generate_block(segments[si].model, seed, at, segments[si].count, log.traces, threads);
    at += segments[si].count;
  }
  log.rebuild_alphabet();
  return {std::move(log), std::move(gold)};
}

std::pair<EventLog, GoldStandard> compose_gradual(const ProcessModel& a, const ProcessModel& b,
                                                  std::size_t pre_count, std::size_t post_count,
                                                  double slope, std::uint64_t seed, int threads) {
  if (pre_count == 0 || post_count == 0) {
    throw std::invalid_argument("compose_gradual: segment counts must be > 0");
  }
  if (!(slope > 0.0 && slope <= 1.0)) {
    throw std::invalid_argument("compose_gradual: slope must be in (0, 1]");
  }
  a.validate();
  b.validate();

  std::size_t interval = static_cast<std::size_t>(std::ceil(1.0 / slope));
  std::size_t total = pre_count + interval + post_count;

  EventLog log;
  log.traces.resize(total);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1) if (threads > 1)
#endif
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(total); ++k) {
    std::size_t idx = static_cast<std::size_t>(k);
    std::uint64_t s = derive_seed(seed, idx);
    const ProcessModel* m = &a;
    if (idx >= pre_count + interval) {
      m = &b;
    } else if (idx >= pre_count) {
      double p_a = std::max(0.0, 1.0 - slope * static_cast<double>(idx - pre_count));
      std::mt19937_64 pick(derive_seed(s, 0));
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      if (dist(pick) >= p_a) m = &b;
    }
    log.traces[idx] = make_trace(sample_trace(*m, s), idx);
  }

  GoldStandard gold;
  gold.gradual.emplace_back(static_cast<std::int64_t>(pre_count),
                            static_cast<std::int64_t>(pre_count + interval));
  log.rebuild_alphabet();
  return {std::move(log), std::move(gold)};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json node_to_json(const ModelNode& n) {
  json j;
  switch (n.kind) {
    case BlockKind::Activity:
      j["type"] = "act";
      j["label"] = n.label;
      break;
    case BlockKind::Sequence:
      j["type"] = "seq";
      j["children"] = json::array();
      for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
      break;
    case BlockKind::Parallel:
      j["type"] = "and";
      j["children"] = json::array();
      for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
      break;
    case BlockKind::Choice:
      j["type"] = "xor";
      j["children"] = json::array();
      for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
      j["probs"] = n.probs;
      break;
    case BlockKind::Loop:
      j["type"] = "loop";
      j["body"] = node_to_json(n.children[0]);
      j["repeat"] = n.repeat_prob;
      break;
  }
  return j;
}

ModelNode node_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw ModelError("model node must have a type");
  std::string type = j.at("type").get<std::string>();
  if (type == "act") {
    return act(j.at("label").get<std::string>());
  }
  if (type == "loop") {
    return loop(node_from_json(j.at("body")), j.at("repeat").get<double>());
  }
  std::vector<ModelNode> children;
  for (const auto& c : j.value("children", json::array())) children.push_back(node_from_json(c));
  if (type == "seq") return seq(std::move(children));
  if (type == "and") return par(std::move(children));
  if (type == "xor") {
    return branch(std::move(children), j.at("probs").get<std::vector<double>>());
  }
  throw ModelError("unknown model node type '" + type + "'");
}

}  // namespace

std::string model_to_json(const ProcessModel& model) { return node_to_json(model.root).dump(2); }

ProcessModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model JSON: ") + e.what());
  }
  try {
    ProcessModel m{node_from_json(j)};
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("model JSON: ") + e.what());
  }
}

std::string gold_to_json(const GoldStandard& gold) {
  json j;
  j["sudden"] = gold.sudden;
  j["gradual"] = json::array();
  for (const auto& [s, e] : gold.gradual) j["gradual"].push_back(json::array({s, e}));
  return j.dump(2);
}

GoldStandard gold_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("gold JSON: ") + e.what());
  }
  GoldStandard g;
  try {
    for (const auto& v : j.value("sudden", json::array())) g.sudden.push_back(v.get<std::int64_t>());
    for (const auto& v : j.value("gradual", json::array())) {
      g.gradual.emplace_back(v.at(0).get<std::int64_t>(), v.at(1).get<std::int64_t>());
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("gold JSON: ") + e.what());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Bundled fixtures

ProcessModel bundled_base_model() {
  // Loan handling: intake with a completeness-rework loop, parallel
  // credit/property assessment, then either rejection or an offer path
  // with nested decisions.
  // Branch probabilities are kept moderate and the rework loop rare so
  // the base run-frequency distribution has three fat, frequently
  // re-observed runs (one per outcome path) plus a thin rework shadow of
  // each.  The rare decorations (repeat orders of the rework loop, the
  // clarification and audit steps at ~0.6% each) are deliberate: they
  // flicker in and out of the composite window, so the distinct-run
  // count — and with it the adaptive window size — keeps jittering.
  // That churn decorrelates successive tests and breaks up the long
  // chance dips in the p-value that would otherwise pass the
  // oscillation filter on drift-free streams; with a frozen support the
  // window never moves and such dips live out their full length.
  ProcessModel m{seq({
      act("receive_application"),
      loop(act("check_completeness"), 0.1),
      par({
          seq({act("check_credit_history"), act("assess_loan_risk")}),
          act("appraise_property"),
      }),
      seq({
          act("assess_eligibility"),
          branch({seq({}), act("request_clarification")}, {0.994, 0.006}),
      }),
      branch(
          {
              seq({
                  act("reject_application"),
                  branch({seq({}), act("log_rejection_reason")}, {0.994, 0.006}),
                  act("notify_rejection"),
              }),
              seq({
                  act("prepare_offer"),
                  act("send_offer"),
                  act("receive_signed_offer"),
                  branch({seq({}), act("request_cosigner")}, {0.994, 0.006}),
                  branch({act("accept_offer"), act("decline_offer")}, {0.6, 0.4}),
                  act("verify_repayment_terms"),
                  act("approve_loan"),
              }),
          },
          {0.35, 0.65}),
      seq({
          branch({seq({}), act("audit_snapshot")}, {0.994, 0.006}),
          act("archive_case"),
      }),
  })};
  return m;
}

std::vector<std::string> bundled_variant_names() { return {"re", "pl", "lp", "cb", "sw", "fr"}; }

ProcessModel bundled_variant(const std::string& name) {
  ProcessModel base = bundled_base_model();
  ProcessEdit e;
  if (name == "re") {
    // An extra background check runs ahead of the credit chain, alongside
    // the property appraisal.
    e.kind = ProcessEdit::Kind::InsertFragment;
    e.path = {2, 0};
    e.fragment = act("run_background_check");
  } else if (name == "pl") {
    // Credit checks become concurrent.
    e.kind = ProcessEdit::Kind::Parallelize;
    e.path = {2, 0};
  } else if (name == "lp") {
    // The whole assessment block becomes repeatable.
    e.kind = ProcessEdit::Kind::MakeLoopable;
    e.path = {2};
    e.param = 0.4;
  } else if (name == "cb") {
    // Property appraisal becomes optional.
    e.kind = ProcessEdit::Kind::MakeSkippable;
    e.path = {2, 1};
  } else if (name == "sw") {
    // Completeness check moves after the assessments.
    e.kind = ProcessEdit::Kind::SwapFragments;
    e.path = {1};
    e.path_b = {3};
  } else if (name == "fr") {
    // Rejections become the dominant outcome.
    e.kind = ProcessEdit::Kind::ChangeBranchProbability;
    e.path = {4};
    e.probs = {0.8, 0.2};
  } else {
    throw std::out_of_range("unknown bundled variant '" + name + "'");
  }
  return apply_edit(base, e);
}

std::optional<ProcessModel> resolve_builtin_model(const std::string& name) {
  if (name == "base") return bundled_base_model();
  if (name.rfind("base-", 0) == 0) {
    std::string variant = name.substr(5);
    for (const auto& v : bundled_variant_names()) {
      if (v == variant) return bundled_variant(variant);
    }
  }
  return std::nullopt;
}

}  // namespace rundrift
