#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/context.hpp"
#include "ltt/lbl_model.hpp"

namespace ltt {

struct SampleConfig {
  NodeLabel root{NodeKind::CompilationUnit, Annotation::None};
  std::uint64_t seed = 1;
  long max_expansions = 10000;
  int max_attempts = 20;
  // Variables visible before generation starts (declaration order).
  std::vector<VariableFeatureVector> initial_scope;
  std::vector<std::string> initial_last_tokens;

  void validate() const;
};

// One candidate children tuple of the node awaiting expansion.
struct TupleChoice {
  std::vector<Symbol> children;
  double prob = 0.0;
};

// Partial state of stack-driven depth-first generation: the stack of
// pending nodes and tokens, traversal variables, scope, latent state and
// the tree built so far.
class SamplerState {
 public:
  SamplerState(const LttModel& model, const SampleConfig& config);

  // Consumes tokens and completed nodes up to the next node awaiting
  // expansion. Returns false once the stack is empty.
  bool advance();
  bool done() const { return stack_.empty() && !pending_; }

  const NodeLabel& pending_label() const;
  // Children distribution of the pending node given latent state `state`
  // (ignored for single-state models): smoothed probabilities restricted to
  // the support, renormalized.
  std::vector<TupleChoice> distribution(int state) const;
  // Next-production distribution, marginalized over the next latent state.
  std::vector<TupleChoice> next_distribution() const;
  // Transition row for the next latent state.
  std::vector<double> next_state_probs() const;
  void expand(const std::vector<Symbol>& children, int state = 0);

  long expansions() const { return expansions_; }
  int latent_state() const { return latent_; }
  const TraversalTrace& trace() const { return trace_; }
  const Tree& tree() const { return tree_; }

  // Replays the first `productions` productions of `tree` (rooted at the
  // configured root). Throws StructuralError if they are not reachable.
  static SamplerState from_prefix(const LttModel& model, const SampleConfig& config,
                                  const Tree& tree, std::size_t productions);

 private:
  struct Item {
    enum class Op : std::uint8_t { Enter, Token, Leave } op;
    int id;
    int child_index;
  };
  const std::vector<std::vector<Symbol>>& row_tuples(int row) const;

  const LttModel* model_;
  TraversalTrace trace_;
  Tree tree_;
  std::vector<Item> stack_;
  bool pending_ = false;
  int pending_id_ = -1;
  int latent_ = -1;  // -1 before the first production
  long expansions_ = 0;
  mutable std::map<int, std::vector<std::vector<Symbol>>> tuple_cache_;
};

struct SampleResult {
  Tree tree;
  std::string text;
  long expansions = 0;
  int attempts = 1;
};

// Draws one tree; each children tuple comes from the smoothed distribution
// restricted to the observed support (or the in-scope variables).
// Throws RejectionError when the expansion cap is hit.
Tree sample_tree(const LttModel& model, const SampleConfig& config, std::mt19937_64& rng);

// Samples with retries on rejection; the RNG stream continues across
// attempts.
SampleResult sample_program(const LttModel& model, const SampleConfig& config,
                            std::mt19937_64& rng);

// Exact next-production distribution for a partial state.
std::vector<TupleChoice> conditional_prefix_distribution(const SamplerState& state);

}  // namespace ltt
