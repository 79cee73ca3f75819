#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltt/ast.hpp"

namespace ltt {

inline constexpr int kAncestorHistory = 10;
inline constexpr int kLastTokens = 10;
inline constexpr int kDepthCap = 32;
inline constexpr int kRankCap = 9;

// Event stream produced by a depth-first traversal.
struct TraversalEvent {
  enum class Type { Descend, EmitToken, Ascend };
  Type type = Type::Descend;
  NodeLabel label;      // Descend
  int child_index = 0;  // Descend: position of the node inside its parent
  Token token;          // EmitToken

  static TraversalEvent descend(NodeLabel label, int child_index) {
    return {Type::Descend, label, child_index, {}};
  }
  static TraversalEvent emit(Token token) {
    return {Type::EmitToken, {}, 0, std::move(token)};
  }
  static TraversalEvent ascend() { return {Type::Ascend, {}, 0, {}}; }
};

struct AncestorEntry {
  NodeLabel label;
  int child_index = 0;  // index of the child leading toward the current node

  friend bool operator==(const AncestorEntry&, const AncestorEntry&) = default;
};

// Deterministic traversal variables at the current node.
class DeterministicContext {
 public:
  // Number of ancestors of the current node (uncapped; see capped_depth).
  int depth() const { return path_.empty() ? 0 : static_cast<int>(path_.size()) - 1; }
  int capped_depth() const { return depth() > kDepthCap ? kDepthCap + 1 : depth(); }
  std::optional<NodeLabel> current() const;
  // Kind of the current node's parent.
  std::optional<NodeLabel> parent() const;
  // Up to kAncestorHistory entries, most recent last.
  std::vector<AncestorEntry> ancestor_history() const;
  // Up to kLastTokens token texts, most recent last.
  const std::vector<std::string>& last_tokens() const { return last_tokens_; }

  void set_last_tokens(std::vector<std::string> tokens);

  friend bool operator==(const DeterministicContext&,
                         const DeterministicContext&) = default;

 private:
  friend DeterministicContext update_context(DeterministicContext,
                                             const TraversalEvent&);
  std::vector<AncestorEntry> path_;  // root first; child_index of each node in its parent
  std::vector<std::string> last_tokens_;
};

// Pure update; throws StructuralError on ascending past the root.
DeterministicContext update_context(DeterministicContext ctx,
                                    const TraversalEvent& event);

struct VariableFeatureVector {
  std::string identifier;
  std::string type;
  int decl_rank = 0;    // 0 = most recently declared
  int assign_rank = 0;  // 0 = most recently assigned

  friend bool operator==(const VariableFeatureVector&,
                         const VariableFeatureVector&) = default;
};

// Set of visible variables with a per-frame undo log. Identifiers are
// unique; a redeclaration shadows the visible entry until its frame closes.
class ScopeSet {
 public:
  void push_frame();
  void pop_frame();
  void declare(const std::string& identifier, const std::string& type);
  void assign(const std::string& identifier);

  bool contains(const std::string& identifier) const;
  std::optional<VariableFeatureVector> lookup(const std::string& identifier) const;
  // Members sorted by declaration recency (decl_rank 0 first).
  std::vector<VariableFeatureVector> members() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t frame_depth() const { return frames_.size(); }

  friend bool operator==(const ScopeSet&, const ScopeSet&) = default;

 private:
  struct Entry {
    std::string identifier;
    std::string type;
    long decl_time = 0;
    long assign_time = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  struct Undo {
    std::string identifier;
    std::optional<Entry> shadowed;
    friend bool operator==(const Undo&, const Undo&) = default;
  };
  int rank_of(long Entry::*field, const Entry& e) const;

  std::vector<Entry> entries_;
  std::vector<std::vector<Undo>> frames_;
  long clock_ = 0;
};

// Recognizes declarations, assignments and scope boundaries in the event
// stream: function parameters, block-local declarations (including for
// initializers) and earlier top-level declarations.
class ScopeTracker {
 public:
  ScopeTracker() = default;
  explicit ScopeTracker(ScopeSet initial) : scope_(std::move(initial)) {}

  void update(const TraversalEvent& event);
  const ScopeSet& scope() const { return scope_; }

 private:
  struct Frame {
    NodeLabel label;
    int child_index = 0;
    std::string type_text;                  // Type nodes
    std::string declared_type;              // VarDecl / Param
    std::string declared_name;              // Param
    std::optional<std::string> assigned;    // AssignExpression / IncrementExpression
  };
  Frame* find_parent(std::size_t up);
  static bool opens_scope(NodeKind kind) {
    return kind == NodeKind::Block || kind == NodeKind::ForStatement ||
           kind == NodeKind::FunctionDecl;
  }

  ScopeSet scope_;
  std::vector<Frame> path_;
};

enum class IdentifierScope { Local, Global };

IdentifierScope classify_identifier(const ScopeSet& scope, const Token& token);

// Traversal-order event stream of a tree.
std::vector<TraversalEvent> traversal_events(const Tree& tree);

// Context and scope tracked together over one traversal.
class TraversalTrace {
 public:
  TraversalTrace() = default;
  TraversalTrace(ScopeSet initial_scope, std::vector<std::string> initial_tokens);

  void apply(const TraversalEvent& event);
  const DeterministicContext& context() const { return context_; }
  const ScopeSet& scope() const { return scope_.scope(); }

 private:
  DeterministicContext context_;
  ScopeTracker scope_;
};

// Copy of `tree` with every IdentifierName labelled local (identifier in
// scope when the node is visited) or global.
Tree annotate_identifiers(const Tree& tree);

}  // namespace ltt
