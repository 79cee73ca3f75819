#include "ltt/context.hpp"

#include <algorithm>

namespace ltt {

std::optional<NodeLabel> DeterministicContext::current() const {
  if (path_.empty()) return std::nullopt;
  return path_.back().label;
}

std::optional<NodeLabel> DeterministicContext::parent() const {
  if (path_.size() < 2) return std::nullopt;
  return path_[path_.size() - 2].label;
}

std::vector<AncestorEntry> DeterministicContext::ancestor_history() const {
  std::vector<AncestorEntry> out;
  if (path_.size() < 2) return out;
  std::size_t n = path_.size() - 1;
  std::size_t first = n > kAncestorHistory ? n - kAncestorHistory : 0;
  for (std::size_t j = first; j < n; ++j) {
    out.push_back({path_[j].label, path_[j + 1].child_index});
  }
  return out;
}

void DeterministicContext::set_last_tokens(std::vector<std::string> tokens) {
  if (tokens.size() > kLastTokens) {
    tokens.erase(tokens.begin(), tokens.end() - kLastTokens);
  }
  last_tokens_ = std::move(tokens);
}

DeterministicContext update_context(DeterministicContext ctx,
                                    const TraversalEvent& event) {
  switch (event.type) {
    case TraversalEvent::Type::Descend:
      ctx.path_.push_back({event.label, event.child_index});
      break;
    case TraversalEvent::Type::EmitToken:
      ctx.last_tokens_.push_back(event.token.text);
      if (ctx.last_tokens_.size() > kLastTokens) {
        ctx.last_tokens_.erase(ctx.last_tokens_.begin());
      }
      break;
    case TraversalEvent::Type::Ascend:
      if (ctx.path_.empty()) throw StructuralError("ascend past the root");
      ctx.path_.pop_back();
      break;
  }
  return ctx;
}

void ScopeSet::push_frame() { frames_.emplace_back(); }

void ScopeSet::pop_frame() {
  if (frames_.empty()) throw StructuralError("scope frame underflow");
  auto& undo = frames_.back();
  for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
    auto pos = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
      return e.identifier == it->identifier;
    });
    if (pos != entries_.end()) entries_.erase(pos);
    if (it->shadowed) entries_.push_back(*it->shadowed);
  }
  frames_.pop_back();
}

void ScopeSet::declare(const std::string& identifier, const std::string& type) {
  ++clock_;
  Undo undo{identifier, std::nullopt};
  auto pos = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.identifier == identifier;
  });
  if (pos != entries_.end()) {
    undo.shadowed = *pos;
    entries_.erase(pos);
  }
  entries_.push_back({identifier, type, clock_, clock_});
  // Declarations outside any frame (top level) are permanent.
  if (!frames_.empty()) frames_.back().push_back(std::move(undo));
}

void ScopeSet::assign(const std::string& identifier) {
  for (Entry& e : entries_) {
    if (e.identifier == identifier) {
      e.assign_time = ++clock_;
      return;
    }
  }
}

bool ScopeSet::contains(const std::string& identifier) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.identifier == identifier; });
}

int ScopeSet::rank_of(long Entry::*field, const Entry& e) const {
  int rank = 0;
  for (const Entry& other : entries_) {
    if (other.*field > e.*field) ++rank;
  }
  return rank;
}

std::optional<VariableFeatureVector> ScopeSet::lookup(
    const std::string& identifier) const {
  for (const Entry& e : entries_) {
    if (e.identifier == identifier) {
      return VariableFeatureVector{e.identifier, e.type,
                                   rank_of(&Entry::decl_time, e),
                                   rank_of(&Entry::assign_time, e)};
    }
  }
  return std::nullopt;
}

std::vector<VariableFeatureVector> ScopeSet::members() const {
  std::vector<VariableFeatureVector> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) {
    out.push_back({e.identifier, e.type, rank_of(&Entry::decl_time, e),
                   rank_of(&Entry::assign_time, e)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.decl_rank < b.decl_rank;
  });
  return out;
}

ScopeTracker::Frame* ScopeTracker::find_parent(std::size_t up) {
  if (path_.size() <= up) return nullptr;
  return &path_[path_.size() - 1 - up];
}

void ScopeTracker::update(const TraversalEvent& event) {
  switch (event.type) {
    case TraversalEvent::Type::Descend: {
      path_.push_back(Frame{event.label, event.child_index, {}, {}, {}, {}});
      if (opens_scope(event.label.kind)) scope_.push_frame();
      break;
    }
    case TraversalEvent::Type::EmitToken: {
      Frame* top = find_parent(0);
      if (!top) break;
      Frame* parent = find_parent(1);
      const std::string& text = event.token.text;
      switch (top->label.kind) {
        case NodeKind::Type:
          top->type_text += text;
          if (parent) parent->declared_type = top->type_text;
          break;
        case NodeKind::DeclaratorName:
          if (parent && parent->label.kind == NodeKind::VarDecl) {
            scope_.declare(text, parent->declared_type);
          } else if (parent && parent->label.kind == NodeKind::Param) {
            parent->declared_name = text;
          }
          break;
        case NodeKind::IdentifierName:
          if (parent && top->child_index == 0 &&
              parent->label.kind == NodeKind::AssignExpression) {
            parent->assigned = text;
          } else if (parent && parent->label.kind == NodeKind::IncrementExpression) {
            parent->assigned = text;
          }
          break;
        default:
          break;
      }
      break;
    }
    case TraversalEvent::Type::Ascend: {
      if (path_.empty()) throw StructuralError("ascend past the root");
      Frame done = std::move(path_.back());
      path_.pop_back();
      switch (done.label.kind) {
        case NodeKind::Param:
          if (!done.declared_name.empty()) {
            scope_.declare(done.declared_name, done.declared_type);
          }
          break;
        case NodeKind::AssignExpression:
        case NodeKind::IncrementExpression:
          if (done.assigned) scope_.assign(*done.assigned);
          break;
        default:
          break;
      }
      if (opens_scope(done.label.kind)) scope_.pop_frame();
      break;
    }
  }
}

IdentifierScope classify_identifier(const ScopeSet& scope, const Token& token) {
  return scope.contains(token.text) ? IdentifierScope::Local
                                    : IdentifierScope::Global;
}

namespace {

struct EventCollector {
  std::vector<TraversalEvent> events;
  void enter(const Tree& tree, int id, int child_index) {
    events.push_back(TraversalEvent::descend(tree.node(id).label, child_index));
  }
  void token(const Tree& tree, int id) {
    events.push_back(TraversalEvent::emit(tree.token(id)));
  }
  void leave(const Tree&, int) { events.push_back(TraversalEvent::ascend()); }
};

struct Annotator {
  Tree* out;
  TraversalTrace trace;
  void enter(const Tree& tree, int id, int child_index) {
    const Node& n = tree.node(id);
    if (n.label.kind == NodeKind::IdentifierName && n.children.size() == 1 &&
        n.children[0].is_token()) {
      auto scope = classify_identifier(trace.scope(), tree.token(n.children[0].index));
      out->node(id).label.annotation = scope == IdentifierScope::Local
                                           ? Annotation::Local
                                           : Annotation::Global;
    }
    trace.apply(TraversalEvent::descend(n.label, child_index));
  }
  void token(const Tree& tree, int id) {
    trace.apply(TraversalEvent::emit(tree.token(id)));
  }
  void leave(const Tree&, int) { trace.apply(TraversalEvent::ascend()); }
};

}  // namespace

std::vector<TraversalEvent> traversal_events(const Tree& tree) {
  if (!tree.empty() && tree.node(tree.root()).children.empty()) {
    // Empty program: the bare root.
    return {TraversalEvent::descend(tree.node(tree.root()).label, 0), TraversalEvent::ascend()};
  }
  EventCollector c;
  traverse_depth_first(tree, c);
  return std::move(c.events);
}

TraversalTrace::TraversalTrace(ScopeSet initial_scope,
                               std::vector<std::string> initial_tokens)
    : scope_(std::move(initial_scope)) {
  context_.set_last_tokens(std::move(initial_tokens));
}

void TraversalTrace::apply(const TraversalEvent& event) {
  context_ = update_context(std::move(context_), event);
  scope_.update(event);
}

Tree annotate_identifiers(const Tree& tree) {
  Tree out = tree.without_annotations();
  if (!out.empty() && out.node(out.root()).children.empty()) return out;
  Annotator a{&out, {}};
  traverse_depth_first(tree, a);
  return out;
}

}  // namespace ltt
