#include "ltt/features.hpp"

#include <algorithm>

namespace ltt {

std::string label_key(const NodeLabel& label) { return "kind:" + label.name(); }
std::string token_key(const std::string& text) { return "tok:" + text; }
std::string tuple_object_key(const std::string& tuple_key) {
  return "tuple:" + tuple_key;
}
std::string latent_key(int state) { return "latent:" + std::to_string(state); }

std::array<std::string, kScopeFeatures> scope_feature_keys(
    const VariableFeatureVector& v) {
  return {token_key(v.identifier), "type:" + v.type,
          "decl:" + std::to_string(std::min(v.decl_rank, kRankCap)),
          "asg:" + std::to_string(std::min(v.assign_rank, kRankCap))};
}

std::vector<ContextFeature> context_features(const NodeLabel& parent,
                                             const DeterministicContext& ctx,
                                             const FeatureSet& features) {
  std::vector<ContextFeature> out;
  out.push_back({slot::kParent, label_key(parent)});
  if (features.hierarchy) {
    int depth = ctx.capped_depth();
    out.push_back({slot::kDepth, depth > kDepthCap ? std::string("depth:deep")
                                                   : "depth:" + std::to_string(depth)});
    if (auto p = ctx.parent()) out.push_back({slot::kParentKind, "par:" + p->name()});
    auto history = ctx.ancestor_history();
    int j = 0;
    for (auto it = history.rbegin(); it != history.rend(); ++it, ++j) {
      out.push_back({slot::kAncestor + j, "anc:" + it->label.name() + "#" +
                                              std::to_string(it->child_index)});
    }
  }
  if (features.sequence) {
    const auto& tokens = ctx.last_tokens();
    int j = 0;
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it, ++j) {
      out.push_back({slot::kToken + j, token_key(*it)});
    }
  }
  return out;
}

namespace {

struct Tracer {
  const FeatureSet* features;
  TraversalTrace trace;
  std::vector<TracedProduction> out;

  void enter(const Tree& tree, int id, int child_index) {
    const Node& n = tree.node(id);
    trace.apply(TraversalEvent::descend(n.label, child_index));
    TracedProduction tp;
    tp.production.parent = n.label;
    tp.production.step = static_cast<int>(out.size());
    tp.production.node = id;
    for (const Child& c : n.children) {
      tp.production.children.push_back(Symbol::of(tree, c));
    }
    tp.features = context_features(n.label, trace.context(), *features);
    if (n.label.kind == NodeKind::IdentifierName &&
        n.label.annotation == Annotation::Local) {
      tp.scope = trace.scope().members();
    }
    out.push_back(std::move(tp));
  }
  void token(const Tree& tree, int id) {
    trace.apply(TraversalEvent::emit(tree.token(id)));
  }
  void leave(const Tree&, int) { trace.apply(TraversalEvent::ascend()); }
};

}  // namespace

std::vector<TracedProduction> trace_productions(const Tree& tree,
                                                const FeatureSet& features) {
  Tracer t{&features, {}, {}};
  if (features.scope) {
    Tree annotated = annotate_identifiers(tree);
    traverse_depth_first(annotated, t);
  } else {
    traverse_depth_first(tree.without_annotations(), t);
  }
  return std::move(t.out);
}

}  // namespace ltt
