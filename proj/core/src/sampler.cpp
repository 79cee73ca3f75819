#include "ltt/sampler.hpp"

#include <algorithm>

#include "ltt/error.hpp"
#include "ltt/features.hpp"
#include "ltt/minilang.hpp"
#include "ltt/training.hpp"

namespace ltt {

namespace {

ScopeSet initial_scope_set(const std::vector<VariableFeatureVector>& vars) {
  std::vector<const VariableFeatureVector*> by_decl, by_assign;
  for (const auto& v : vars) {
    by_decl.push_back(&v);
    by_assign.push_back(&v);
  }
  std::stable_sort(by_decl.begin(), by_decl.end(),
                   [](auto* a, auto* b) { return a->decl_rank > b->decl_rank; });
  std::stable_sort(by_assign.begin(), by_assign.end(),
                   [](auto* a, auto* b) { return a->assign_rank > b->assign_rank; });
  ScopeSet scope;
  for (auto* v : by_decl) scope.declare(v->identifier, v->type);
  for (auto* v : by_assign) scope.assign(v->identifier);
  return scope;
}

bool is_local_identifier(const NodeLabel& label) {
  return label.kind == NodeKind::IdentifierName && label.annotation == Annotation::Local;
}

}  // namespace

void SampleConfig::validate() const {
  if (max_expansions < 1) throw ConfigError("max_expansions must be at least 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

SamplerState::SamplerState(const LttModel& model, const SampleConfig& config)
    : model_(&model),
      trace_(initial_scope_set(config.initial_scope), config.initial_last_tokens) {
  config.validate();
  if (!model.support.row_index(config.root)) {
    throw ConfigError("root kind " + config.root.name() + " never occurs as a parent in training");
  }
  const int root = tree_.add_node(config.root);
  tree_.set_root(root);
  stack_.push_back({Item::Op::Enter, root, 0});
}

bool SamplerState::advance() {
  if (pending_) return true;
  while (!stack_.empty()) {
    Item item = stack_.back();
    stack_.pop_back();
    switch (item.op) {
      case Item::Op::Token:
        trace_.apply(TraversalEvent::emit(tree_.token(item.id)));
        break;
      case Item::Op::Leave:
        trace_.apply(TraversalEvent::ascend());
        break;
      case Item::Op::Enter: {
        Node& n = tree_.node(item.id);
        // Forced case: the local path has nothing to choose from.
        if (is_local_identifier(n.label) && trace_.scope().empty()) {
          n.label.annotation = Annotation::Global;
        }
        trace_.apply(TraversalEvent::descend(n.label, item.child_index));
        stack_.push_back({Item::Op::Leave, item.id, item.child_index});
        pending_ = true;
        pending_id_ = item.id;
        return true;
      }
    }
  }
  return false;
}

const NodeLabel& SamplerState::pending_label() const {
  if (!pending_) throw StructuralError("no node is awaiting expansion");
  return tree_.node(pending_id_).label;
}

const std::vector<std::vector<Symbol>>& SamplerState::row_tuples(int row) const {
  auto it = tuple_cache_.find(row);
  if (it != tuple_cache_.end()) return it->second;
  std::vector<std::vector<Symbol>> tuples;
  for (const auto& key : model_->support.row(row).tuples) tuples.push_back(parse_tuple_key(key));
  return tuple_cache_.emplace(row, std::move(tuples)).first->second;
}

std::vector<TupleChoice> SamplerState::distribution(int state) const {
  const NodeLabel& label = pending_label();
  const LttModel& m = *model_;
  const int h = m.latent_states() > 1 ? state : 0;
  std::vector<ResolvedFeature> features;
  for (const ContextFeature& f : context_features(label, trace_.context(), m.features)) {
    auto id = m.params.objects().find(f.key);
    features.push_back({f.slot, id ? *id : -1});
  }
  std::vector<TupleChoice> out;
  if (m.features.scope && is_local_identifier(label)) {
    const auto members = trace_.scope().members();
    std::vector<ScopeCandidate> candidates;
    for (const auto& v : members) candidates.push_back(m.resolve_scope(v));
    auto probs = scope_token_distribution(m.params, m.context_for(features, h), candidates);
    for (std::size_t i = 0; i < members.size(); ++i) {
      Symbol s;
      s.is_token = true;
      s.token = Token{members[i].identifier, TokenKind::Identifier};
      out.push_back({{s}, probs[i]});
    }
  } else {
    auto row = m.support.row_index(label);
    if (!row) throw RejectionError("no observed expansion for " + label.name());
    auto probs = m.base_distribution(*row, features, h);
    const auto& tuples = row_tuples(*row);
    for (std::size_t i = 0; i < tuples.size(); ++i) out.push_back({tuples[i], probs[i]});
  }
  // Smoothed probabilities restricted to the candidates, renormalized.
  double total = 0.0;
  for (TupleChoice& c : out) {
    c.prob = smoothed_children_prob(c.prob, m.defaults.prob(label, c.children, m.smoothing.alpha),
                                    m.smoothing.pi);
    total += c.prob;
  }
  for (TupleChoice& c : out) c.prob /= total;
  return out;
}

std::vector<double> SamplerState::next_state_probs() const {
  const TransitionModel& t = model_->transitions;
  std::vector<double> p(t.states());
  for (int k = 0; k < t.states(); ++k) p[k] = latent_ < 0 ? t.prior(k) : t.prob(latent_, k);
  return p;
}

std::vector<TupleChoice> SamplerState::next_distribution() const {
  if (model_->latent_states() <= 1) return distribution(0);
  const auto weights = next_state_probs();
  std::vector<TupleChoice> out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    auto d = distribution(static_cast<int>(k));
    if (out.empty()) {
      out = d;
      for (auto& c : out) c.prob = 0.0;
    }
    for (std::size_t i = 0; i < d.size(); ++i) out[i].prob += weights[k] * d[i].prob;
  }
  return out;
}

void SamplerState::expand(const std::vector<Symbol>& children, int state) {
  if (!pending_) throw StructuralError("no node is awaiting expansion");
  if (children.empty()) throw StructuralError("empty children tuple");
  std::vector<Child> kids;
  for (const Symbol& s : children) {
    kids.push_back(s.is_token ? Child::token(tree_.add_token(s.token))
                              : Child::node(tree_.add_node(s.label)));
  }
  for (int i = static_cast<int>(kids.size()) - 1; i >= 0; --i) {
    stack_.push_back({kids[i].is_token() ? Item::Op::Token : Item::Op::Enter, kids[i].index, i});
  }
  tree_.node(pending_id_).children = std::move(kids);
  pending_ = false;
  latent_ = state;
  ++expansions_;
}

SamplerState SamplerState::from_prefix(const LttModel& model, const SampleConfig& config,
                                       const Tree& tree, std::size_t productions) {
  const Tree source = model.features.scope ? annotate_identifiers(tree) : tree.without_annotations();
  const auto prods = depth_first_productions(source);
  if (productions > prods.size()) {
    throw StructuralError("prefix longer than the tree's production sequence");
  }
  SamplerState state(model, config);
  for (std::size_t i = 0; i < productions; ++i) {
    if (!state.advance() || !(state.pending_label() == prods[i].parent)) {
      throw StructuralError("prefix production " + std::to_string(i) +
                            " is not reachable from the sampler state");
    }
    state.expand(prods[i].children, 0);
  }
  state.advance();
  return state;
}

Tree sample_tree(const LttModel& model, const SampleConfig& config, std::mt19937_64& rng) {
  SamplerState state(model, config);
  const bool latent = model.latent_states() > 1;
  while (state.advance()) {
    if (state.expansions() >= config.max_expansions) {
      throw RejectionError("expansion cap of " + std::to_string(config.max_expansions) +
                           " reached");
    }
    int h = 0;
    if (latent) h = sample_index(state.next_state_probs(), rng);
    auto choices = state.distribution(h);
    std::vector<double> probs;
    probs.reserve(choices.size());
    for (const auto& c : choices) probs.push_back(c.prob);
    state.expand(choices[sample_index(probs, rng)].children, h);
  }
  return state.tree();
}

SampleResult sample_program(const LttModel& model, const SampleConfig& config,
                            std::mt19937_64& rng) {
  config.validate();
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    try {
      SampleResult r;
      r.tree = sample_tree(model, config, rng);
      r.text = minilang::unparse(r.tree);
      r.expansions = static_cast<long>(r.tree.internal_node_count());
      r.attempts = attempt;
      return r;
    } catch (const RejectionError&) {
      if (attempt == config.max_attempts) throw;
    }
  }
  throw RejectionError("sampling failed");
}

std::vector<TupleChoice> conditional_prefix_distribution(const SamplerState& state) {
  return state.next_distribution();
}

}  // namespace ltt
