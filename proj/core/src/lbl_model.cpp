#include "ltt/lbl_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ltt/error.hpp"

namespace ltt {

std::vector<double> context_repr(const ParamStore& params,
                                 std::span<const ResolvedFeature> features) {
  const int dim = params.dim();
  std::vector<double> out(dim, 0.0);
  for (const ResolvedFeature& f : features) {
    if (f.id < 0) continue;
    auto w = params.w_context(f.slot);
    auto r = params.row(f.id);
    for (int d = 0; d < dim; ++d) out[d] += w[d] * r[d];
  }
  return out;
}

double children_score(const ParamStore& params, std::span<const double> r_con,
                      int tuple_id) {
  if (tuple_id < 0) return 0.0;
  auto r = params.row(tuple_id);
  double s = params.bias(tuple_id);
  for (std::size_t d = 0; d < r_con.size(); ++d) s += r[d] * r_con[d];
  return s;
}

std::vector<double> scope_repr(const ParamStore& params, const ScopeCandidate& v) {
  const int dim = params.dim();
  std::vector<double> out(dim, 0.0);
  for (int u = 0; u < kScopeFeatures; ++u) {
    if (v[u] < 0) continue;
    auto w = params.w_children(u);
    auto r = params.row(v[u]);
    for (int d = 0; d < dim; ++d) out[d] += w[d] * r[d];
  }
  return out;
}

double scope_bias(const ParamStore& params, const ScopeCandidate& v) {
  double b = 0.0;
  for (int id : v) {
    if (id >= 0) b += params.bias(id);
  }
  return b;
}

double scope_score(const ParamStore& params, std::span<const double> r_con,
                   const ScopeCandidate& v) {
  auto rch = scope_repr(params, v);
  double s = scope_bias(params, v);
  for (std::size_t d = 0; d < r_con.size(); ++d) s += rch[d] * r_con[d];
  return s;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : out) v /= z;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;
  double z = 0.0;
  for (double v : values) z += std::exp(v - mx);
  return mx + std::log(z);
}

std::vector<double> children_distribution(const ParamStore& params,
                                          std::span<const double> r_con,
                                          std::span<const int> support_ids) {
  if (support_ids.empty()) {
    throw ModelingError("empty support: fall back to the default children model");
  }
  std::vector<double> scores;
  scores.reserve(support_ids.size());
  for (int id : support_ids) scores.push_back(children_score(params, r_con, id));
  return softmax(scores);
}

std::vector<double> scope_token_distribution(
    const ParamStore& params, std::span<const double> r_con,
    std::span<const ScopeCandidate> candidates) {
  if (candidates.empty()) {
    throw ModelingError("local identifier requested with an empty scope");
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(scope_score(params, r_con, c));
  return softmax(scores);
}

double smoothed_children_prob(double base_prob, double default_prob, double pi) {
  return pi * base_prob + (1.0 - pi) * default_prob;
}

void SupportTable::observe(const NodeLabel& parent, const std::string& tuple_key,
                           long count) {
  auto [it, inserted] = by_label_.try_emplace(parent, static_cast<int>(rows_.size()));
  if (inserted) rows_.push_back(Row{parent, {}, {}, 0, {}});
  Row& row = rows_[it->second];
  auto [pos, fresh] = row.index.try_emplace(tuple_key, static_cast<int>(row.tuples.size()));
  if (fresh) {
    row.tuples.push_back(tuple_key);
    row.counts.push_back(0);
  }
  row.counts[pos->second] += count;
  row.total += count;
}

std::optional<int> SupportTable::row_index(const NodeLabel& parent) const {
  auto it = by_label_.find(parent);
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SupportTable::tuple_index(int row,
                                             const std::string& tuple_key) const {
  const Row& r = rows_.at(row);
  auto it = r.index.find(tuple_key);
  if (it == r.index.end()) return std::nullopt;
  return it->second;
}

double poisson_pmf(int n, double lambda) {
  if (lambda <= 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
}

void DefaultModel::observe(const Production& production) {
  observe(production.parent, production.children);
}

void DefaultModel::observe(const NodeLabel& parent,
                           const std::vector<Symbol>& children) {
  Stats& s = stats_[parent];
  ++s.tuples;
  ++all_tuples_;
  s.symbols += static_cast<long>(children.size());
  all_symbols_ += static_cast<long>(children.size());
  const bool single_token = children.size() == 1 && children[0].is_token;
  if (!single_token) s.token_only = false;
  if (single_token) ++s.token_counts[children[0].str()];
  for (const Symbol& c : children) {
    ++s.symbol_counts[c.str()];
    if (c.is_token) token_universe_.insert(c.str());
  }
}

void DefaultModel::add_universe_token(const Token& token) {
  Symbol s;
  s.is_token = true;
  s.token = token;
  token_universe_.insert(s.str());
}

void DefaultModel::restore(std::map<NodeLabel, Stats> stats,
                           std::set<std::string> token_universe) {
  stats_ = std::move(stats);
  token_universe_ = std::move(token_universe);
  all_tuples_ = 0;
  all_symbols_ = 0;
  for (const auto& [label, s] : stats_) {
    all_tuples_ += s.tuples;
    all_symbols_ += s.symbols;
  }
}

std::size_t DefaultModel::symbol_universe_size() const {
  // Every node kind, the two annotated IdentifierName variants, and tokens.
  return token_universe_.size() + kNodeKindCount + 2;
}

double DefaultModel::lambda(const NodeLabel& parent) const {
  auto it = stats_.find(parent);
  if (it != stats_.end() && it->second.tuples > 0) {
    return static_cast<double>(it->second.symbols) / it->second.tuples;
  }
  if (all_tuples_ > 0) return static_cast<double>(all_symbols_) / all_tuples_;
  return 1.0;
}

bool DefaultModel::token_only(const NodeLabel& parent) const {
  auto it = stats_.find(parent);
  return it != stats_.end() && it->second.tuples > 0 && it->second.token_only;
}

double DefaultModel::prob(const NodeLabel& parent, const std::vector<Symbol>& tuple,
                          double alpha) const {
  auto it = stats_.find(parent);
  const Stats* s = it == stats_.end() ? nullptr : &it->second;
  const double vocab = std::max<double>(1.0, static_cast<double>(token_universe_.size()));
  if (s && s->tuples > 0 && s->token_only && tuple.size() == 1 && tuple[0].is_token) {
    auto c = s->token_counts.find(tuple[0].str());
    const double count = c == s->token_counts.end() ? 0.0 : static_cast<double>(c->second);
    return (count + alpha) / (static_cast<double>(s->tuples) + alpha * vocab);
  }
  const double universe = static_cast<double>(symbol_universe_size());
  double p = poisson_pmf(static_cast<int>(tuple.size()), lambda(parent));
  const double total = s ? static_cast<double>(s->symbols) : 0.0;
  for (const Symbol& sym : tuple) {
    double count = 0.0;
    if (s) {
      auto c = s->symbol_counts.find(sym.str());
      if (c != s->symbol_counts.end()) count = static_cast<double>(c->second);
    }
    p *= (count + alpha) / (total + alpha * universe);
  }
  return p;
}

TransitionModel::TransitionModel(int states) : states_(states) {
  if (states < 1) throw ConfigError("latent state count must be at least 1");
  prior_logits_.assign(states, 0.0);
  logits_.assign(std::size_t(states) * states, 0.0);
  refresh();
}

void TransitionModel::refresh() {
  prior_ = softmax(prior_logits_);
  trans_.resize(std::size_t(states_) * states_);
  for (int i = 0; i < states_; ++i) {
    std::span<const double> row(logits_.data() + std::size_t(i) * states_, states_);
    auto p = softmax(row);
    std::copy(p.begin(), p.end(), trans_.begin() + std::size_t(i) * states_);
  }
}

void TransitionModel::set_probabilities(std::span<const double> prior,
                                        std::span<const double> trans) {
  if (prior.size() != std::size_t(states_) ||
      trans.size() != std::size_t(states_) * states_) {
    throw ConfigError("transition table has the wrong shape");
  }
  for (int k = 0; k < states_; ++k) prior_logits_[k] = std::log(prior[k]);
  for (std::size_t i = 0; i < trans.size(); ++i) logits_[i] = std::log(trans[i]);
  refresh();
}

std::vector<double> TransitionModel::log_prior() const {
  std::vector<double> out(prior_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(prior_[i]);
  return out;
}

std::vector<double> TransitionModel::log_transitions() const {
  std::vector<double> out(trans_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(trans_[i]);
  return out;
}

void LttModel::observe_training_tree(const Tree& tree) {
  Vocab& vocab = params.objects();
  for (const TracedProduction& tp : trace_productions(tree, features)) {
    const std::string key = tp.production.key();
    support.observe(tp.production.parent, key);
    defaults.observe(tp.production);
    for (const ContextFeature& f : tp.features) vocab.intern(f.key);
    if (features.scope && tp.production.parent.kind == NodeKind::IdentifierName &&
        tp.production.parent.annotation == Annotation::Local) {
      for (const auto& member : tp.scope) {
        for (const auto& k : scope_feature_keys(member)) vocab.intern(k);
      }
    } else {
      vocab.intern(tuple_object_key(key));
    }
  }
  if (latent_states() > 1) {
    for (int k = 0; k < latent_states(); ++k) vocab.intern(latent_key(k));
  }
}

void LttModel::finalize_support() {
  support_ids_.clear();
  for (const auto& row : support.rows()) {
    std::vector<int> ids;
    ids.reserve(row.tuples.size());
    for (const auto& t : row.tuples) {
      auto id = params.objects().find(tuple_object_key(t));
      ids.push_back(id ? *id : -1);
    }
    support_ids_.push_back(std::move(ids));
  }
}

ScopeCandidate LttModel::resolve_scope(const VariableFeatureVector& v) const {
  ScopeCandidate c{};
  auto keys = scope_feature_keys(v);
  for (int u = 0; u < kScopeFeatures; ++u) {
    auto id = params.objects().find(keys[u]);
    c[u] = id ? *id : -1;
  }
  return c;
}

PreparedTree LttModel::prepare(const Tree& tree) const {
  PreparedTree out;
  out.token_count = tree.token_count();
  for (TracedProduction& tp : trace_productions(tree, features)) {
    PreparedProduction p;
    const std::string key = tp.production.key();
    if (auto row = support.row_index(tp.production.parent)) {
      p.row = *row;
      if (auto t = support.tuple_index(*row, key)) p.target = *t;
    }
    for (const ContextFeature& f : tp.features) {
      auto id = params.objects().find(f.key);
      p.features.push_back({f.slot, id ? *id : -1});
    }
    p.local = features.scope &&
              tp.production.parent.kind == NodeKind::IdentifierName &&
              tp.production.parent.annotation == Annotation::Local;
    if (p.local) {
      const std::string& text = tp.production.children.at(0).token.text;
      for (std::size_t i = 0; i < tp.scope.size(); ++i) {
        p.candidates.push_back(resolve_scope(tp.scope[i]));
        if (tp.scope[i].identifier == text) p.local_target = static_cast<int>(i);
      }
    }
    p.token_cost = tp.production.all_tokens();
    p.production = std::move(tp.production);
    out.productions.push_back(std::move(p));
  }
  return out;
}

std::vector<double> LttModel::context_for(std::span<const ResolvedFeature> feats,
                                          int state) const {
  std::vector<double> r = context_repr(params, feats);
  if (latent_states() > 1) {
    auto id = params.objects().find(latent_key(state));
    if (id) {
      auto w = params.w_context(slot::kLatent);
      auto row = params.row(*id);
      for (int d = 0; d < params.dim(); ++d) r[d] += w[d] * row[d];
    }
  }
  return r;
}

std::vector<double> LttModel::base_distribution(int row,
                                                std::span<const ResolvedFeature> feats,
                                                int state) const {
  if (row < 0 || row >= static_cast<int>(support.size())) {
    throw ModelingError("no support for this parent kind: fall back to the default model");
  }
  if (parameterization == Parameterization::Tabular) {
    return tabular.at(row).at(state);
  }
  auto r_con = context_for(feats, state);
  return children_distribution(params, r_con, support_ids_.at(row));
}

double LttModel::base_prob(const PreparedProduction& p, int state) const {
  if (p.local) {
    if (p.local_target < 0 || p.candidates.empty()) return 0.0;
    if (parameterization == Parameterization::Tabular) {
      throw ModelingError("the scope model requires the log-bilinear parameterization");
    }
    auto r_con = context_for(p.features, state);
    return scope_token_distribution(params, r_con, p.candidates)[p.local_target];
  }
  if (p.row < 0 || p.target < 0) return 0.0;
  if (parameterization == Parameterization::Tabular) {
    return tabular.at(p.row).at(state).at(p.target);
  }
  auto r_con = context_for(p.features, state);
  const auto& ids = support_ids_.at(p.row);
  std::vector<double> scores;
  scores.reserve(ids.size());
  for (int id : ids) scores.push_back(children_score(params, r_con, id));
  return std::exp(scores[p.target] - log_sum_exp(scores));
}

double LttModel::default_prob(const PreparedProduction& p, double alpha) const {
  return defaults.prob(p.production.parent, p.production.children, alpha);
}

double LttModel::smoothed_prob(const PreparedProduction& p, int state) const {
  return smoothed_children_prob(base_prob(p, state), default_prob(p), smoothing.pi);
}

}  // namespace ltt
