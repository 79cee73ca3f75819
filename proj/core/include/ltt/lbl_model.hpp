#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/features.hpp"
#include "ltt/params.hpp"

namespace ltt {

// A context feature resolved to an object id; id < 0 marks an object never
// seen in training, which contributes the all-zeros vector.
struct ResolvedFeature {
  int slot = 0;
  int id = -1;
};

// Object ids of a variable's scope features (identifier, type, ranks).
using ScopeCandidate = std::array<int, kScopeFeatures>;

// r_con = sum_k W_con[slot_k] * R[id_k] (diagonal W).
std::vector<double> context_repr(const ParamStore& params,
                                 std::span<const ResolvedFeature> features);

// Negative energy R[tuple] . r_con + b[tuple].
double children_score(const ParamStore& params, std::span<const double> r_con,
                      int tuple_id);

// r_ch = sum_u W_ch[u] * R[v_u];  b_ch = sum_u b[v_u].
std::vector<double> scope_repr(const ParamStore& params, const ScopeCandidate& v);
double scope_bias(const ParamStore& params, const ScopeCandidate& v);
double scope_score(const ParamStore& params, std::span<const double> r_con,
                   const ScopeCandidate& v);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> scores);
double log_sum_exp(std::span<const double> values);

// Softmax over the support tuples; throws ModelingError on empty support.
std::vector<double> children_distribution(const ParamStore& params,
                                          std::span<const double> r_con,
                                          std::span<const int> support_ids);

// Softmax over in-scope variables; throws ModelingError on an empty scope.
std::vector<double> scope_token_distribution(
    const ParamStore& params, std::span<const double> r_con,
    std::span<const ScopeCandidate> candidates);

double smoothed_children_prob(double base_prob, double default_prob, double pi);

// Children tuples observed under each (annotated) parent kind, in order of
// first occurrence, with counts.
class SupportTable {
 public:
  struct Row {
    NodeLabel parent;
    std::vector<std::string> tuples;
    std::vector<long> counts;
    long total = 0;
    std::unordered_map<std::string, int> index;
  };

  void observe(const NodeLabel& parent, const std::string& tuple_key, long count = 1);
  std::optional<int> row_index(const NodeLabel& parent) const;
  std::optional<int> tuple_index(int row, const std::string& tuple_key) const;
  const Row& row(int index) const { return rows_.at(index); }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<Row> rows_;
  std::map<NodeLabel, int> by_label_;
};

// Broad-support fallback distribution over children tuples. Parents whose
// tuples are all single tokens use an additively smoothed token model; other
// parents use Poisson(lambda) on the tuple length times independent,
// additively smoothed per-child symbol probabilities.
class DefaultModel {
 public:
  struct Stats {
    long tuples = 0;
    long symbols = 0;
    bool token_only = true;
    std::map<std::string, long> token_counts;   // single-token tuples
    std::map<std::string, long> symbol_counts;  // per child symbol
  };

  void observe(const Production& production);
  void observe(const NodeLabel& parent, const std::vector<Symbol>& children);
  void add_universe_token(const Token& token);

  double prob(const NodeLabel& parent, const std::vector<Symbol>& tuple,
              double alpha) const;
  double lambda(const NodeLabel& parent) const;
  bool token_only(const NodeLabel& parent) const;
  std::size_t token_universe_size() const { return token_universe_.size(); }
  std::size_t symbol_universe_size() const;

  const std::map<NodeLabel, Stats>& stats() const { return stats_; }
  std::map<NodeLabel, Stats>& stats() { return stats_; }
  const std::set<std::string>& token_universe() const { return token_universe_; }
  // Rebuilds the model from saved statistics.
  void restore(std::map<NodeLabel, Stats> stats, std::set<std::string> token_universe);

 private:
  std::map<NodeLabel, Stats> stats_;
  std::set<std::string> token_universe_;  // Symbol::str() of every token
  long all_tuples_ = 0;
  long all_symbols_ = 0;
};

double poisson_pmf(int n, double lambda);

// Tabular prior + transition distribution over K latent states, held as
// logits so it can be trained by stochastic gradient.
class TransitionModel {
 public:
  explicit TransitionModel(int states = 1);

  int states() const { return states_; }
  double prior(int k) const { return prior_[k]; }
  double prob(int from, int to) const { return trans_[from * states_ + to]; }
  std::vector<double> log_prior() const;
  std::vector<double> log_transitions() const;  // row-major K x K

  std::vector<double>& prior_logits() { return prior_logits_; }
  std::vector<double>& logits() { return logits_; }
  const std::vector<double>& prior_logits() const { return prior_logits_; }
  const std::vector<double>& logits() const { return logits_; }
  // Recomputes probabilities after logits change.
  void refresh();
  // Direct probability assignment (rows renormalized); for tabular models.
  void set_probabilities(std::span<const double> prior, std::span<const double> trans);

 private:
  int states_;
  std::vector<double> prior_logits_, logits_;
  std::vector<double> prior_, trans_;
};

enum class Parameterization { LogBilinear, Tabular };

struct SmoothingConfig {
  double pi = 0.9;      // weight on the model distribution
  double alpha = 0.1;   // additive smoothing of the default model
};

// A production resolved against a model's vocabulary and support.
struct PreparedProduction {
  Production production;
  int row = -1;       // support row of the parent; -1 if the parent is unseen
  int target = -1;    // tuple index in the row; -1 if the tuple is unseen
  std::vector<ResolvedFeature> features;  // excludes the latent slot
  bool local = false;                     // IdentifierName:local scope path
  std::vector<ScopeCandidate> candidates;
  int local_target = -1;
  bool token_cost = false;  // children tuple consists only of tokens
};

struct PreparedTree {
  std::vector<PreparedProduction> productions;
  std::size_t token_count = 0;
};

// Log-bilinear tree-traversal model: children distributions conditioned on
// the parent and traversal variables, smoothed with the default model.
class LttModel {
 public:
  std::string variant = "ltt0";
  FeatureSet features;
  Parameterization parameterization = Parameterization::LogBilinear;
  ParamStore params;
  SupportTable support;
  DefaultModel defaults;
  SmoothingConfig smoothing;
  TransitionModel transitions{1};
  // Tabular parameterization: probabilities [row][state][tuple].
  std::vector<std::vector<std::vector<double>>> tabular;

  int latent_states() const { return features.latent_states; }

  // Collects support/default statistics and interns every object of the
  // training trees. Call before ParamStore::initialize.
  void observe_training_tree(const Tree& tree);
  // Resolves support tuple object ids; call after the vocabulary is final.
  void finalize_support();

  PreparedTree prepare(const Tree& tree) const;

  // Resolved ids of the support tuples of a row.
  const std::vector<int>& support_ids(int row) const { return support_ids_.at(row); }

  // Context representation including the latent slot for `state`.
  std::vector<double> context_for(std::span<const ResolvedFeature> features,
                                  int state) const;
  // Base (unsmoothed) distribution over the support of `row`.
  std::vector<double> base_distribution(int row,
                                        std::span<const ResolvedFeature> features,
                                        int state) const;
  // Base probability of the observed tuple (0 when out of support).
  double base_prob(const PreparedProduction& p, int state) const;
  double default_prob(const PreparedProduction& p, double alpha) const;
  double default_prob(const PreparedProduction& p) const {
    return default_prob(p, smoothing.alpha);
  }
  double smoothed_prob(const PreparedProduction& p, int state) const;

  ScopeCandidate resolve_scope(const VariableFeatureVector& v) const;

 private:
  std::vector<std::vector<int>> support_ids_;
};

}  // namespace ltt
