#pragma once

#include <array>
#include <string>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/context.hpp"

namespace ltt {

// Which traversal variables condition the children distributions.
struct FeatureSet {
  bool hierarchy = false;  // depth, parent kind, ancestor history
  bool sequence = false;   // last generated tokens
  bool scope = false;      // local/global identifier annotation + scope model
  int latent_states = 1;   // one discrete latent traversal variable when > 1

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

// Context slot layout; each slot owns one diagonal modulation matrix.
namespace slot {
inline constexpr int kParent = 0;
inline constexpr int kDepth = 1;
inline constexpr int kParentKind = 2;
inline constexpr int kAncestor = 3;  // kAncestor + j, j = 0 most recent
inline constexpr int kToken = kAncestor + kAncestorHistory;  // kToken + j
inline constexpr int kLatent = kToken + kLastTokens;
inline constexpr int kCount = kLatent + 1;
}  // namespace slot

// Scope feature positions: identifier, type, declaration rank, assignment rank.
inline constexpr int kScopeFeatures = 4;

struct ContextFeature {
  int slot = 0;
  std::string key;
  friend bool operator==(const ContextFeature&, const ContextFeature&) = default;
};

// Object keys. Token objects are keyed by text only, so a token seen in the
// context and a variable identifier with the same string share one row.
std::string label_key(const NodeLabel& label);
std::string token_key(const std::string& text);
std::string tuple_object_key(const std::string& tuple_key);
std::string latent_key(int state);
std::array<std::string, kScopeFeatures> scope_feature_keys(
    const VariableFeatureVector& v);

// Features of the production at the current node of `ctx` (excluding the
// latent slot, which the caller appends per state).
std::vector<ContextFeature> context_features(const NodeLabel& parent,
                                             const DeterministicContext& ctx,
                                             const FeatureSet& features);

struct TracedProduction {
  Production production;
  std::vector<ContextFeature> features;
  // Scope members at the node, recorded for IdentifierName:local parents.
  std::vector<VariableFeatureVector> scope;
};

// Productions of `tree` with their traversal variables. When the feature
// set includes scope, the tree is annotated first.
std::vector<TracedProduction> trace_productions(const Tree& tree,
                                                const FeatureSet& features);

}  // namespace ltt
