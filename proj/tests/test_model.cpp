#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <functional>
#include <random>
#include <set>

#include "ltt/features.hpp"
#include "ltt/lbl_model.hpp"
#include "ltt/minilang.hpp"
#include "ltt/training.hpp"
#include "oracles.hpp"

using namespace ltt;

namespace {

NodeLabel L(NodeKind k) { return {k, Annotation::None}; }

Symbol tok(const std::string& text, TokenKind kind = TokenKind::Identifier) {
  Symbol s;
  s.is_token = true;
  s.token = {text, kind};
  return s;
}

Symbol node(NodeKind k) {
  Symbol s;
  s.label = L(k);
  return s;
}

}  // namespace

TEST(ContextRepr, ZeroParamsGiveZeroVector) {
  ParamStore p(4, slot::kCount, kScopeFeatures);
  p.objects().intern("a");
  p.objects().intern("b");
  p.initialize(1, 0.0);
  std::vector<ResolvedFeature> fs{{slot::kParent, 0}, {slot::kDepth, 1}};
  for (double v : context_repr(p, fs)) EXPECT_EQ(v, 0.0);
}

TEST(ContextRepr, ScalarExample) {
  ParamStore p(1, slot::kCount, kScopeFeatures);
  p.objects().intern("parent");
  p.objects().intern("feature");
  p.initialize(1, 0.0);
  p.row(0)[0] = 2.0;
  p.row(1)[0] = 1.0;
  p.w_context(slot::kParent)[0] = 0.5;
  p.w_context(slot::kDepth)[0] = 1.0;
  std::vector<ResolvedFeature> fs{{slot::kParent, 0}, {slot::kDepth, 1}};
  EXPECT_DOUBLE_EQ(context_repr(p, fs)[0], 2.0);
}

TEST(ContextRepr, TenAncestorSlotsMatchNaiveSum) {
  std::mt19937_64 rng(5);
  ParamStore p = oracle::random_params(rng, 6, 20, slot::kCount);
  std::vector<ResolvedFeature> fs{{slot::kParent, 0}, {slot::kDepth, 1}, {slot::kParentKind, 2}};
  for (int j = 0; j < kAncestorHistory; ++j) fs.push_back({slot::kAncestor + j, 3 + j});
  fs.push_back({slot::kToken, -1});  // unknown object contributes nothing
  auto got = context_repr(p, fs);
  auto want = oracle::context(p, fs);
  ASSERT_EQ(fs.size(), 1u + 2u + kAncestorHistory + 1u);
  for (int d = 0; d < 6; ++d) EXPECT_NEAR(got[d], want[d], 1e-12);
}

TEST(ChildrenDistribution, SingletonSupport) {
  ParamStore p(3, slot::kCount, kScopeFeatures);
  p.objects().intern("t");
  p.initialize(2);
  std::vector<int> support{0};
  std::vector<double> ctx(3, 0.3);
  EXPECT_DOUBLE_EQ(children_distribution(p, ctx, support)[0], 1.0);
}

TEST(ChildrenDistribution, ZeroParamsUniform) {
  ParamStore p(3, slot::kCount, kScopeFeatures);
  for (auto k : {"a", "b", "c"}) p.objects().intern(k);
  p.initialize(2, 0.0);
  std::vector<int> support{0, 1, 2};
  for (double v : children_distribution(p, std::vector<double>(3, 0.0), support)) {
    EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  }
}

TEST(ChildrenDistribution, ScalarEnergies) {
  ParamStore p(1, slot::kCount, kScopeFeatures);
  p.objects().intern("a");
  p.objects().intern("b");
  p.initialize(2, 0.0);
  p.row(0)[0] = 0.5;
  p.row(1)[0] = -0.5;
  std::vector<double> ctx{1.0};
  std::vector<int> support{0, 1};
  auto probs = children_distribution(p, ctx, support);
  EXPECT_NEAR(probs[0], 0.7311, 1e-4);
  EXPECT_NEAR(probs[1], 0.2689, 1e-4);
}

TEST(ChildrenDistribution, EmptySupportIsModelingError) {
  ParamStore p(1, slot::kCount, kScopeFeatures);
  p.initialize(1);
  EXPECT_THROW(children_distribution(p, std::vector<double>{0.0}, std::vector<int>{}), ModelingError);
}

TEST(ScopeDistribution, OneVariable) {
  ParamStore p(2, slot::kCount, kScopeFeatures);
  p.objects().intern("x");
  p.initialize(3);
  std::vector<ScopeCandidate> c{{0, -1, -1, -1}};
  EXPECT_DOUBLE_EQ(scope_token_distribution(p, std::vector<double>{0.2, 0.1}, c)[0], 1.0);
}

TEST(ScopeDistribution, IdenticalFeaturesZeroParams) {
  ParamStore p(2, slot::kCount, kScopeFeatures);
  for (auto k : {"x", "y", "int", "d0", "a0"}) p.objects().intern(k);
  p.initialize(3, 0.0);
  std::vector<ScopeCandidate> c{{0, 2, 3, 4}, {1, 2, 3, 4}};
  auto probs = scope_token_distribution(p, std::vector<double>{0.0, 0.0}, c);
  EXPECT_DOUBLE_EQ(probs[0], 0.5);
  EXPECT_DOUBLE_EQ(probs[1], 0.5);
}

TEST(ScopeDistribution, HandSetScalarParameters) {
  ParamStore p(1, slot::kCount, kScopeFeatures);
  for (auto k : {"x", "y", "int", "string", "d0", "d1", "a0", "a1"}) p.objects().intern(k);
  p.initialize(3, 0.0);
  const double r[] = {1.0, -1.0, 0.5, 2.0, 0.25, -0.25, 0.1, 0.3};
  const double b[] = {0.2, 0.0, 0.1, -0.1, 0.0, 0.05, 0.0, 0.0};
  for (int i = 0; i < 8; ++i) {
    p.row(i)[0] = r[i];
    p.bias(i) = b[i];
  }
  const double w[] = {1.0, 2.0, 0.5, -1.0};
  for (int u = 0; u < 4; ++u) p.w_children(u)[0] = w[u];
  const double ctx = 0.7;
  // x: int, decl 0, assign 1; y: string, decl 1, assign 0.
  const double sx = ctx * (1.0 * 1.0 + 2.0 * 0.5 + 0.5 * 0.25 - 1.0 * 0.3) + (0.2 + 0.1 + 0.0 + 0.0);
  const double sy = ctx * (1.0 * -1.0 + 2.0 * 2.0 + 0.5 * -0.25 - 1.0 * 0.1) + (0.0 - 0.1 + 0.05 + 0.0);
  std::vector<ScopeCandidate> c{{0, 2, 4, 7}, {1, 3, 5, 6}};
  auto probs = scope_token_distribution(p, std::vector<double>{ctx}, c);
  const double px = std::exp(sx) / (std::exp(sx) + std::exp(sy));
  EXPECT_NEAR(probs[0], px, 1e-12);
  EXPECT_NEAR(probs[1], 1.0 - px, 1e-12);
}

TEST(ScopeDistribution, EmptyScopeIsModelingError) {
  ParamStore p(1, slot::kCount, kScopeFeatures);
  p.initialize(1);
  EXPECT_THROW(scope_token_distribution(p, std::vector<double>{0.0}, std::vector<ScopeCandidate>{}),
               ModelingError);
}

TEST(DefaultModel, PoissonTimesSymbolProbabilities) {
  DefaultModel m;
  const NodeLabel parent = L(NodeKind::AdditiveExpression);
  // Two observed tuples of length 2 each -> lambda = 2.
  m.observe(parent, {node(NodeKind::IdentifierName), tok("+", TokenKind::Punctuation)});
  m.observe(parent, {node(NodeKind::Literal), tok("-", TokenKind::Punctuation)});
  const double alpha = 0.5;
  EXPECT_DOUBLE_EQ(m.lambda(parent), 2.0);
  const std::vector<Symbol> tuple{node(NodeKind::IdentifierName), tok("-", TokenKind::Punctuation)};
  const double universe = static_cast<double>(m.symbol_universe_size());
  const double p1 = (1 + alpha) / (4 + alpha * universe);
  const double p2 = (1 + alpha) / (4 + alpha * universe);
  EXPECT_NEAR(m.prob(parent, tuple, alpha), std::exp(-2.0) * 4.0 / 2.0 * p1 * p2, 1e-15);
  EXPECT_NEAR(poisson_pmf(2, 2.0), std::exp(-2.0) * 2.0, 1e-15);
}

TEST(DefaultModel, TokenOnlyParentsSumToOneOverUniverse) {
  DefaultModel m;
  const NodeLabel parent = L(NodeKind::IdentifierName);
  for (auto w : {"a", "b", "a", "c"}) m.observe(parent, {tok(w)});
  m.add_universe_token({"d", TokenKind::Identifier});
  m.add_universe_token({"e", TokenKind::Identifier});
  ASSERT_TRUE(m.token_only(parent));
  double total = 0.0;
  for (auto w : {"a", "b", "c", "d", "e"}) total += m.prob(parent, {tok(w)}, 0.3);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(m.prob(parent, {tok("a")}, 0.3), (2 + 0.3) / (4 + 0.3 * 5), 1e-15);
}

TEST(Smoothing, Mixture) {
  EXPECT_DOUBLE_EQ(smoothed_children_prob(0.25, 0.01, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(smoothed_children_prob(0.25, 0.01, 0.0), 0.01);
  EXPECT_NEAR(smoothed_children_prob(0.5, 0.01, 0.9), 0.451, 1e-12);
}

TEST(Support, OneProduction) {
  SupportTable s;
  s.observe(L(NodeKind::Literal), "k");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.row(0).tuples.size(), 1u);
}

TEST(Support, DuplicateProductionsCount) {
  SupportTable s;
  s.observe(L(NodeKind::Literal), "k");
  s.observe(L(NodeKind::Literal), "k");
  EXPECT_EQ(s.row(0).tuples.size(), 1u);
  EXPECT_EQ(s.row(0).counts[0], 2);
  EXPECT_EQ(s.row(0).total, 2);
}

TEST(Support, BundledCorpusMatchesIndependentCount) {
  std::vector<Tree> trees;
  for (const auto& f : minilang::read_source_dir(LTT_CORPUS_DIR)) trees.push_back(minilang::parse(f.text));
  TrainConfig cfg;
  cfg.variant = "ltt-hiseq-scope";
  cfg.dim = 2;
  LttModel m = build_ltt_model(trees, cfg);

  // Recursive walk over annotated trees; tuples keyed by a plain text join.
  std::map<std::string, std::map<std::string, long>> counts;
  std::function<void(const Tree&, int)> walk = [&](const Tree& t, int id) {
    const Node& n = t.node(id);
    std::string key;
    for (const Child& c : n.children) {
      key += c.is_token() ? "T" + t.token(c.index).text : "N" + t.node(c.index).label.name();
      key += '\x1f';
    }
    ++counts[n.label.name()][key];
    for (const Child& c : n.children) {
      if (!c.is_token()) walk(t, c.index);
    }
  };
  for (const Tree& t : trees) {
    Tree a = annotate_identifiers(t);
    walk(a, a.root());
  }
  ASSERT_EQ(m.support.size(), counts.size());
  for (const auto& row : m.support.rows()) {
    const auto& want = counts.at(row.parent.name());
    ASSERT_EQ(row.tuples.size(), want.size()) << row.parent.name();
    long total = 0;
    for (const auto& [k, c] : want) total += c;
    EXPECT_EQ(row.total, total);
  }
}

TEST(Features, VariantSlots) {
  Tree t = minilang::parse("fn f(int a) { return a + 1; }");
  auto slots_of = [&](const std::string& variant) {
    std::set<int> slots;
    for (const auto& tp : trace_productions(t, variant_features(variant, 1))) {
      for (const auto& f : tp.features) slots.insert(f.slot);
    }
    return slots;
  };
  EXPECT_EQ(slots_of("ltt0"), (std::set<int>{slot::kParent}));
  auto hi = slots_of("ltt-hi");
  EXPECT_TRUE(hi.count(slot::kDepth) && hi.count(slot::kAncestor) && !hi.count(slot::kToken));
  auto seq = slots_of("ltt-seq");
  EXPECT_TRUE(seq.count(slot::kToken) && !seq.count(slot::kDepth));
  auto both = slots_of("ltt-hiseq");
  EXPECT_TRUE(both.count(slot::kToken) && both.count(slot::kAncestor + 1));
}

TEST(Features, ScopeTraceRecordsMembersForLocals) {
  Tree t = minilang::parse("fn f(int a, int b) { return a + g(b); }");
  int locals = 0;
  for (const auto& tp : trace_productions(t, variant_features("ltt-hiseq-scope", 1))) {
    if (tp.production.parent.name() == "IdentifierName:local") {
      ++locals;
      EXPECT_EQ(tp.scope.size(), 2u);
    }
  }
  EXPECT_EQ(locals, 2);
}

TEST(LttModelPrepare, UnseenObjectsResolveToMinusOne) {
  TrainConfig cfg;
  cfg.variant = "ltt-seq";
  cfg.dim = 3;
  LttModel m = build_ltt_model({minilang::parse("fn f() { return 1; }")}, cfg);
  PreparedTree p = m.prepare(minilang::parse("fn zz() { return 2; }"));
  bool saw_unknown = false;
  for (const auto& prod : p.productions) {
    for (const auto& f : prod.features) saw_unknown |= f.id < 0;
  }
  EXPECT_TRUE(saw_unknown);
  // The unseen Literal tuple "2" gets no base mass but positive smoothed mass.
  for (const auto& prod : p.productions) {
    if (prod.production.parent.kind == NodeKind::Literal) {
      EXPECT_EQ(prod.target, -1);
      EXPECT_EQ(m.base_prob(prod, 0), 0.0);
      EXPECT_GT(m.smoothed_prob(prod, 0), 0.0);
      EXPECT_GE(m.smoothed_prob(prod, 0), (1 - m.smoothing.pi) * m.default_prob(prod) - 1e-18);
    }
  }
}

TEST(Adagrad, ZeroGradientLeavesThetaUnchanged) {
  std::vector<double> theta{1.0, -2.0}, g{0.0, 0.0}, acc{0.0, 0.0};
  adagrad_apply(theta, g, acc, 0.1, 1e-8);
  EXPECT_EQ(theta, (std::vector<double>{1.0, -2.0}));
}

TEST(Adagrad, FirstStepIsLearningRate) {
  std::vector<double> theta{0.0}, g{3.0}, acc{0.0};
  adagrad_apply(theta, g, acc, 0.1, 1e-8);
  EXPECT_NEAR(theta[0], -0.1 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(theta[0], -0.1, 1e-9);
  double before = acc[0];
  g[0] = -0.5;
  adagrad_apply(theta, g, acc, 0.1, 1e-8);
  EXPECT_GE(acc[0], before);
}

TEST(Transitions, RowsAreStochastic) {
  TransitionModel t(3);
  t.logits() = {0.1, 2.0, -1.0, 0.0, 0.0, 0.0, 5.0, -5.0, 1.0};
  t.prior_logits() = {1.0, 0.0, -1.0};
  t.refresh();
  double ps = 0.0;
  for (int k = 0; k < 3; ++k) {
    ps += t.prior(k);
    double row = 0.0;
    for (int j = 0; j < 3; ++j) row += t.prob(k, j);
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
  EXPECT_NEAR(ps, 1.0, 1e-12);
  EXPECT_THROW(TransitionModel(0), ConfigError);
}
