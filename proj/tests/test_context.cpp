#include <gtest/gtest.h>

#include <map>

#include "ltt/context.hpp"
#include "ltt/minilang.hpp"

using namespace ltt;

namespace {

NodeLabel L(NodeKind k) { return {k, Annotation::None}; }

Token ident(const std::string& s) { return {s, TokenKind::Identifier}; }

// Scope observed at every IdentifierName in a program, via a hand-rolled
// trace loop over the event stream.
std::vector<std::pair<std::string, ScopeSet>> scopes_at_identifiers(const Tree& tree) {
  std::vector<std::pair<std::string, ScopeSet>> out;
  TraversalTrace trace;
  bool pending = false;
  for (const TraversalEvent& e : traversal_events(tree)) {
    if (pending && e.type == TraversalEvent::Type::EmitToken) out.emplace_back(e.token.text, trace.scope());
    pending = e.type == TraversalEvent::Type::Descend && e.label.kind == NodeKind::IdentifierName;
    trace.apply(e);
  }
  return out;
}

}  // namespace

TEST(Context, InitialState) {
  DeterministicContext c;
  EXPECT_EQ(c.depth(), 0);
  EXPECT_TRUE(c.ancestor_history().empty());
  EXPECT_TRUE(c.last_tokens().empty());
}

TEST(Context, DescendThreeLevels) {
  DeterministicContext c;
  c = update_context(c, TraversalEvent::descend(L(NodeKind::CompilationUnit), 0));
  c = update_context(c, TraversalEvent::descend(L(NodeKind::FunctionDecl), 0));
  c = update_context(c, TraversalEvent::descend(L(NodeKind::Block), 3));
  EXPECT_EQ(c.depth(), 2);
  std::vector<AncestorEntry> expected{{L(NodeKind::CompilationUnit), 0}, {L(NodeKind::FunctionDecl), 3}};
  EXPECT_EQ(c.ancestor_history(), expected);
  EXPECT_EQ(c.parent(), L(NodeKind::FunctionDecl));
  EXPECT_EQ(c.current(), L(NodeKind::Block));
  c = update_context(c, TraversalEvent::ascend());
  EXPECT_EQ(c.depth(), 1);
  EXPECT_EQ(c.current(), L(NodeKind::FunctionDecl));
}

TEST(Context, LastTokensFifo) {
  DeterministicContext c;
  for (int i = 0; i < 12; ++i) c = update_context(c, TraversalEvent::emit(ident("t" + std::to_string(i))));
  ASSERT_EQ(c.last_tokens().size(), 10u);
  EXPECT_EQ(c.last_tokens().front(), "t2");
  EXPECT_EQ(c.last_tokens().back(), "t11");
}

TEST(Context, HistoryKeepsTenMostRecent) {
  DeterministicContext c;
  for (int i = 0; i < 14; ++i) c = update_context(c, TraversalEvent::descend(L(NodeKind::Block), i));
  auto h = c.ancestor_history();
  ASSERT_EQ(h.size(), 10u);
  EXPECT_EQ(h.back().child_index, 13);  // parent's entry points at the current node
  EXPECT_EQ(c.depth(), 13);
}

TEST(Context, DepthCapBucket) {
  DeterministicContext c;
  for (int i = 0; i < kDepthCap + 5; ++i) c = update_context(c, TraversalEvent::descend(L(NodeKind::Block), 0));
  EXPECT_EQ(c.capped_depth(), kDepthCap + 1);
}

TEST(Context, AscendPastRootIsStructuralError) {
  DeterministicContext c;
  EXPECT_THROW(update_context(c, TraversalEvent::ascend()), StructuralError);
}

TEST(Scope, EmptyProgramHasEmptyScope) {
  Tree t = minilang::parse("");
  TraversalTrace trace;
  for (const auto& e : traversal_events(t)) {
    trace.apply(e);
    EXPECT_TRUE(trace.scope().empty());
  }
}

TEST(Scope, ForInitializerDeclares) {
  Tree t = minilang::parse("fn f() { for (int i = 0; i < 3; ++i) { print(i); } }");
  auto seen = scopes_at_identifiers(t);
  bool checked = false;
  for (const auto& [name, scope] : seen) {
    if (name != "i") continue;
    auto v = scope.lookup("i");
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(v->type, "int");
    EXPECT_EQ(v->decl_rank, 0);
    EXPECT_EQ(v->assign_rank, 0);
    checked = true;
    break;
  }
  EXPECT_TRUE(checked);
}

TEST(Scope, ShadowingRestoresOuter) {
  ScopeSet s;
  s.push_frame();
  s.declare("x", "string");
  s.push_frame();
  s.declare("x", "int");
  EXPECT_EQ(s.lookup("x")->type, "int");
  EXPECT_EQ(s.size(), 1u);
  s.pop_frame();
  EXPECT_EQ(s.lookup("x")->type, "string");
  s.pop_frame();
  EXPECT_FALSE(s.contains("x"));
}

TEST(Scope, ShadowingThroughTrace) {
  Tree t = minilang::parse(
      "fn f() { string x = \"a\"; { int x = 1; print(x); } print(x); }");
  std::vector<std::string> types;
  for (const auto& [name, scope] : scopes_at_identifiers(t)) {
    if (name == "x") types.push_back(scope.lookup("x")->type);
  }
  EXPECT_EQ(types, (std::vector<std::string>{"int", "string"}));
}

TEST(Scope, RanksFollowRecency) {
  ScopeSet s;
  s.push_frame();
  s.declare("a", "int");
  s.declare("b", "int");
  s.declare("c", "int");
  s.assign("a");
  auto a = *s.lookup("a"), c = *s.lookup("c");
  EXPECT_EQ(a.decl_rank, 2);
  EXPECT_EQ(a.assign_rank, 0);
  EXPECT_EQ(c.decl_rank, 0);
  auto members = s.members();
  ASSERT_EQ(members.size(), 3u);
  EXPECT_EQ(members[0].identifier, "c");
}

TEST(Scope, AssignmentInProgramUpdatesRank) {
  Tree t = minilang::parse("fn f() { int a = 0; int b = 0; a = 2; print(b); }");
  auto seen = scopes_at_identifiers(t);
  ASSERT_FALSE(seen.empty());
  const ScopeSet& last = seen.back().second;
  EXPECT_EQ(last.lookup("a")->assign_rank, 0);
  EXPECT_EQ(last.lookup("b")->assign_rank, 1);
  EXPECT_EQ(last.lookup("b")->decl_rank, 0);
}

TEST(Scope, ParametersVisibleInBody) {
  Tree t = minilang::parse("fn f(int[] a, int n) { return a[n]; }");
  auto seen = scopes_at_identifiers(t);
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.back().second.lookup("a")->type, "int[]");
  EXPECT_EQ(seen.back().second.lookup("n")->type, "int");
}

TEST(Classify, LocalAndGlobal) {
  ScopeSet s;
  s.push_frame();
  s.declare("i", "int");
  EXPECT_EQ(classify_identifier(s, ident("i")), IdentifierScope::Local);
  EXPECT_EQ(classify_identifier(ScopeSet{}, ident("Math")), IdentifierScope::Global);
}

TEST(Classify, AfterBlockExitIsGlobal) {
  Tree t = annotate_identifiers(minilang::parse("fn f() { { int x = 1; print(x); } print(x); }"));
  std::vector<std::string> labels;
  for (const Production& p : depth_first_productions(t)) {
    if (p.parent.kind == NodeKind::IdentifierName && p.children[0].token.text == "x") {
      labels.push_back(p.parent.name());
    }
  }
  EXPECT_EQ(labels, (std::vector<std::string>{"IdentifierName:local", "IdentifierName:global"}));
}

TEST(Classify, FunctionNamesAreGlobal) {
  Tree t = annotate_identifiers(minilang::parse("fn g() { return 1; } fn f(int n) { return g() + n; }"));
  std::map<std::string, std::string> by_name;
  for (const Production& p : depth_first_productions(t)) {
    if (p.parent.kind == NodeKind::IdentifierName) by_name[p.children[0].token.text] = p.parent.name();
  }
  EXPECT_EQ(by_name["g"], "IdentifierName:global");
  EXPECT_EQ(by_name["n"], "IdentifierName:local");
}
