#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltt/error.hpp"

namespace ltt {

enum class TokenKind : std::uint8_t {
  Identifier,
  Keyword,
  Punctuation,
  IntLiteral,
  StringLiteral,
  BoolLiteral,
};

// Internal node kinds. Closed: every kind the MiniLang parser can produce,
// plus Next for generic chain-shaped trees (HMM-style token sequences).
enum class NodeKind : std::uint8_t {
  CompilationUnit,
  FunctionDecl,
  ParamList,
  Param,
  Type,
  DeclaratorName,
  Block,
  VarDecl,
  EqualsValueClause,
  IfStatement,
  ElseClause,
  ForStatement,
  WhileStatement,
  ReturnStatement,
  ExpressionStatement,
  AssignExpression,
  OrExpression,
  AndExpression,
  EqualityExpression,
  RelationalExpression,
  AdditiveExpression,
  MultiplicativeExpression,
  UnaryExpression,
  IncrementExpression,
  CallExpression,
  ArgumentList,
  IndexExpression,
  ParenExpression,
  IdentifierName,
  Literal,
  Next,
};

inline constexpr int kNodeKindCount = static_cast<int>(NodeKind::Next) + 1;

// Scope annotation carried by IdentifierName nodes in scope-aware models.
enum class Annotation : std::uint8_t { None, Local, Global };

std::string_view to_string(TokenKind kind);
std::string_view to_string(NodeKind kind);
std::optional<TokenKind> token_kind_from_string(std::string_view name);
std::optional<NodeKind> node_kind_from_string(std::string_view name);

struct Token {
  std::string text;
  TokenKind kind = TokenKind::Identifier;

  friend bool operator==(const Token&, const Token&) = default;
};

// A node kind together with its (optional) annotation, e.g.
// "IdentifierName:local". This is the value a parent takes in a production.
struct NodeLabel {
  NodeKind kind = NodeKind::CompilationUnit;
  Annotation annotation = Annotation::None;

  std::string name() const;
  static std::optional<NodeLabel> parse(std::string_view name);

  friend auto operator<=>(const NodeLabel&, const NodeLabel&) = default;
};

struct Child {
  enum class Type : std::uint8_t { Node, Token };
  Type type = Type::Node;
  int index = 0;

  static Child node(int id) { return {Type::Node, id}; }
  static Child token(int id) { return {Type::Token, id}; }
  bool is_token() const { return type == Type::Token; }

  friend bool operator==(const Child&, const Child&) = default;
};

struct Node {
  NodeLabel label;
  std::vector<Child> children;
};

// Arena-backed tree. Node and token ids are stable under insertion, so
// partially built trees (parser, sampler) can be referenced by id.
class Tree {
 public:
  int add_token(Token token);
  int add_node(NodeLabel label, std::vector<Child> children = {});
  void set_root(int id) { root_ = id; }

  int root() const { return root_; }
  bool empty() const { return nodes_.empty(); }
  const Node& node(int id) const { return nodes_.at(id); }
  Node& node(int id) { return nodes_.at(id); }
  const Token& token(int id) const { return tokens_.at(id); }
  std::size_t node_count() const { return nodes_.size(); }

  // Leaves reachable from the root in depth-first left-to-right order.
  std::vector<Token> leaves() const;
  std::size_t token_count() const { return leaves().size(); }
  std::size_t internal_node_count() const;

  // Throws StructuralError when an internal node has no children or ids
  // are dangling.
  void validate() const;

  // Copy with every annotation cleared.
  Tree without_annotations() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Token> tokens_;
  int root_ = 0;
};

bool structurally_equal(const Tree& a, const Tree& b,
                        bool compare_annotations = true);

// One element of a children tuple: a node label or a (kind, text) token.
struct Symbol {
  bool is_token = false;
  NodeLabel label;
  Token token;

  static Symbol of(const Tree& tree, const Child& child);
  // "IdentifierName:local" for nodes, "Keyword:for" for tokens.
  std::string str() const;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

// Canonical key of a children tuple; equal keys iff equal tuples.
std::string tuple_key(const std::vector<Symbol>& children);
std::vector<Symbol> parse_tuple_key(std::string_view key);

struct Production {
  NodeLabel parent;
  std::vector<Symbol> children;
  int step = 0;
  int node = 0;

  std::string key() const { return tuple_key(children); }
  bool all_tokens() const;
};

// Productions in the order Algorithm-1 style stack generation visits
// internal nodes (pre-order, children popped left to right).
std::vector<Production> depth_first_productions(const Tree& tree);

// Explicit-stack depth-first walk. The visitor receives
//   enter(tree, node_id, child_index)  when an internal node is popped,
//   token(tree, token_id)              when a leaf is popped,
//   leave(tree, node_id)               after the node's subtree is done.
template <class Visitor>
void traverse_depth_first(const Tree& tree, Visitor& visitor) {
  struct Item {
    enum class Op : std::uint8_t { Enter, Token, Leave } op;
    int id;
    int child_index;
  };
  if (tree.empty()) throw StructuralError("traversal of an empty tree");
  std::vector<Item> stack{{Item::Op::Enter, tree.root(), 0}};
  while (!stack.empty()) {
    Item item = stack.back();
    stack.pop_back();
    switch (item.op) {
      case Item::Op::Enter: {
        const Node& n = tree.node(item.id);
        if (n.children.empty()) {
          throw StructuralError("internal node " + n.label.name() +
                                " has an empty children tuple");
        }
        visitor.enter(tree, item.id, item.child_index);
        stack.push_back({Item::Op::Leave, item.id, item.child_index});
        for (int i = static_cast<int>(n.children.size()) - 1; i >= 0; --i) {
          const Child& c = n.children[i];
          stack.push_back({c.is_token() ? Item::Op::Token : Item::Op::Enter,
                           c.index, i});
        }
        break;
      }
      case Item::Op::Token:
        visitor.token(tree, item.id);
        break;
      case Item::Op::Leave:
        visitor.leave(tree, item.id);
        break;
    }
  }
}

// AST interchange format: one JSON object per tree.
std::string serialize_ast(const Tree& tree);
Tree deserialize_ast(std::string_view text);

// ".asts.jsonl" corpus files, one serialized tree per line.
std::vector<Tree> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Tree>& trees);

}  // namespace ltt
