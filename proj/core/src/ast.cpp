#include "ltt/ast.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace ltt {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 6> kTokenKindNames = {
    "Identifier", "Keyword", "Punctuation",
    "IntLiteral", "StringLiteral", "BoolLiteral"};

constexpr std::array<std::string_view, kNodeKindCount> kNodeKindNames = {
    "CompilationUnit",
    "FunctionDecl",
    "ParamList",
    "Param",
    "Type",
    "DeclaratorName",
    "Block",
    "VarDecl",
    "EqualsValueClause",
    "IfStatement",
    "ElseClause",
    "ForStatement",
    "WhileStatement",
    "ReturnStatement",
    "ExpressionStatement",
    "AssignExpression",
    "OrExpression",
    "AndExpression",
    "EqualityExpression",
    "RelationalExpression",
    "AdditiveExpression",
    "MultiplicativeExpression",
    "UnaryExpression",
    "IncrementExpression",
    "CallExpression",
    "ArgumentList",
    "IndexExpression",
    "ParenExpression",
    "IdentifierName",
    "Literal",
    "Next",
};

}  // namespace

std::string_view to_string(TokenKind kind) {
  return kTokenKindNames[static_cast<int>(kind)];
}

std::string_view to_string(NodeKind kind) {
  return kNodeKindNames[static_cast<int>(kind)];
}

std::optional<TokenKind> token_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTokenKindNames.size(); ++i) {
    if (kTokenKindNames[i] == name) return static_cast<TokenKind>(i);
  }
  return std::nullopt;
}

std::optional<NodeKind> node_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNodeKindNames.size(); ++i) {
    if (kNodeKindNames[i] == name) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::string NodeLabel::name() const {
  std::string out(to_string(kind));
  if (annotation == Annotation::Local) out += ":local";
  if (annotation == Annotation::Global) out += ":global";
  return out;
}

std::optional<NodeLabel> NodeLabel::parse(std::string_view name) {
  NodeLabel label;
  auto colon = name.find(':');
  if (colon != std::string_view::npos) {
    auto suffix = name.substr(colon + 1);
    if (suffix == "local") {
      label.annotation = Annotation::Local;
    } else if (suffix == "global") {
      label.annotation = Annotation::Global;
    } else {
      return std::nullopt;
    }
    name = name.substr(0, colon);
  }
  auto kind = node_kind_from_string(name);
  if (!kind) return std::nullopt;
  label.kind = *kind;
  return label;
}

int Tree::add_token(Token token) {
  tokens_.push_back(std::move(token));
  return static_cast<int>(tokens_.size()) - 1;
}

int Tree::add_node(NodeLabel label, std::vector<Child> children) {
  nodes_.push_back(Node{label, std::move(children)});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<Token> Tree::leaves() const {
  std::vector<Token> out;
  if (nodes_.empty()) return out;
  std::function<void(int)> walk = [&](int id) {
    for (const Child& c : nodes_.at(id).children) {
      if (c.is_token()) {
        out.push_back(tokens_.at(c.index));
      } else {
        walk(c.index);
      }
    }
  };
  walk(root_);
  return out;
}

std::size_t Tree::internal_node_count() const {
  if (nodes_.empty()) return 0;
  std::size_t count = 0;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    ++count;
    for (const Child& c : nodes_.at(id).children) {
      if (!c.is_token()) stack.push_back(c.index);
    }
  }
  return count;
}

void Tree::validate() const {
  if (nodes_.empty()) throw StructuralError("tree has no root");
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (id < 0 || id >= static_cast<int>(nodes_.size())) {
      throw StructuralError("dangling node id " + std::to_string(id));
    }
    const Node& n = nodes_[id];
    if (n.children.empty()) {
      throw StructuralError("internal node " + n.label.name() +
                            " has an empty children tuple");
    }
    for (const Child& c : n.children) {
      if (c.is_token()) {
        if (c.index < 0 || c.index >= static_cast<int>(tokens_.size())) {
          throw StructuralError("dangling token id " +
                                std::to_string(c.index));
        }
        if (tokens_[c.index].text.empty()) {
          throw StructuralError("token with empty text");
        }
      } else {
        stack.push_back(c.index);
      }
    }
  }
}

Tree Tree::without_annotations() const {
  Tree copy = *this;
  for (Node& n : copy.nodes_) n.label.annotation = Annotation::None;
  return copy;
}

bool structurally_equal(const Tree& a, const Tree& b,
                        bool compare_annotations) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  std::function<bool(int, int)> same = [&](int x, int y) {
    const Node& nx = a.node(x);
    const Node& ny = b.node(y);
    if (nx.label.kind != ny.label.kind) return false;
    if (compare_annotations && nx.label.annotation != ny.label.annotation) {
      return false;
    }
    if (nx.children.size() != ny.children.size()) return false;
    for (std::size_t i = 0; i < nx.children.size(); ++i) {
      const Child& cx = nx.children[i];
      const Child& cy = ny.children[i];
      if (cx.type != cy.type) return false;
      if (cx.is_token()) {
        if (!(a.token(cx.index) == b.token(cy.index))) return false;
      } else if (!same(cx.index, cy.index)) {
        return false;
      }
    }
    return true;
  };
  return same(a.root(), b.root());
}

Symbol Symbol::of(const Tree& tree, const Child& child) {
  Symbol s;
  if (child.is_token()) {
    s.is_token = true;
    s.token = tree.token(child.index);
  } else {
    s.label = tree.node(child.index).label;
  }
  return s;
}

std::string Symbol::str() const {
  if (!is_token) return label.name();
  std::string out(to_string(token.kind));
  out += ':';
  out += token.text;
  return out;
}

std::string tuple_key(const std::vector<Symbol>& children) {
  json arr = json::array();
  for (const Symbol& s : children) arr.push_back(s.str());
  return arr.dump();
}

std::vector<Symbol> parse_tuple_key(std::string_view key) {
  json arr = json::parse(key.begin(), key.end(), nullptr, false);
  if (!arr.is_array()) throw DataError("malformed tuple key");
  std::vector<Symbol> out;
  for (const auto& item : arr) {
    if (!item.is_string()) throw DataError("malformed tuple key");
    std::string text = item.get<std::string>();
    Symbol s;
    if (auto label = NodeLabel::parse(text)) {
      s.label = *label;
    } else {
      auto colon = text.find(':');
      auto kind = colon == std::string::npos
                      ? std::nullopt
                      : token_kind_from_string(text.substr(0, colon));
      if (!kind) throw DataError("malformed tuple symbol: " + text);
      s.is_token = true;
      s.token = Token{text.substr(colon + 1), *kind};
    }
    out.push_back(std::move(s));
  }
  return out;
}

bool Production::all_tokens() const {
  for (const Symbol& s : children) {
    if (!s.is_token) return false;
  }
  return true;
}

namespace {

struct ProductionCollector {
  std::vector<Production> out;
  void enter(const Tree& tree, int id, int) {
    const Node& n = tree.node(id);
    Production p;
    p.parent = n.label;
    p.step = static_cast<int>(out.size());
    p.node = id;
    p.children.reserve(n.children.size());
    for (const Child& c : n.children) p.children.push_back(Symbol::of(tree, c));
    out.push_back(std::move(p));
  }
  void token(const Tree&, int) {}
  void leave(const Tree&, int) {}
};

json node_to_json(const Tree& tree, int id) {
  const Node& n = tree.node(id);
  json children = json::array();
  for (const Child& c : n.children) {
    if (c.is_token()) {
      const Token& t = tree.token(c.index);
      children.push_back(
          json{{"token", t.text}, {"tokenKind", std::string(to_string(t.kind))}});
    } else {
      children.push_back(node_to_json(tree, c.index));
    }
  }
  return json{{"kind", n.label.name()}, {"children", std::move(children)}};
}

Child json_to_child(const json& j, const std::string& path, Tree& tree) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  if (j.contains("token")) {
    const auto& text = j["token"];
    if (!text.is_string() || text.get<std::string>().empty()) {
      throw ParseError(path + ".token: expected a non-empty string");
    }
    if (!j.contains("tokenKind") || !j["tokenKind"].is_string()) {
      throw ParseError(path + ".tokenKind: missing");
    }
    auto kind = token_kind_from_string(j["tokenKind"].get<std::string>());
    if (!kind) throw ParseError(path + ".tokenKind: unknown token kind");
    return Child::token(tree.add_token(Token{text.get<std::string>(), *kind}));
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ParseError(path + ".kind: missing");
  }
  auto label = NodeLabel::parse(j["kind"].get<std::string>());
  if (!label) {
    throw ParseError(path + ".kind: unknown node kind '" +
                     j["kind"].get<std::string>() + "'");
  }
  if (!j.contains("children") || !j["children"].is_array()) {
    throw ParseError(path + ".children: missing");
  }
  std::vector<Child> children;
  const auto& arr = j["children"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    children.push_back(json_to_child(
        arr[i], path + ".children[" + std::to_string(i) + "]", tree));
  }
  return Child::node(tree.add_node(*label, std::move(children)));
}

}  // namespace

std::vector<Production> depth_first_productions(const Tree& tree) {
  ProductionCollector collector;
  traverse_depth_first(tree, collector);
  return std::move(collector.out);
}

std::string serialize_ast(const Tree& tree) {
  if (tree.empty()) throw StructuralError("cannot serialize an empty tree");
  return node_to_json(tree, tree.root()).dump();
}

Tree deserialize_ast(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) throw ParseError("$: invalid JSON");
  Tree tree;
  Child root = json_to_child(j, "$", tree);
  if (root.is_token()) throw ParseError("$: root must be an internal node");
  tree.set_root(root.index);
  return tree;
}

std::vector<Tree> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path);
  std::vector<Tree> trees;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      trees.push_back(deserialize_ast(line));
    } catch (const ParseError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trees;
}

void write_corpus(const std::string& path, const std::vector<Tree>& trees) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path);
  for (const Tree& t : trees) out << serialize_ast(t) << '\n';
}

}  // namespace ltt
