#include "ltt/minilang.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ltt::minilang {
namespace {

constexpr std::array<std::string_view, 9> kKeywords = {
    "fn", "int", "bool", "string", "if", "else", "for", "while", "return"};

constexpr std::array<std::string_view, 6> kTwoCharPunct = {
    "&&", "||", "==", "!=", "<=", "++"};

constexpr std::string_view kOneCharPunct = "(){}[];,=+-*/%<!";

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Parser {
 public:
  explicit Parser(std::vector<LexedToken> tokens) : toks_(std::move(tokens)) {}

  Tree run() {
    std::vector<Child> decls;
    while (!at_end()) {
      if (check("fn")) {
        decls.push_back(function_decl());
      } else if (at_type()) {
        decls.push_back(var_decl());
      } else {
        fail("'fn' or a type");
      }
    }
    tree_.set_root(tree_.add_node({NodeKind::CompilationUnit}, std::move(decls)));
    return std::move(tree_);
  }

  Tree run_statement() {
    Child root = statement();
    if (!at_end()) fail("end of input");
    tree_.set_root(root.index);
    return std::move(tree_);
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead].token : nullptr;
  }
  bool check(std::string_view text, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->text == text && t->kind != TokenKind::StringLiteral;
  }
  bool check_kind(TokenKind kind) const {
    const Token* t = peek();
    return t && t->kind == kind;
  }
  bool at_type() const {
    return check("int") || check("bool") || check("string");
  }

  [[noreturn]] void fail(std::string_view expected) const {
    int line = 0, col = 0;
    std::string found = "end of input";
    if (!at_end()) {
      line = toks_[pos_].line;
      col = toks_[pos_].column;
      found = "'" + toks_[pos_].token.text + "'";
    } else if (!toks_.empty()) {
      line = toks_.back().line;
      col = toks_.back().column + static_cast<int>(toks_.back().token.text.size());
    }
    std::ostringstream msg;
    msg << "syntax error at line " << line << ", column " << col
        << ": expected " << expected << ", found " << found;
    throw SyntaxError(msg.str(), line, col);
  }

  Child take() { return Child::token(tree_.add_token(toks_[pos_++].token)); }

  Child expect(std::string_view text) {
    if (!check(text)) fail("'" + std::string(text) + "'");
    return take();
  }

  Child expect_identifier() {
    if (!check_kind(TokenKind::Identifier)) fail("an identifier");
    return take();
  }

  Child node(NodeKind kind, std::vector<Child> children) {
    return Child::node(tree_.add_node({kind}, std::move(children)));
  }

  Child function_decl() {
    std::vector<Child> c;
    c.push_back(expect("fn"));
    c.push_back(expect_identifier());
    std::vector<Child> params;
    params.push_back(expect("("));
    if (!check(")")) {
      params.push_back(param());
      while (check(",")) {
        params.push_back(take());
        params.push_back(param());
      }
    }
    params.push_back(expect(")"));
    c.push_back(node(NodeKind::ParamList, std::move(params)));
    c.push_back(block());
    return node(NodeKind::FunctionDecl, std::move(c));
  }

  Child param() {
    Child t = type();
    Child name = declarator();
    return node(NodeKind::Param, {t, name});
  }

  Child type() {
    if (!at_type()) fail("a type");
    std::vector<Child> c;
    bool is_int = check("int");
    c.push_back(take());
    if (is_int && check("[")) {
      c.push_back(take());
      c.push_back(expect("]"));
    }
    return node(NodeKind::Type, std::move(c));
  }

  Child declarator() {
    return node(NodeKind::DeclaratorName, {expect_identifier()});
  }

  Child var_decl() {
    std::vector<Child> c;
    c.push_back(type());
    c.push_back(declarator());
    if (check("=")) {
      Child eq = take();
      c.push_back(node(NodeKind::EqualsValueClause, {eq, expression()}));
    }
    c.push_back(expect(";"));
    return node(NodeKind::VarDecl, std::move(c));
  }

  Child block() {
    std::vector<Child> c;
    c.push_back(expect("{"));
    while (!check("}")) {
      if (at_end()) fail("'}'");
      c.push_back(statement());
    }
    c.push_back(take());
    return node(NodeKind::Block, std::move(c));
  }

  Child statement() {
    if (at_type()) return var_decl();
    if (check("{")) return block();
    if (check("if")) {
      std::vector<Child> c;
      c.push_back(take());
      c.push_back(expect("("));
      c.push_back(expression());
      c.push_back(expect(")"));
      c.push_back(statement());
      if (check("else")) {
        Child e = take();
        c.push_back(node(NodeKind::ElseClause, {e, statement()}));
      }
      return node(NodeKind::IfStatement, std::move(c));
    }
    if (check("while")) {
      std::vector<Child> c;
      c.push_back(take());
      c.push_back(expect("("));
      c.push_back(expression());
      c.push_back(expect(")"));
      c.push_back(statement());
      return node(NodeKind::WhileStatement, std::move(c));
    }
    if (check("for")) return for_statement();
    if (check("return")) {
      std::vector<Child> c;
      c.push_back(take());
      if (!check(";")) c.push_back(expression());
      c.push_back(expect(";"));
      return node(NodeKind::ReturnStatement, std::move(c));
    }
    Child e = expression();
    return node(NodeKind::ExpressionStatement, {e, expect(";")});
  }

  Child for_statement() {
    std::vector<Child> c;
    c.push_back(take());
    c.push_back(expect("("));
    if (at_type()) {
      c.push_back(var_decl());
    } else {
      if (!check(";")) {
        Child init = expression();
        if (tree_.node(init.index).label.kind != NodeKind::AssignExpression) {
          fail("a declaration or assignment in the for initializer");
        }
        c.push_back(init);
      }
      c.push_back(expect(";"));
    }
    c.push_back(expression());
    c.push_back(expect(";"));
    Child update = expression();
    auto kind = tree_.node(update.index).label.kind;
    if (kind != NodeKind::AssignExpression &&
        kind != NodeKind::IncrementExpression) {
      fail("an assignment or increment in the for update");
    }
    c.push_back(update);
    c.push_back(expect(")"));
    c.push_back(statement());
    return node(NodeKind::ForStatement, std::move(c));
  }

  Child expression() {
    Child lhs = or_expr();
    auto kind = lhs.is_token() ? NodeKind::Literal : tree_.node(lhs.index).label.kind;
    if (check("=") && (kind == NodeKind::IdentifierName ||
                       kind == NodeKind::IndexExpression)) {
      Child eq = take();
      Child rhs = expression();
      return node(NodeKind::AssignExpression, {lhs, eq, rhs});
    }
    return lhs;
  }

  template <class Next>
  Child binary_level(NodeKind kind, std::initializer_list<std::string_view> ops,
                     Next next) {
    Child lhs = (this->*next)();
    for (;;) {
      bool matched = false;
      for (auto op : ops) {
        if (check(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
      Child op = take();
      Child rhs = (this->*next)();
      lhs = node(kind, {lhs, op, rhs});
    }
  }

  Child or_expr() {
    return binary_level(NodeKind::OrExpression, {"||"}, &Parser::and_expr);
  }
  Child and_expr() {
    return binary_level(NodeKind::AndExpression, {"&&"}, &Parser::equality);
  }
  Child equality() {
    return binary_level(NodeKind::EqualityExpression, {"==", "!="},
                        &Parser::relational);
  }
  Child relational() {
    return binary_level(NodeKind::RelationalExpression, {"<", "<="},
                        &Parser::additive);
  }
  Child additive() {
    return binary_level(NodeKind::AdditiveExpression, {"+", "-"},
                        &Parser::multiplicative);
  }
  Child multiplicative() {
    return binary_level(NodeKind::MultiplicativeExpression, {"*", "/", "%"},
                        &Parser::unary);
  }

  Child unary() {
    if (check("-") || check("!")) {
      Child op = take();
      return node(NodeKind::UnaryExpression, {op, unary()});
    }
    if (check("++")) {
      Child op = take();
      Child name = node(NodeKind::IdentifierName, {expect_identifier()});
      return node(NodeKind::IncrementExpression, {op, name});
    }
    return postfix();
  }

  Child postfix() {
    Child e = primary();
    while (check("[")) {
      Child open = take();
      Child index = expression();
      e = node(NodeKind::IndexExpression, {e, open, index, expect("]")});
    }
    return e;
  }

  Child primary() {
    const Token* t = peek();
    if (!t) fail("an expression");
    switch (t->kind) {
      case TokenKind::Identifier: {
        Child name = node(NodeKind::IdentifierName, {take()});
        if (!check("(")) return name;
        std::vector<Child> args;
        args.push_back(take());
        if (!check(")")) {
          args.push_back(expression());
          while (check(",")) {
            args.push_back(take());
            args.push_back(expression());
          }
        }
        args.push_back(expect(")"));
        return node(NodeKind::CallExpression,
                    {name, node(NodeKind::ArgumentList, std::move(args))});
      }
      case TokenKind::IntLiteral:
      case TokenKind::StringLiteral:
      case TokenKind::BoolLiteral:
        return node(NodeKind::Literal, {take()});
      default:
        break;
    }
    if (check("(")) {
      Child open = take();
      Child inner = expression();
      return node(NodeKind::ParenExpression, {open, inner, expect(")")});
    }
    fail("an expression");
  }

  std::vector<LexedToken> toks_;
  std::size_t pos_ = 0;
  Tree tree_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<LexedToken> lex_with_positions(std::string_view text) {
  std::vector<LexedToken> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  auto error = [&](const std::string& what) -> LexError {
    std::ostringstream msg;
    msg << "lex error at line " << line << ", column " << col << ": " << what;
    return LexError(msg.str(), line, col);
  };

  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    LexedToken lt{{}, line, col};
    std::size_t len = 0;
    if (ident_start(c)) {
      while (i + len < text.size() && ident_char(text[i + len])) ++len;
      std::string word(text.substr(i, len));
      if (word == "true" || word == "false") {
        lt.token.kind = TokenKind::BoolLiteral;
      } else if (is_keyword(word)) {
        lt.token.kind = TokenKind::Keyword;
      } else {
        lt.token.kind = TokenKind::Identifier;
      }
      lt.token.text = std::move(word);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i + len < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + len]))) {
        ++len;
      }
      if (i + len < text.size() && ident_start(text[i + len])) {
        throw error("malformed number");
      }
      lt.token = {std::string(text.substr(i, len)), TokenKind::IntLiteral};
    } else if (c == '"') {
      len = 1;
      for (;;) {
        if (i + len >= text.size() || text[i + len] == '\n') {
          throw error("unterminated string literal");
        }
        char d = text[i + len];
        if (d == '\\') {
          if (i + len + 1 >= text.size()) throw error("unterminated string literal");
          len += 2;
          continue;
        }
        ++len;
        if (d == '"') break;
      }
      lt.token = {std::string(text.substr(i, len)), TokenKind::StringLiteral};
    } else {
      for (auto p : kTwoCharPunct) {
        if (text.substr(i, 2) == p) {
          len = 2;
          break;
        }
      }
      if (len == 0 && kOneCharPunct.find(c) != std::string_view::npos) len = 1;
      if (len == 0) {
        throw error(std::string("illegal character '") + c + "'");
      }
      lt.token = {std::string(text.substr(i, len)), TokenKind::Punctuation};
    }
    advance(len);
    out.push_back(std::move(lt));
  }
  return out;
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  for (auto& lt : lex_with_positions(text)) out.push_back(std::move(lt.token));
  return out;
}

Tree parse(std::string_view text) { return Parser(lex_with_positions(text)).run(); }

Tree parse_statement(std::string_view text) {
  return Parser(lex_with_positions(text)).run_statement();
}

std::string unparse(const Tree& tree) {
  std::string out;
  for (const Token& t : tree.leaves()) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

std::vector<SourceFile> read_source_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ml0") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SourceFile> files;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files.push_back({p, ss.str()});
  }
  return files;
}

}  // namespace ltt::minilang
