#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/error.hpp"

namespace ltt::minilang {

class LexError : public ParseError {
 public:
  LexError(const std::string& what, int line, int column)
      : ParseError(what), line(line), column(column) {}
  int line;
  int column;
};

class SyntaxError : public ParseError {
 public:
  SyntaxError(const std::string& what, int line, int column)
      : ParseError(what), line(line), column(column) {}
  int line;
  int column;
};

struct SourceFile {
  std::string path;
  std::string text;
};

struct LexedToken {
  Token token;
  int line = 1;
  int column = 1;
};

// Maximal-munch tokenization. Keywords are matched before identifiers;
// `//` comments and whitespace are skipped.
std::vector<LexedToken> lex_with_positions(std::string_view text);
std::vector<Token> lex(std::string_view text);

// Parses a whole program; the root is always a CompilationUnit (with no
// children for an empty program).
Tree parse(std::string_view text);
// Parses exactly one statement; the root is the statement's node.
Tree parse_statement(std::string_view text);

// Single-space separated token text.
std::string unparse(const Tree& tree);

bool is_keyword(std::string_view word);

// All ".ml0" files below `dir`, sorted by path.
std::vector<SourceFile> read_source_dir(const std::string& dir);

}  // namespace ltt::minilang
