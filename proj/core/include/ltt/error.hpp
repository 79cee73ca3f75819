#pragma once

#include <stdexcept>
#include <string>

namespace ltt {

// Malformed trees, bad traversal event streams, unreachable sampler states.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lexing/parsing of MiniLang text and decoding of the AST interchange format.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A distribution was requested that the model cannot provide
// (empty support, local identifier with an empty scope).
class ModelingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or hyperparameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: corpus files, model files, evaluation inputs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampling exceeded its expansion budget.
class RejectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ltt
