#pragma once

#include <random>
#include <string>
#include <vector>

#include "ltt/ast.hpp"

namespace toy {

// Right-branching Next chain: Next(w0, Next(w1, ... Next(w_{n-1}))). Its
// depth-first productions are exactly the token sequence, one per position.
inline ltt::Tree chain_tree(const std::vector<std::string>& words) {
  ltt::Tree t;
  int below = -1;
  for (int i = static_cast<int>(words.size()) - 1; i >= 0; --i) {
    std::vector<ltt::Child> kids{ltt::Child::token(t.add_token({words[i], ltt::TokenKind::Identifier}))};
    if (below >= 0) kids.push_back(ltt::Child::node(below));
    below = t.add_node({ltt::NodeKind::Next, ltt::Annotation::None}, kids);
  }
  t.set_root(below);
  return t;
}

// Sticky two-state source: state 0 emits from {a, b}, state 1 from {c, d}.
inline std::vector<std::string> two_state_sequence(std::mt19937_64& rng, int length,
                                                   double stay = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int h = u(rng) < 0.5 ? 0 : 1;
  std::vector<std::string> out;
  for (int i = 0; i < length; ++i) {
    if (i > 0 && u(rng) >= stay) h = 1 - h;
    const bool first = u(rng) < 0.5;
    out.push_back(h == 0 ? (first ? "a" : "b") : (first ? "c" : "d"));
  }
  return out;
}

inline std::vector<ltt::Tree> two_state_corpus(std::uint64_t seed, int programs, int length) {
  std::mt19937_64 rng(seed);
  std::vector<ltt::Tree> out;
  for (int p = 0; p < programs; ++p) out.push_back(chain_tree(two_state_sequence(rng, length)));
  return out;
}

}  // namespace toy
