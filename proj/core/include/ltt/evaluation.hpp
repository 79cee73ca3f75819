#pragma once

#include <string>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/models.hpp"

namespace ltt {

// Cost of one prediction: a production for tree models, a token (or the
// end-of-program symbol) for sequence models. `bits` is a log2 probability.
struct PredictionCost {
  std::string kind;  // annotated parent kind, or "<end>"
  double bits = 0.0;
  bool token_cost = false;
};

struct ProgramScore {
  std::vector<PredictionCost> costs;
  std::size_t tokens = 0;
  double bits = 0.0;
};

ProgramScore score_program(const AnyModel& model, const Tree& tree);

struct KindBits {
  std::string kind;
  double bits = 0.0;
  long count = 0;
};

// All bit totals are log2 probabilities (<= 0); more negative is worse.
struct EvalReport {
  std::string variant;
  double total_bits = 0.0;
  double bits_per_token = 0.0;       // total bits / total tokens
  double mean_bits_per_token = 0.0;  // mean over programs of bits / tokens
  double token_bits = 0.0;
  double tree_bits = 0.0;
  long program_count = 0;
  long token_count = 0;
  long prediction_count = 0;
  std::vector<KindBits> per_kind;  // sorted by share of total bits, descending

  std::string to_json() const;
  std::string to_table() const;
};

// Scores every program; with threads > 1 programs are scored in parallel
// and reduced in corpus order. threads <= 0 reads LTT_THREADS (default 1).
EvalReport eval_corpus(const AnyModel& model, const std::vector<Tree>& corpus,
                       int threads = 0);

struct BreakdownRow {
  std::string kind;
  double percent = 0.0;
  long count = 0;
};

std::vector<BreakdownRow> breakdown_by_parent(const EvalReport& report);

// Thread count from LTT_THREADS (at least 1).
int env_threads();

}  // namespace ltt
