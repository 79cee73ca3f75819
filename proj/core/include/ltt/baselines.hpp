#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/lbl_model.hpp"
#include "ltt/params.hpp"
#include "ltt/training.hpp"

namespace ltt {

// Start padding and end-of-program symbol of the sequence models.
inline constexpr const char* kBoundary = "<s>";

struct SequenceToken {
  std::string text;
  NodeLabel parent;
};

// Leaves of `tree` in order, each with the label of its parent node.
std::vector<SequenceToken> token_sequence(const Tree& tree);
std::vector<std::string> token_texts(const Tree& tree);

// Closed token vocabulary (sorted, plus the boundary symbol) with unigram
// counts from the training sequences.
class TokenVocab {
 public:
  void build(const std::vector<std::vector<std::string>>& train,
             const std::vector<std::vector<std::string>>& universe = {});

  int id(const std::string& word) const;  // -1 when outside the vocabulary
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  // Additively smoothed unigram probability; id < 0 gets the zero-count mass.
  double unigram(int id, double alpha) const;
  // Ids of `tokens` followed by the boundary symbol.
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  const std::vector<long>& counts() const { return counts_; }
  long total() const { return total_; }
  void restore(std::vector<std::string> words, std::vector<long> counts);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  std::vector<long> counts_;
  long total_ = 0;
};

// Additively smoothed n-gram model over tokens; contexts are padded with
// n-1 boundary symbols and every program ends with one boundary symbol.
class NgramModel {
 public:
  struct Context {
    long total = 0;
    std::map<std::string, long> next;
  };

  int order = 2;
  double alpha = 0.1;
  TokenVocab vocab;
  std::map<std::string, Context> counts;

  void fit(const std::vector<std::vector<std::string>>& train,
           const std::vector<std::vector<std::string>>& universe = {});
  // `context` holds up to n-1 preceding symbols, most recent last.
  double prob(const std::vector<std::string>& context, const std::string& word) const;
  // log2 probability of each token and of the final boundary symbol.
  std::vector<double> sequence_log2(const std::vector<std::string>& tokens) const;
};

NgramModel train_ngram(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                       int order, const TrainConfig& config,
                       const std::vector<Tree>& universe = {});

// Tabular children distributions (c + alpha) / (N + alpha |S|) over each
// parent kind's support.
void set_pcfg_tables(LttModel& model, double alpha);
LttModel build_pcfg(const std::vector<Tree>& train, const TrainConfig& config,
                    const std::vector<Tree>& universe = {});
// Chooses (pi, alpha) on the validation set when it is non-empty.
LttModel train_pcfg(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                    const TrainConfig& config, const std::vector<Tree>& universe = {});

// Log-bilinear n-gram: softmax over the vocabulary with context
// sum_j W_j * R[w_{i-1-j}], mixed with a smoothed unigram (weight 1-pi).
class LblNgramModel {
 public:
  int order = 10;
  TokenVocab vocab;
  ParamStore params;
  SmoothingConfig smoothing;

  std::vector<ResolvedFeature> context_features(const std::vector<int>& ids,
                                                std::size_t pos) const;
  std::vector<double> base_distribution(std::span<const ResolvedFeature> features) const;
  std::vector<double> sequence_log2(const std::vector<std::string>& tokens) const;
};

LblNgramModel build_lbl_ngram(const std::vector<Tree>& train, int order,
                              const TrainConfig& config,
                              const std::vector<Tree>& universe = {});
LblNgramModel train_lbl_ngram(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                              int order, const TrainConfig& config,
                              const std::vector<Tree>& universe = {});

// HMM over tokens with log-bilinear emissions P(w | h) = softmax(R[w] .
// (W * R[h]) + b[w]) and tabular transitions. With one state there is no
// latent embedding and it reduces to the log-bilinear unigram model.
class LblHmmModel {
 public:
  TokenVocab vocab;
  ParamStore params;
  TransitionModel transitions{1};
  SmoothingConfig smoothing;

  int states() const { return transitions.states(); }
  std::vector<ResolvedFeature> state_features(int state) const;
  // Base emission distribution of every state, K x |V| row-major.
  std::vector<double> emission_table() const;
  // Smoothed natural-log emissions of `ids`, N x K.
  std::vector<double> emission_log_probs(const std::vector<int>& ids,
                                         const std::vector<double>& table, double pi,
                                         double alpha) const;
  // log2 P(x_i | x_<i) per position (tokens then the boundary symbol).
  std::vector<double> sequence_log2(const std::vector<std::string>& tokens) const;
};

LblHmmModel build_lbl_hmm(const std::vector<Tree>& train, const TrainConfig& config,
                          const std::vector<Tree>& universe = {});
LblHmmModel train_lbl_hmm(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                          const TrainConfig& config, const std::vector<Tree>& universe = {},
                          long* forward_backward_calls = nullptr);

// Order of a named n-gram variant ("ngram3" -> 3), or 0.
int ngram_order(const std::string& variant);

}  // namespace ltt
