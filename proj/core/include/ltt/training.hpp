#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/lbl_model.hpp"
#include "ltt/params.hpp"

namespace ltt {

struct TrainConfig {
  std::string variant = "ltt0";
  int dim = 50;
  int epochs = 10;
  int minibatch_size = 64;
  double learning_rate = 0.1;
  double adagrad_epsilon = 1e-8;
  double init_scale = 0.01;
  bool use_nce = false;
  int nce_noise_samples = 10;
  double nce_noise_alpha = 1.0;
  int latent_states = 1;
  int max_latent_states = 256;
  int databatch_programs = 10;
  std::uint64_t seed = 1;
  // Smoothing used when there is no validation set to tune on.
  double pi = 0.9;
  double alpha = 0.1;
  // Validation grid searched after every epoch.
  std::vector<double> pi_grid = {0.5, 0.7, 0.8, 0.9, 0.95, 0.99};
  std::vector<double> alpha_grid = {0.01, 0.1, 1.0};

  // "key = value" lines; '#' starts a comment. Unknown keys are errors.
  static TrainConfig from_text(std::string_view text);
  static TrainConfig from_file(const std::string& path);
  std::string to_text() const;
  void validate() const;
};

// Feature set of a named LTT variant (ltt0, ltt-hi, ltt-seq, ltt-hiseq,
// ltt-hiseq-scope, ltt-latent, pcfg).
FeatureSet variant_features(const std::string& variant, int latent_states);
bool is_ltt_variant(const std::string& variant);

// Posterior marginals of a latent chain.
struct PosteriorTable {
  int length = 0;
  int states = 0;
  std::vector<double> unary;     // [i * K + k]
  std::vector<double> pairwise;  // [(i - 1) * K * K + prev * K + cur], i >= 1

  double at(int i, int k) const { return unary[std::size_t(i) * states + k]; }
  double pair(int i, int prev, int cur) const {
    return pairwise[(std::size_t(i) - 1) * states * states + std::size_t(prev) * states + cur];
  }
};

struct ForwardBackwardResult {
  PosteriorTable posteriors;
  double log_likelihood = 0.0;
  // log P(x_i | x_<i); sums to log_likelihood.
  std::vector<double> log_conditionals;
};

// Exact log-space inference. `emission_log_probs` is N x K row-major.
// An impossible sequence reports -inf with zero posteriors.
ForwardBackwardResult forward_backward(std::span<const double> emission_log_probs,
                                       int length, int states,
                                       std::span<const double> log_prior,
                                       std::span<const double> log_transitions);
ForwardBackwardResult forward_backward(std::span<const double> emission_log_probs,
                                       int length, const TransitionModel& transitions);

// Dense gradient accumulator with a touched-row list so sparse minibatches
// only visit the rows they changed. Rows are applied in id order.
class GradientBuffer {
 public:
  explicit GradientBuffer(const ParamStore& params);

  std::span<double> r(int id);
  double& b(int id);
  std::span<double> wcon(int slot);
  std::span<double> wch(int u);

  const std::vector<double>& r_raw() const { return r_; }
  const std::vector<double>& b_raw() const { return b_; }
  const std::vector<double>& wcon_raw() const { return wcon_; }
  const std::vector<double>& wch_raw() const { return wch_; }

  void apply_adagrad(ParamStore& params, AdaGradState& state, double learning_rate,
                     double epsilon);
  void clear();

 private:
  int dim_;
  std::vector<double> r_, b_, wcon_, wch_;
  std::vector<char> touched_;
  std::vector<int> touched_ids_;
};

// Each returns the example's loss (nats) and adds its gradient into `grad`.
// `features` must include the latent slot when present.

// -log softmax probability of the target tuple over the support.
double exact_ml_gradient(const ParamStore& params,
                         std::span<const ResolvedFeature> features,
                         std::span<const int> support_ids, int target,
                         GradientBuffer& grad);

// -log probability of the target among in-scope variables.
double scope_gradient(const ParamStore& params,
                      std::span<const ResolvedFeature> features,
                      std::span<const ScopeCandidate> candidates, int target,
                      GradientBuffer& grad);

// Negative NCE objective: the data tuple against noise draws, with
// unnormalized score s(C) and logit s(C) - log(k q(C)).
double nce_gradient(const ParamStore& params, std::span<const ResolvedFeature> features,
                    std::span<const int> support_ids, int target,
                    std::span<const int> noise_indices,
                    std::span<const double> noise_probs, GradientBuffer& grad);

// sigmoid(s - log(k q)): posterior probability that a tuple came from data.
double nce_data_posterior(double score, double noise_prob, int k);

// Additively smoothed empirical tuple distribution of a support row.
std::vector<double> nce_noise_distribution(const SupportTable::Row& row, double alpha);

struct TrainingExample {
  const PreparedProduction* production = nullptr;
  int state = 0;
};

// One AdaGrad step on a minibatch with exact log-softmax gradients.
// Returns the summed loss (nats).
double exact_ml_step(LttModel& model, std::span<const TrainingExample> batch,
                     AdaGradState& state, const TrainConfig& config);
double exact_ml_step(LttModel& model, std::span<const TrainingExample> batch,
                     AdaGradState& state, const TrainConfig& config,
                     GradientBuffer& grad);

// One AdaGrad step with NCE; non-local examples draw k noise tuples each.
double nce_step(LttModel& model, std::span<const TrainingExample> batch,
                AdaGradState& state, const TrainConfig& config,
                const std::vector<std::vector<double>>& noise, std::mt19937_64& rng);
double nce_step(LttModel& model, std::span<const TrainingExample> batch,
                AdaGradState& state, const TrainConfig& config,
                const std::vector<std::vector<double>>& noise, std::mt19937_64& rng,
                GradientBuffer& grad);

// Seeded Fisher-Yates shuffle (portable across standard libraries).
template <class T>
void shuffle_in_place(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

// Index drawn from a discrete distribution (cumulative search).
int sample_index(std::span<const double> probs, std::mt19937_64& rng);

struct EpochStats {
  int epoch = 0;
  double train_nats = 0.0;          // summed example loss over the epoch
  double valid_bits_per_token = 0;  // best over the (pi, alpha) grid
  double pi = 0.0;
  double alpha = 0.0;
};

struct TrainResult {
  LttModel model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  long forward_backward_calls = 0;
  AdaGradState optimizer;  // accumulators at the end of training
};

// Support tables, default-model statistics, vocabulary and initial
// parameters for an LTT variant. `universe` only widens the token universe.
LttModel build_ltt_model(const std::vector<Tree>& train, const TrainConfig& config,
                         const std::vector<Tree>& universe = {});

// Trains an LTT variant by exact ML (or NCE) with AdaGrad. Variants with a
// latent variable use EM: forward-backward per program, one sampled state
// per position, AdaGrad on the resulting examples and on the transition
// logits. With a validation set, (epoch, pi, alpha) are chosen by grid
// search on validation bits/token.
TrainResult train_ltt(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                      const TrainConfig& config, const std::vector<Tree>& universe = {});

// Expected transition counts -> AdaGrad step on the transition logits.
void transition_step(TransitionModel& transitions, std::span<const double> prior_counts,
                     std::span<const double> pair_counts, std::vector<double>& acc_prior,
                     std::vector<double>& acc_trans, double learning_rate, double epsilon);

}  // namespace ltt
