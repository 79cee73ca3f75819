#include "ltt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "ltt/error.hpp"

namespace ltt {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

struct LeafCollector {
  std::vector<SequenceToken> out;
  std::vector<int> path;
  void enter(const Tree&, int id, int) { path.push_back(id); }
  void token(const Tree& tree, int id) {
    out.push_back({tree.token(id).text, tree.node(path.back()).label});
  }
  void leave(const Tree&, int) { path.pop_back(); }
};

std::vector<std::vector<std::string>> texts_of(const std::vector<Tree>& trees) {
  std::vector<std::vector<std::string>> out;
  out.reserve(trees.size());
  for (const Tree& t : trees) out.push_back(token_texts(t));
  return out;
}

std::string join_context(const std::vector<std::string>& padded, std::size_t end,
                         int width) {
  std::string key;
  for (std::size_t j = end - width; j < end; ++j) {
    if (j != end - width) key += '\x1f';
    key += padded[j];
  }
  return key;
}

std::vector<int> all_ids(std::size_t n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

struct Position {
  std::size_t program;
  std::size_t pos;
  std::vector<ResolvedFeature> features;
  int target;
  int state = 0;
};

}  // namespace

std::vector<SequenceToken> token_sequence(const Tree& tree) {
  LeafCollector c;
  traverse_depth_first(tree, c);
  return std::move(c.out);
}

std::vector<std::string> token_texts(const Tree& tree) {
  std::vector<std::string> out;
  for (const Token& t : tree.leaves()) out.push_back(t.text);
  return out;
}

void TokenVocab::build(const std::vector<std::vector<std::string>>& train,
                       const std::vector<std::vector<std::string>>& universe) {
  std::set<std::string> all{kBoundary};
  for (const auto& seq : train) all.insert(seq.begin(), seq.end());
  for (const auto& seq : universe) all.insert(seq.begin(), seq.end());
  std::vector<std::string> words(all.begin(), all.end());
  std::vector<long> counts(words.size(), 0);
  restore(std::move(words), std::move(counts));
  for (const auto& seq : train) {
    for (const auto& w : seq) ++counts_[index_.at(w)];
    ++counts_[index_.at(kBoundary)];
    total_ += static_cast<long>(seq.size()) + 1;
  }
}

void TokenVocab::restore(std::vector<std::string> words, std::vector<long> counts) {
  words_ = std::move(words);
  counts_ = std::move(counts);
  index_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
  total_ = std::accumulate(counts_.begin(), counts_.end(), 0L);
}

int TokenVocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

double TokenVocab::unigram(int id, double alpha) const {
  const double c = id < 0 ? 0.0 : static_cast<double>(counts_[id]);
  return (c + alpha) / (static_cast<double>(total_) + alpha * static_cast<double>(size()));
}

std::vector<int> TokenVocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size() + 1);
  for (const auto& t : tokens) out.push_back(id(t));
  out.push_back(id(kBoundary));
  return out;
}

void NgramModel::fit(const std::vector<std::vector<std::string>>& train,
                     const std::vector<std::vector<std::string>>& universe) {
  if (order < 1) throw ConfigError("n-gram order must be at least 1");
  if (train.empty()) throw ConfigError("empty training corpus");
  vocab.build(train, universe);
  counts.clear();
  const int width = order - 1;
  for (const auto& seq : train) {
    std::vector<std::string> padded(width, kBoundary);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(kBoundary);
    for (std::size_t i = width; i < padded.size(); ++i) {
      Context& c = counts[join_context(padded, i, width)];
      ++c.total;
      ++c.next[padded[i]];
    }
  }
}

double NgramModel::prob(const std::vector<std::string>& context,
                        const std::string& word) const {
  const int width = order - 1;
  std::vector<std::string> padded(width, kBoundary);
  padded.insert(padded.end(), context.begin(), context.end());
  const std::string key = join_context(padded, padded.size(), width);
  double count = 0.0, total = 0.0;
  if (auto it = counts.find(key); it != counts.end()) {
    total = static_cast<double>(it->second.total);
    if (auto w = it->second.next.find(word); w != it->second.next.end()) {
      count = static_cast<double>(w->second);
    }
  }
  return (count + alpha) / (total + alpha * static_cast<double>(vocab.size()));
}

std::vector<double> NgramModel::sequence_log2(const std::vector<std::string>& tokens) const {
  const int width = order - 1;
  std::vector<std::string> padded(width, kBoundary);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  padded.push_back(kBoundary);
  std::vector<double> out;
  out.reserve(tokens.size() + 1);
  const double V = static_cast<double>(vocab.size());
  for (std::size_t i = width; i < padded.size(); ++i) {
    double count = 0.0, total = 0.0;
    if (auto it = counts.find(join_context(padded, i, width)); it != counts.end()) {
      total = static_cast<double>(it->second.total);
      if (auto w = it->second.next.find(padded[i]); w != it->second.next.end()) {
        count = static_cast<double>(w->second);
      }
    }
    out.push_back(std::log2((count + alpha) / (total + alpha * V)));
  }
  return out;
}

NgramModel train_ngram(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                       int order, const TrainConfig& config,
                       const std::vector<Tree>& universe) {
  config.validate();
  NgramModel model;
  model.order = order;
  model.alpha = config.alpha;
  model.fit(texts_of(train), texts_of(universe));
  if (valid.empty()) return model;
  const auto valid_texts = texts_of(valid);
  double best = std::numeric_limits<double>::infinity();
  double best_alpha = config.alpha;
  for (double a : config.alpha_grid) {
    model.alpha = a;
    double bits = 0.0;
    std::size_t tokens = 0;
    for (const auto& seq : valid_texts) {
      for (double b : model.sequence_log2(seq)) bits -= b;
      tokens += seq.size();
    }
    const double bpt = bits / std::max<std::size_t>(1, tokens);
    if (bpt < best) {
      best = bpt;
      best_alpha = a;
    }
  }
  model.alpha = best_alpha;
  return model;
}

void set_pcfg_tables(LttModel& model, double alpha) {
  model.parameterization = Parameterization::Tabular;
  const int K = model.latent_states();
  model.tabular.assign(model.support.size(), {});
  for (std::size_t r = 0; r < model.support.size(); ++r) {
    const auto& row = model.support.row(static_cast<int>(r));
    const double z =
        static_cast<double>(row.total) + alpha * static_cast<double>(row.tuples.size());
    std::vector<double> probs(row.tuples.size());
    for (std::size_t t = 0; t < probs.size(); ++t) {
      probs[t] = (static_cast<double>(row.counts[t]) + alpha) / z;
    }
    model.tabular[r].assign(K, probs);
  }
}

LttModel build_pcfg(const std::vector<Tree>& train, const TrainConfig& config,
                    const std::vector<Tree>& universe) {
  TrainConfig c = config;
  c.variant = "pcfg";
  c.dim = 1;
  c.latent_states = 1;
  LttModel model = build_ltt_model(train, c, universe);
  set_pcfg_tables(model, c.alpha);
  return model;
}

LttModel train_pcfg(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                    const TrainConfig& config, const std::vector<Tree>& universe) {
  LttModel model = build_pcfg(train, config, universe);
  if (valid.empty()) return model;
  std::vector<PreparedTree> prepared;
  std::size_t tokens = 0;
  for (const Tree& t : valid) {
    prepared.push_back(model.prepare(t));
    tokens += prepared.back().token_count;
  }
  double best = std::numeric_limits<double>::infinity();
  SmoothingConfig chosen = model.smoothing;
  for (double a : config.alpha_grid) {
    set_pcfg_tables(model, a);
    std::vector<double> bits(config.pi_grid.size(), 0.0);
    for (const PreparedTree& tree : prepared) {
      for (const auto& p : tree.productions) {
        const double base = model.base_prob(p, 0);
        const double def = model.default_prob(p, a);
        for (std::size_t i = 0; i < bits.size(); ++i) {
          bits[i] -= std::log2(smoothed_children_prob(base, def, config.pi_grid[i]));
        }
      }
    }
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const double bpt = bits[i] / std::max<std::size_t>(1, tokens);
      if (bpt < best) {
        best = bpt;
        chosen = {config.pi_grid[i], a};
      }
    }
  }
  set_pcfg_tables(model, chosen.alpha);
  model.smoothing = chosen;
  return model;
}

std::vector<ResolvedFeature> LblNgramModel::context_features(const std::vector<int>& ids,
                                                             std::size_t pos) const {
  std::vector<ResolvedFeature> out;
  const int boundary = vocab.id(kBoundary);
  for (int j = 0; j + 1 < order; ++j) {
    const long prev = static_cast<long>(pos) - 1 - j;
    out.push_back({j, prev < 0 ? boundary : ids[prev]});
  }
  return out;
}

std::vector<double> LblNgramModel::base_distribution(
    std::span<const ResolvedFeature> features) const {
  auto r_con = context_repr(params, features);
  std::vector<double> scores(vocab.size());
  for (std::size_t w = 0; w < scores.size(); ++w) {
    scores[w] = children_score(params, r_con, static_cast<int>(w));
  }
  return softmax(scores);
}

std::vector<double> LblNgramModel::sequence_log2(const std::vector<std::string>& tokens) const {
  const auto ids = vocab.encode(tokens);
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    const int w = ids[pos];
    double base = 0.0;
    if (w >= 0) base = base_distribution(context_features(ids, pos))[w];
    out.push_back(std::log2(
        smoothed_children_prob(base, vocab.unigram(w, smoothing.alpha), smoothing.pi)));
  }
  return out;
}

LblNgramModel build_lbl_ngram(const std::vector<Tree>& train, int order,
                              const TrainConfig& config, const std::vector<Tree>& universe) {
  config.validate();
  if (train.empty()) throw ConfigError("empty training corpus");
  if (order < 1) throw ConfigError("n-gram order must be at least 1");
  LblNgramModel model;
  model.order = order;
  model.smoothing = {config.pi, config.alpha};
  model.vocab.build(texts_of(train), texts_of(universe));
  model.params = ParamStore(config.dim, std::max(1, order - 1), 0);
  for (const auto& w : model.vocab.words()) model.params.objects().intern(token_key(w));
  model.params.initialize(config.seed, config.init_scale);
  return model;
}

namespace {

// Best (pi, alpha) for per-position base probabilities and unigram ids.
struct SequenceGrid {
  std::vector<std::vector<double>> base;  // per program, per position
  std::vector<std::vector<int>> ids;
  std::size_t tokens = 0;
};

SmoothingConfig pick_smoothing(const SequenceGrid& g, const TokenVocab& vocab,
                               const TrainConfig& config, double& best_bpt) {
  best_bpt = std::numeric_limits<double>::infinity();
  SmoothingConfig chosen{config.pi, config.alpha};
  for (double a : config.alpha_grid) {
    for (double pi : config.pi_grid) {
      double bits = 0.0;
      for (std::size_t p = 0; p < g.ids.size(); ++p) {
        for (std::size_t i = 0; i < g.ids[p].size(); ++i) {
          bits -= std::log2(smoothed_children_prob(g.base[p][i], vocab.unigram(g.ids[p][i], a), pi));
        }
      }
      const double bpt = bits / std::max<std::size_t>(1, g.tokens);
      if (bpt < best_bpt) {
        best_bpt = bpt;
        chosen = {pi, a};
      }
    }
  }
  return chosen;
}

}  // namespace

LblNgramModel train_lbl_ngram(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                              int order, const TrainConfig& config,
                              const std::vector<Tree>& universe) {
  LblNgramModel model = build_lbl_ngram(train, order, config, universe);
  const auto ids_all = all_ids(model.vocab.size());

  std::vector<Position> examples;
  for (std::size_t p = 0; p < train.size(); ++p) {
    const auto ids = model.vocab.encode(token_texts(train[p]));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      examples.push_back({p, i, model.context_features(ids, i), ids[i]});
    }
  }
  std::vector<std::vector<int>> valid_ids;
  std::size_t valid_tokens = 0;
  for (const Tree& t : valid) {
    auto texts = token_texts(t);
    valid_tokens += texts.size();
    valid_ids.push_back(model.vocab.encode(texts));
  }
  auto score_valid = [&](double& bpt) {
    SequenceGrid g;
    g.ids = valid_ids;
    g.tokens = valid_tokens;
    for (const auto& ids : valid_ids) {
      std::vector<double> base(ids.size(), 0.0);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= 0) base[i] = model.base_distribution(model.context_features(ids, i))[ids[i]];
      }
      g.base.push_back(std::move(base));
    }
    return pick_smoothing(g, model.vocab, config, bpt);
  };

  std::mt19937_64 rng(config.seed);
  AdaGradState state;
  state.resize_for(model.params);
  GradientBuffer grad(model.params);
  ParamStore best_params = model.params;
  double best = std::numeric_limits<double>::infinity();
  if (!valid.empty()) model.smoothing = score_valid(best);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_in_place(examples, rng);
    for (std::size_t b = 0; b < examples.size(); b += config.minibatch_size) {
      const std::size_t e = std::min(examples.size(), b + config.minibatch_size);
      for (std::size_t i = b; i < e; ++i) {
        exact_ml_gradient(model.params, examples[i].features, ids_all, examples[i].target, grad);
      }
      grad.apply_adagrad(model.params, state, config.learning_rate, config.adagrad_epsilon);
    }
    if (!valid.empty()) {
      double bpt = 0.0;
      SmoothingConfig s = score_valid(bpt);
      if (bpt < best) {
        best = bpt;
        best_params = model.params;
        model.smoothing = s;
      }
    }
  }
  if (!valid.empty()) model.params = std::move(best_params);
  return model;
}

std::vector<ResolvedFeature> LblHmmModel::state_features(int state) const {
  if (states() <= 1) return {};
  auto id = params.objects().find(latent_key(state));
  return {{0, id ? *id : -1}};
}

std::vector<double> LblHmmModel::emission_table() const {
  const std::size_t V = vocab.size();
  std::vector<double> table(std::size_t(states()) * V);
  for (int k = 0; k < states(); ++k) {
    auto feats = state_features(k);
    auto r_con = context_repr(params, feats);
    std::vector<double> scores(V);
    for (std::size_t w = 0; w < V; ++w) scores[w] = children_score(params, r_con, static_cast<int>(w));
    auto p = softmax(scores);
    std::copy(p.begin(), p.end(), table.begin() + std::size_t(k) * V);
  }
  return table;
}

std::vector<double> LblHmmModel::emission_log_probs(const std::vector<int>& ids,
                                                    const std::vector<double>& table,
                                                    double pi, double alpha) const {
  const int K = states();
  const std::size_t V = vocab.size();
  std::vector<double> em(ids.size() * K);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int w = ids[i];
    const double uni = vocab.unigram(w, alpha);
    for (int k = 0; k < K; ++k) {
      const double base = w < 0 ? 0.0 : table[std::size_t(k) * V + w];
      em[i * K + k] = std::log(smoothed_children_prob(base, uni, pi));
    }
  }
  return em;
}

std::vector<double> LblHmmModel::sequence_log2(const std::vector<std::string>& tokens) const {
  const auto ids = vocab.encode(tokens);
  const auto em = emission_log_probs(ids, emission_table(), smoothing.pi, smoothing.alpha);
  auto fb = forward_backward(em, static_cast<int>(ids.size()), transitions);
  std::vector<double> out(fb.log_conditionals.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fb.log_conditionals[i] / kLn2;
  return out;
}

LblHmmModel build_lbl_hmm(const std::vector<Tree>& train, const TrainConfig& config,
                          const std::vector<Tree>& universe) {
  config.validate();
  if (train.empty()) throw ConfigError("empty training corpus");
  LblHmmModel model;
  model.smoothing = {config.pi, config.alpha};
  model.vocab.build(texts_of(train), texts_of(universe));
  model.params = ParamStore(config.dim, 1, 0);
  for (const auto& w : model.vocab.words()) model.params.objects().intern(token_key(w));
  if (config.latent_states > 1) {
    for (int k = 0; k < config.latent_states; ++k) model.params.objects().intern(latent_key(k));
  }
  model.params.initialize(config.seed, config.init_scale);
  model.transitions = TransitionModel(config.latent_states);
  return model;
}

LblHmmModel train_lbl_hmm(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                          const TrainConfig& config, const std::vector<Tree>& universe,
                          long* forward_backward_calls) {
  LblHmmModel model = build_lbl_hmm(train, config, universe);
  const int K = model.states();
  const std::size_t V = model.vocab.size();
  const auto ids_all = all_ids(V);

  std::vector<std::vector<int>> train_ids;
  for (const Tree& t : train) train_ids.push_back(model.vocab.encode(token_texts(t)));
  std::vector<std::vector<int>> valid_ids;
  std::size_t valid_tokens = 0;
  for (const Tree& t : valid) {
    auto texts = token_texts(t);
    valid_tokens += texts.size();
    valid_ids.push_back(model.vocab.encode(texts));
  }

  auto score_valid = [&](double& best_bpt) {
    const auto table = model.emission_table();
    best_bpt = std::numeric_limits<double>::infinity();
    SmoothingConfig chosen = model.smoothing;
    for (double a : config.alpha_grid) {
      for (double pi : config.pi_grid) {
        double bits = 0.0;
        for (const auto& ids : valid_ids) {
          auto em = model.emission_log_probs(ids, table, pi, a);
          bits -= forward_backward(em, static_cast<int>(ids.size()), model.transitions)
                      .log_likelihood / kLn2;
        }
        const double bpt = bits / std::max<std::size_t>(1, valid_tokens);
        if (bpt < best_bpt) {
          best_bpt = bpt;
          chosen = {pi, a};
        }
      }
    }
    return chosen;
  };

  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 latent_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  AdaGradState state;
  state.resize_for(model.params);
  GradientBuffer grad(model.params);
  std::vector<double> acc_prior, acc_trans;
  ParamStore best_params = model.params;
  TransitionModel best_transitions = model.transitions;
  double best = std::numeric_limits<double>::infinity();
  if (!valid.empty()) model.smoothing = score_valid(best);

  std::vector<std::size_t> order(train_ids.size());
  std::vector<Position> examples;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_in_place(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += config.databatch_programs) {
      const std::size_t end = std::min(order.size(), start + config.databatch_programs);
      const auto table = model.emission_table();
      std::vector<double> prior_counts(K, 0.0), pair_counts(std::size_t(K) * K, 0.0);
      examples.clear();
      for (std::size_t o = start; o < end; ++o) {
        const auto& ids = train_ids[order[o]];
        const int n = static_cast<int>(ids.size());
        auto em = model.emission_log_probs(ids, table, 1.0, config.alpha);
        auto fb = forward_backward(em, n, model.transitions);
        if (forward_backward_calls) ++*forward_backward_calls;
        for (int k = 0; k < K; ++k) prior_counts[k] += fb.posteriors.at(0, k);
        for (int i = 1; i < n; ++i) {
          for (int j = 0; j < K; ++j) {
            for (int k = 0; k < K; ++k) pair_counts[std::size_t(j) * K + k] += fb.posteriors.pair(i, j, k);
          }
        }
        for (int i = 0; i < n; ++i) {
          int h = 0;
          if (K > 1) {
            h = sample_index({fb.posteriors.unary.data() + std::size_t(i) * K, std::size_t(K)},
                             latent_rng);
          }
          examples.push_back({order[o], std::size_t(i), model.state_features(h), ids[i], h});
        }
      }
      shuffle_in_place(examples, order_rng);
      for (std::size_t b = 0; b < examples.size(); b += config.minibatch_size) {
        const std::size_t e = std::min(examples.size(), b + config.minibatch_size);
        for (std::size_t i = b; i < e; ++i) {
          exact_ml_gradient(model.params, examples[i].features, ids_all, examples[i].target, grad);
        }
        grad.apply_adagrad(model.params, state, config.learning_rate, config.adagrad_epsilon);
      }
      if (K > 1) {
        transition_step(model.transitions, prior_counts, pair_counts, acc_prior, acc_trans,
                        config.learning_rate, config.adagrad_epsilon);
      }
    }
    if (!valid.empty()) {
      double bpt = 0.0;
      SmoothingConfig s = score_valid(bpt);
      if (bpt < best) {
        best = bpt;
        best_params = model.params;
        best_transitions = model.transitions;
        model.smoothing = s;
      }
    }
  }
  if (!valid.empty()) {
    model.params = std::move(best_params);
    model.transitions = std::move(best_transitions);
  }
  return model;
}

int ngram_order(const std::string& variant) {
  if (variant.rfind("ngram", 0) != 0 || variant.size() == 5) return 0;
  int n = 0;
  for (char c : variant.substr(5)) {
    if (c < '0' || c > '9') return 0;
    n = n * 10 + (c - '0');
  }
  return n;
}

}  // namespace ltt
