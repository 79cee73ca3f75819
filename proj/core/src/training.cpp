#include "ltt/training.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ltt/error.hpp"

namespace ltt {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 30) return x;
  if (x < -30) return std::exp(x);
  return std::log1p(std::exp(x));
}

std::vector<ResolvedFeature> with_latent(const LttModel& model,
                                         std::span<const ResolvedFeature> features,
                                         int state) {
  std::vector<ResolvedFeature> out(features.begin(), features.end());
  if (model.latent_states() > 1) {
    auto id = model.params.objects().find(latent_key(state));
    out.push_back({slot::kLatent, id ? *id : -1});
  }
  return out;
}

// Adds the context-side gradient given dL/dr_con.
void backprop_context(const ParamStore& params, std::span<const ResolvedFeature> features,
                      std::span<const double> g_con, GradientBuffer& grad) {
  const int dim = params.dim();
  for (const ResolvedFeature& f : features) {
    if (f.id < 0) continue;
    auto w = params.w_context(f.slot);
    auto r = params.row(f.id);
    auto gr = grad.r(f.id);
    auto gw = grad.wcon(f.slot);
    for (int d = 0; d < dim; ++d) {
      gr[d] += w[d] * g_con[d];
      gw[d] += r[d] * g_con[d];
    }
  }
}

// dL/ds_c = g for tuple object `id`, accumulated into R[id], b[id] and g_con.
void backprop_tuple(const ParamStore& params, int id, double g,
                    std::span<const double> r_con, std::vector<double>& g_con,
                    GradientBuffer& grad) {
  if (id < 0 || g == 0.0) return;
  const int dim = params.dim();
  auto row = params.row(id);
  auto gr = grad.r(id);
  grad.b(id) += g;
  for (int d = 0; d < dim; ++d) {
    gr[d] += g * r_con[d];
    g_con[d] += g * row[d];
  }
}

}  // namespace

TrainConfig TrainConfig::from_text(std::string_view text) {
  TrainConfig c;
  std::stringstream ss{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key == "variant") c.variant = value;
    else if (key == "dim") c.dim = static_cast<int>(parse_int(key, value));
    else if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "minibatch_size") c.minibatch_size = static_cast<int>(parse_int(key, value));
    else if (key == "learning_rate") c.learning_rate = parse_double(key, value);
    else if (key == "adagrad_epsilon") c.adagrad_epsilon = parse_double(key, value);
    else if (key == "init_scale") c.init_scale = parse_double(key, value);
    else if (key == "use_nce") c.use_nce = parse_bool(key, value);
    else if (key == "nce_noise_samples") c.nce_noise_samples = static_cast<int>(parse_int(key, value));
    else if (key == "nce_noise_alpha") c.nce_noise_alpha = parse_double(key, value);
    else if (key == "latent_states") c.latent_states = static_cast<int>(parse_int(key, value));
    else if (key == "max_latent_states") c.max_latent_states = static_cast<int>(parse_int(key, value));
    else if (key == "databatch_programs") c.databatch_programs = static_cast<int>(parse_int(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "pi") c.pi = parse_double(key, value);
    else if (key == "alpha") c.alpha = parse_double(key, value);
    else if (key == "pi_grid") c.pi_grid = parse_list(key, value);
    else if (key == "alpha_grid") c.alpha_grid = parse_list(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "variant = " << variant << "\n"
     << "dim = " << dim << "\n"
     << "epochs = " << epochs << "\n"
     << "minibatch_size = " << minibatch_size << "\n"
     << "learning_rate = " << format_double(learning_rate) << "\n"
     << "adagrad_epsilon = " << format_double(adagrad_epsilon) << "\n"
     << "init_scale = " << format_double(init_scale) << "\n"
     << "use_nce = " << (use_nce ? "true" : "false") << "\n"
     << "nce_noise_samples = " << nce_noise_samples << "\n"
     << "nce_noise_alpha = " << format_double(nce_noise_alpha) << "\n"
     << "latent_states = " << latent_states << "\n"
     << "max_latent_states = " << max_latent_states << "\n"
     << "databatch_programs = " << databatch_programs << "\n"
     << "seed = " << seed << "\n"
     << "pi = " << format_double(pi) << "\n"
     << "alpha = " << format_double(alpha) << "\n"
     << "pi_grid = " << format_list(pi_grid) << "\n"
     << "alpha_grid = " << format_list(alpha_grid) << "\n";
  return os.str();
}

void TrainConfig::validate() const {
  if (dim <= 0) throw ConfigError("dim must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(adagrad_epsilon >= 0)) throw ConfigError("adagrad_epsilon must be non-negative");
  if (nce_noise_samples < 1) throw ConfigError("nce_noise_samples must be at least 1");
  if (!(nce_noise_alpha > 0)) throw ConfigError("nce_noise_alpha must be positive");
  if (latent_states < 1) throw ConfigError("latent_states must be at least 1");
  if (latent_states > max_latent_states) {
    throw ConfigError("latent_states " + std::to_string(latent_states) +
                      " exceeds the limit of " + std::to_string(max_latent_states));
  }
  if (databatch_programs < 1) throw ConfigError("databatch_programs must be at least 1");
  auto check_pi = [](double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("pi must lie in [0, 1]");
  };
  auto check_alpha = [](double a) {
    if (!(a > 0.0)) throw ConfigError("alpha must be positive");
  };
  check_pi(pi);
  check_alpha(alpha);
  if (pi_grid.empty() || alpha_grid.empty()) throw ConfigError("empty smoothing grid");
  for (double p : pi_grid) check_pi(p);
  for (double a : alpha_grid) check_alpha(a);
}

bool is_ltt_variant(const std::string& variant) {
  return variant == "ltt0" || variant == "ltt-hi" || variant == "ltt-seq" ||
         variant == "ltt-hiseq" || variant == "ltt-hiseq-scope" || variant == "ltt-latent";
}

FeatureSet variant_features(const std::string& variant, int latent_states) {
  FeatureSet f;
  if (variant == "ltt0" || variant == "pcfg") return f;
  if (variant == "ltt-hi") {
    f.hierarchy = true;
  } else if (variant == "ltt-seq") {
    f.sequence = true;
  } else if (variant == "ltt-hiseq") {
    f.hierarchy = f.sequence = true;
  } else if (variant == "ltt-hiseq-scope") {
    f.hierarchy = f.sequence = f.scope = true;
  } else if (variant == "ltt-latent") {
    f.latent_states = latent_states;
  } else {
    throw ConfigError("unknown model variant '" + variant + "'");
  }
  return f;
}

ForwardBackwardResult forward_backward(std::span<const double> em, int n, int K,
                                       std::span<const double> log_prior,
                                       std::span<const double> log_trans) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  ForwardBackwardResult out;
  out.posteriors.length = n;
  out.posteriors.states = K;
  out.posteriors.unary.assign(std::size_t(n) * K, 0.0);
  out.posteriors.pairwise.assign(n > 0 ? std::size_t(n - 1) * K * K : 0, 0.0);
  out.log_conditionals.assign(n, 0.0);
  if (n == 0) return out;
  if (em.size() != std::size_t(n) * K || log_prior.size() != std::size_t(K) ||
      log_trans.size() != std::size_t(K) * K) {
    throw ConfigError("forward_backward: inconsistent shapes");
  }

  std::vector<double> alpha(std::size_t(n) * K), beta(std::size_t(n) * K, 0.0);
  std::vector<double> tmp(K);
  double prev_total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      double v;
      if (i == 0) {
        v = log_prior[k];
      } else {
        for (int j = 0; j < K; ++j) {
          tmp[j] = alpha[std::size_t(i - 1) * K + j] + log_trans[std::size_t(j) * K + k];
        }
        v = log_sum_exp(tmp);
      }
      alpha[std::size_t(i) * K + k] = v + em[std::size_t(i) * K + k];
    }
    const double total = log_sum_exp({alpha.data() + std::size_t(i) * K, std::size_t(K)});
    out.log_conditionals[i] = total - prev_total;
    prev_total = total;
  }
  const double ll = prev_total;
  out.log_likelihood = ll;
  if (!std::isfinite(ll)) {
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(out.log_conditionals[i])) {
        for (int j = i; j < n; ++j) out.log_conditionals[j] = kNegInf;
        break;
      }
    }
    return out;
  }

  for (int i = n - 2; i >= 0; --i) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        tmp[k] = log_trans[std::size_t(j) * K + k] + em[std::size_t(i + 1) * K + k] +
                 beta[std::size_t(i + 1) * K + k];
      }
      beta[std::size_t(i) * K + j] = log_sum_exp(tmp);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      out.posteriors.unary[std::size_t(i) * K + k] =
          std::exp(alpha[std::size_t(i) * K + k] + beta[std::size_t(i) * K + k] - ll);
    }
  }
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        const double v = alpha[std::size_t(i - 1) * K + j] + log_trans[std::size_t(j) * K + k] +
                         em[std::size_t(i) * K + k] + beta[std::size_t(i) * K + k] - ll;
        out.posteriors.pairwise[(std::size_t(i) - 1) * K * K + std::size_t(j) * K + k] =
            std::exp(v);
      }
    }
  }
  return out;
}

ForwardBackwardResult forward_backward(std::span<const double> em, int n,
                                       const TransitionModel& transitions) {
  auto lp = transitions.log_prior();
  auto lt = transitions.log_transitions();
  return forward_backward(em, n, transitions.states(), lp, lt);
}

GradientBuffer::GradientBuffer(const ParamStore& params)
    : dim_(params.dim()),
      r_(params.r().size(), 0.0),
      b_(params.b().size(), 0.0),
      wcon_(params.wcon().size(), 0.0),
      wch_(params.wch().size(), 0.0),
      touched_(params.b().size(), 0) {}

std::span<double> GradientBuffer::r(int id) {
  if (!touched_.at(id)) {
    touched_[id] = 1;
    touched_ids_.push_back(id);
  }
  return {r_.data() + std::size_t(id) * dim_, std::size_t(dim_)};
}

double& GradientBuffer::b(int id) {
  if (!touched_.at(id)) {
    touched_[id] = 1;
    touched_ids_.push_back(id);
  }
  return b_[id];
}

std::span<double> GradientBuffer::wcon(int slot) {
  return {wcon_.data() + std::size_t(slot) * dim_, std::size_t(dim_)};
}

std::span<double> GradientBuffer::wch(int u) {
  return {wch_.data() + std::size_t(u) * dim_, std::size_t(dim_)};
}

void GradientBuffer::apply_adagrad(ParamStore& params, AdaGradState& state,
                                   double learning_rate, double epsilon) {
  std::sort(touched_ids_.begin(), touched_ids_.end());
  for (int id : touched_ids_) {
    const std::size_t off = std::size_t(id) * dim_;
    adagrad_apply(params.row(id), {r_.data() + off, std::size_t(dim_)},
                  {state.r.data() + off, std::size_t(dim_)}, learning_rate, epsilon);
    adagrad_apply({&params.b()[id], 1}, {&b_[id], 1}, {&state.b[id], 1}, learning_rate,
                  epsilon);
  }
  adagrad_apply(params.wcon(), wcon_, state.wcon, learning_rate, epsilon);
  adagrad_apply(params.wch(), wch_, state.wch, learning_rate, epsilon);
  clear();
}

void GradientBuffer::clear() {
  for (int id : touched_ids_) {
    std::fill_n(r_.begin() + std::size_t(id) * dim_, dim_, 0.0);
    b_[id] = 0.0;
    touched_[id] = 0;
  }
  touched_ids_.clear();
  std::fill(wcon_.begin(), wcon_.end(), 0.0);
  std::fill(wch_.begin(), wch_.end(), 0.0);
}

double exact_ml_gradient(const ParamStore& params, std::span<const ResolvedFeature> features,
                         std::span<const int> support_ids, int target,
                         GradientBuffer& grad) {
  if (support_ids.empty()) throw ModelingError("empty support");
  if (target < 0 || target >= static_cast<int>(support_ids.size())) {
    throw ModelingError("target tuple outside the support");
  }
  auto r_con = context_repr(params, features);
  std::vector<double> scores;
  scores.reserve(support_ids.size());
  for (int id : support_ids) scores.push_back(children_score(params, r_con, id));
  const double lse = log_sum_exp(scores);
  std::vector<double> g_con(params.dim(), 0.0);
  for (std::size_t c = 0; c < support_ids.size(); ++c) {
    const double g = std::exp(scores[c] - lse) - (static_cast<int>(c) == target ? 1.0 : 0.0);
    backprop_tuple(params, support_ids[c], g, r_con, g_con, grad);
  }
  backprop_context(params, features, g_con, grad);
  return lse - scores[target];
}

double scope_gradient(const ParamStore& params, std::span<const ResolvedFeature> features,
                      std::span<const ScopeCandidate> candidates, int target,
                      GradientBuffer& grad) {
  if (candidates.empty()) throw ModelingError("local identifier with an empty scope");
  if (target < 0 || target >= static_cast<int>(candidates.size())) {
    throw ModelingError("target variable outside the scope");
  }
  const int dim = params.dim();
  auto r_con = context_repr(params, features);
  std::vector<std::vector<double>> reps;
  std::vector<double> scores;
  for (const auto& c : candidates) {
    reps.push_back(scope_repr(params, c));
    double s = scope_bias(params, c);
    for (int d = 0; d < dim; ++d) s += reps.back()[d] * r_con[d];
    scores.push_back(s);
  }
  const double lse = log_sum_exp(scores);
  std::vector<double> g_con(dim, 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double g = std::exp(scores[c] - lse) - (static_cast<int>(c) == target ? 1.0 : 0.0);
    if (g == 0.0) continue;
    for (int d = 0; d < dim; ++d) g_con[d] += g * reps[c][d];
    for (int u = 0; u < kScopeFeatures; ++u) {
      const int id = candidates[c][u];
      if (id < 0) continue;
      auto w = params.w_children(u);
      auto row = params.row(id);
      auto gr = grad.r(id);
      auto gw = grad.wch(u);
      grad.b(id) += g;
      for (int d = 0; d < dim; ++d) {
        gr[d] += g * w[d] * r_con[d];
        gw[d] += g * row[d] * r_con[d];
      }
    }
  }
  backprop_context(params, features, g_con, grad);
  return lse - scores[target];
}

double nce_data_posterior(double score, double noise_prob, int k) {
  return sigmoid(score - std::log(k * noise_prob));
}

double nce_gradient(const ParamStore& params, std::span<const ResolvedFeature> features,
                    std::span<const int> support_ids, int target,
                    std::span<const int> noise_indices, std::span<const double> noise_probs,
                    GradientBuffer& grad) {
  if (target < 0 || target >= static_cast<int>(support_ids.size())) {
    throw ModelingError("target tuple outside the support");
  }
  const int k = static_cast<int>(noise_indices.size());
  if (k < 1) throw ConfigError("NCE needs at least one noise sample");
  auto r_con = context_repr(params, features);
  std::vector<double> g_con(params.dim(), 0.0);
  auto logit = [&](int c) {
    return children_score(params, r_con, support_ids[c]) - std::log(k * noise_probs[c]);
  };
  const double dt = logit(target);
  double loss = softplus(-dt);
  backprop_tuple(params, support_ids[target], sigmoid(dt) - 1.0, r_con, g_con, grad);
  for (int c : noise_indices) {
    const double dn = logit(c);
    loss += softplus(dn);
    backprop_tuple(params, support_ids[c], sigmoid(dn), r_con, g_con, grad);
  }
  backprop_context(params, features, g_con, grad);
  return loss;
}

std::vector<double> nce_noise_distribution(const SupportTable::Row& row, double alpha) {
  std::vector<double> q(row.tuples.size());
  const double z = static_cast<double>(row.total) + alpha * static_cast<double>(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = (static_cast<double>(row.counts[i]) + alpha) / z;
  }
  return q;
}

int sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  if (probs.empty()) throw ModelingError("cannot sample from an empty distribution");
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = uniform(rng, 0.0, total);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

double exact_ml_step(LttModel& model, std::span<const TrainingExample> batch,
                     AdaGradState& state, const TrainConfig& config, GradientBuffer& grad) {
  double loss = 0.0;
  for (const TrainingExample& ex : batch) {
    const PreparedProduction& p = *ex.production;
    auto feats = with_latent(model, p.features, ex.state);
    if (p.local) {
      loss += scope_gradient(model.params, feats, p.candidates, p.local_target, grad);
    } else {
      loss += exact_ml_gradient(model.params, feats, model.support_ids(p.row), p.target, grad);
    }
  }
  grad.apply_adagrad(model.params, state, config.learning_rate, config.adagrad_epsilon);
  return loss;
}

double exact_ml_step(LttModel& model, std::span<const TrainingExample> batch,
                     AdaGradState& state, const TrainConfig& config) {
  GradientBuffer grad(model.params);
  return exact_ml_step(model, batch, state, config, grad);
}

double nce_step(LttModel& model, std::span<const TrainingExample> batch, AdaGradState& state,
                const TrainConfig& config, const std::vector<std::vector<double>>& noise,
                std::mt19937_64& rng, GradientBuffer& grad) {
  double loss = 0.0;
  std::vector<int> draws(config.nce_noise_samples);
  for (const TrainingExample& ex : batch) {
    const PreparedProduction& p = *ex.production;
    auto feats = with_latent(model, p.features, ex.state);
    if (p.local) {
      loss += scope_gradient(model.params, feats, p.candidates, p.local_target, grad);
      continue;
    }
    const auto& q = noise.at(p.row);
    for (int& d : draws) d = sample_index(q, rng);
    loss += nce_gradient(model.params, feats, model.support_ids(p.row), p.target, draws, q,
                         grad);
  }
  grad.apply_adagrad(model.params, state, config.learning_rate, config.adagrad_epsilon);
  return loss;
}

double nce_step(LttModel& model, std::span<const TrainingExample> batch, AdaGradState& state,
                const TrainConfig& config, const std::vector<std::vector<double>>& noise,
                std::mt19937_64& rng) {
  GradientBuffer grad(model.params);
  return nce_step(model, batch, state, config, noise, rng, grad);
}

void transition_step(TransitionModel& transitions, std::span<const double> prior_counts,
                     std::span<const double> pair_counts, std::vector<double>& acc_prior,
                     std::vector<double>& acc_trans, double learning_rate, double epsilon) {
  const int K = transitions.states();
  acc_prior.resize(K, 0.0);
  acc_trans.resize(std::size_t(K) * K, 0.0);
  // Gradient of the negative expected log-likelihood w.r.t. the logits.
  std::vector<double> g(K);
  double n = std::accumulate(prior_counts.begin(), prior_counts.end(), 0.0);
  for (int k = 0; k < K; ++k) g[k] = n * transitions.prior(k) - prior_counts[k];
  adagrad_apply(transitions.prior_logits(), g, acc_prior, learning_rate, epsilon);
  std::vector<double> gt(std::size_t(K) * K);
  for (int j = 0; j < K; ++j) {
    double row = 0.0;
    for (int k = 0; k < K; ++k) row += pair_counts[std::size_t(j) * K + k];
    for (int k = 0; k < K; ++k) {
      gt[std::size_t(j) * K + k] = row * transitions.prob(j, k) - pair_counts[std::size_t(j) * K + k];
    }
  }
  adagrad_apply(transitions.logits(), gt, acc_trans, learning_rate, epsilon);
  transitions.refresh();
}

LttModel build_ltt_model(const std::vector<Tree>& train, const TrainConfig& config,
                         const std::vector<Tree>& universe) {
  config.validate();
  if (train.empty()) throw ConfigError("empty training corpus");
  LttModel model;
  model.variant = config.variant;
  model.features = variant_features(config.variant, config.latent_states);
  model.params = ParamStore(config.dim, slot::kCount, kScopeFeatures);
  model.smoothing = {config.pi, config.alpha};
  model.transitions = TransitionModel(model.latent_states());
  for (const Tree& t : train) model.observe_training_tree(t);
  for (const Tree& t : universe) {
    for (const Token& tok : t.leaves()) model.defaults.add_universe_token(tok);
  }
  model.params.initialize(config.seed, config.init_scale);
  model.finalize_support();
  return model;
}

namespace {

// Natural-log emission table (N x K) of the unsmoothed model.
std::vector<double> base_log_emissions(const LttModel& model, const PreparedTree& tree) {
  const int K = model.latent_states();
  std::vector<double> em(tree.productions.size() * K);
  for (std::size_t i = 0; i < tree.productions.size(); ++i) {
    for (int k = 0; k < K; ++k) {
      em[i * K + k] = std::log(model.base_prob(tree.productions[i], k));
    }
  }
  return em;
}

struct GridScore {
  double bits_per_token = std::numeric_limits<double>::infinity();
  double pi = 0.0;
  double alpha = 0.0;
};

// Validation bits/token (as a cost) for every (pi, alpha); returns the best.
GridScore score_grid(const LttModel& model, const std::vector<PreparedTree>& valid,
                     const TrainConfig& config) {
  const int K = model.latent_states();
  const std::size_t P = config.pi_grid.size(), A = config.alpha_grid.size();
  std::vector<double> cost(P * A, 0.0);
  std::size_t tokens = 0;
  for (const PreparedTree& tree : valid) {
    tokens += tree.token_count;
    const std::size_t n = tree.productions.size();
    std::vector<double> base(n * K), def(n * A);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = tree.productions[i];
      for (int k = 0; k < K; ++k) base[i * K + k] = model.base_prob(p, k);
      for (std::size_t a = 0; a < A; ++a) def[i * A + a] = model.default_prob(p, config.alpha_grid[a]);
    }
    for (std::size_t pi_i = 0; pi_i < P; ++pi_i) {
      const double pi = config.pi_grid[pi_i];
      for (std::size_t a = 0; a < A; ++a) {
        double nats = 0.0;
        if (K == 1) {
          for (std::size_t i = 0; i < n; ++i) {
            nats += std::log(smoothed_children_prob(base[i], def[i * A + a], pi));
          }
        } else {
          std::vector<double> em(n * K);
          for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) {
              em[i * K + k] = std::log(smoothed_children_prob(base[i * K + k], def[i * A + a], pi));
            }
          }
          nats = forward_backward(em, static_cast<int>(n), model.transitions).log_likelihood;
        }
        cost[pi_i * A + a] -= nats / std::log(2.0);
      }
    }
  }
  GridScore best;
  for (std::size_t pi_i = 0; pi_i < P; ++pi_i) {
    for (std::size_t a = 0; a < A; ++a) {
      const double bpt = cost[pi_i * A + a] / std::max<std::size_t>(1, tokens);
      if (bpt < best.bits_per_token) {
        best = {bpt, config.pi_grid[pi_i], config.alpha_grid[a]};
      }
    }
  }
  return best;
}

}  // namespace

TrainResult train_ltt(const std::vector<Tree>& train, const std::vector<Tree>& valid,
                      const TrainConfig& config, const std::vector<Tree>& universe) {
  if (!is_ltt_variant(config.variant)) {
    throw ConfigError("'" + config.variant + "' is not a log-bilinear tree-traversal variant");
  }
  TrainResult result{build_ltt_model(train, config, universe), {}, 0, 0, {}};
  LttModel& model = result.model;
  const int K = model.latent_states();
  const bool latent = model.variant == "ltt-latent";

  std::vector<PreparedTree> prepared_train, prepared_valid;
  prepared_train.reserve(train.size());
  for (const Tree& t : train) prepared_train.push_back(model.prepare(t));
  prepared_valid.reserve(valid.size());
  for (const Tree& t : valid) prepared_valid.push_back(model.prepare(t));

  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 latent_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 noise_rng(config.seed + 0x632be59bd9b4e019ULL);

  AdaGradState state;
  state.resize_for(model.params);
  GradientBuffer grad(model.params);
  std::vector<double> acc_prior, acc_trans;

  std::vector<std::vector<double>> noise;
  if (config.use_nce) {
    for (const auto& row : model.support.rows()) {
      noise.push_back(nce_noise_distribution(row, config.nce_noise_alpha));
    }
  }

  ParamStore best_params = model.params;
  TransitionModel best_transitions = model.transitions;
  double best_score = std::numeric_limits<double>::infinity();
  if (!prepared_valid.empty()) {
    GridScore s = score_grid(model, prepared_valid, config);
    best_score = s.bits_per_token;
    model.smoothing = {s.pi, s.alpha};
  }

  std::vector<std::size_t> order(prepared_train.size());
  std::vector<TrainingExample> examples;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_in_place(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += config.databatch_programs) {
      const std::size_t end = std::min(order.size(), start + config.databatch_programs);
      examples.clear();
      std::vector<double> prior_counts(K, 0.0), pair_counts(std::size_t(K) * K, 0.0);
      for (std::size_t o = start; o < end; ++o) {
        const PreparedTree& tree = prepared_train[order[o]];
        const int n = static_cast<int>(tree.productions.size());
        if (!latent) {
          for (const auto& p : tree.productions) examples.push_back({&p, 0});
          continue;
        }
        auto em = base_log_emissions(model, tree);
        auto fb = forward_backward(em, n, model.transitions);
        ++result.forward_backward_calls;
        if (!std::isfinite(fb.log_likelihood)) {
          throw ModelingError("training program has zero probability under the model");
        }
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
          examples.push_back({&tree.productions[i], h});
        }
      }
      shuffle_in_place(examples, order_rng);
      for (std::size_t b = 0; b < examples.size(); b += config.minibatch_size) {
        std::span<const TrainingExample> batch(
            examples.data() + b, std::min<std::size_t>(config.minibatch_size, examples.size() - b));
        stats.train_nats += config.use_nce
                                ? nce_step(model, batch, state, config, noise, noise_rng, grad)
                                : exact_ml_step(model, batch, state, config, grad);
      }
      if (latent && K > 1) {
        transition_step(model.transitions, prior_counts, pair_counts, acc_prior, acc_trans,
                        config.learning_rate, config.adagrad_epsilon);
      }
    }
    if (!prepared_valid.empty()) {
      GridScore s = score_grid(model, prepared_valid, config);
      stats.valid_bits_per_token = s.bits_per_token;
      stats.pi = s.pi;
      stats.alpha = s.alpha;
      if (s.bits_per_token < best_score) {
        best_score = s.bits_per_token;
        best_params = model.params;
        best_transitions = model.transitions;
        result.best_epoch = epoch;
        model.smoothing = {s.pi, s.alpha};
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(stats);
  }
  if (!prepared_valid.empty()) {
    model.params = std::move(best_params);
    model.transitions = std::move(best_transitions);
  }
  result.optimizer = std::move(state);
  return result;
}

}  // namespace ltt
