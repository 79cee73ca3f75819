#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the scoring code under test.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ltt/lbl_model.hpp"
#include "ltt/params.hpp"
#include "ltt/training.hpp"

namespace oracle {

using ltt::ParamStore;
using ltt::ResolvedFeature;
using ltt::ScopeCandidate;

inline double lse(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> context(const ParamStore& p, const std::vector<ResolvedFeature>& fs) {
  std::vector<double> r(p.dim(), 0.0);
  for (const auto& f : fs) {
    if (f.id < 0) continue;
    for (int d = 0; d < p.dim(); ++d) r[d] += p.wcon()[f.slot * p.dim() + d] * p.r()[f.id * p.dim() + d];
  }
  return r;
}

inline double score(const ParamStore& p, const std::vector<double>& ctx, int id) {
  double s = p.b()[id];
  for (int d = 0; d < p.dim(); ++d) s += p.r()[id * p.dim() + d] * ctx[d];
  return s;
}

inline double scope_score(const ParamStore& p, const std::vector<double>& ctx, const ScopeCandidate& v) {
  double s = 0.0;
  for (int u = 0; u < ltt::kScopeFeatures; ++u) {
    const int id = v[u];
    if (id < 0) continue;
    s += p.b()[id];
    for (int d = 0; d < p.dim(); ++d) s += p.wch()[u * p.dim() + d] * p.r()[id * p.dim() + d] * ctx[d];
  }
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& s) {
  const double z = lse(s);
  std::vector<double> out;
  for (double x : s) out.push_back(std::exp(x - z));
  return out;
}

inline double ml_loss(const ParamStore& p, const std::vector<ResolvedFeature>& fs,
                      const std::vector<int>& support, int target) {
  auto ctx = context(p, fs);
  std::vector<double> s;
  for (int id : support) s.push_back(score(p, ctx, id));
  return lse(s) - s[target];
}

inline double scope_loss(const ParamStore& p, const std::vector<ResolvedFeature>& fs,
                         const std::vector<ScopeCandidate>& cands, int target) {
  auto ctx = context(p, fs);
  std::vector<double> s;
  for (const auto& c : cands) s.push_back(scope_score(p, ctx, c));
  return lse(s) - s[target];
}

// -log sigma(d_data) - sum_j log(1 - sigma(d_noise_j)), d = s - log(k q).
inline double nce_loss(const ParamStore& p, const std::vector<ResolvedFeature>& fs,
                       const std::vector<int>& support, int target, const std::vector<int>& noise,
                       const std::vector<double>& q) {
  auto ctx = context(p, fs);
  const double k = static_cast<double>(noise.size());
  auto d = [&](int c) { return score(p, ctx, support[c]) - std::log(k * q[c]); };
  double loss = std::log1p(std::exp(-d(target)));
  for (int c : noise) loss += std::log1p(std::exp(d(c)));
  return loss;
}

// Largest relative error |a - n| / max(|a|, |n|, floor) between the analytic
// gradient and central differences over every parameter entry.
struct GradCheck {
  double max_rel = 0.0;
  std::size_t entries = 0;
};

inline GradCheck check_gradient(ParamStore& p, const ltt::GradientBuffer& g,
                                const std::function<double()>& loss, double h = 1e-5,
                                double floor = 1e-4) {
  GradCheck out;
  auto check = [&](std::vector<double>& theta, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double up = loss();
      theta[i] = keep - h;
      const double down = loss();
      theta[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel = std::max(out.max_rel, rel);
      ++out.entries;
    }
  };
  check(p.r(), g.r_raw());
  check(p.b(), g.b_raw());
  check(p.wcon(), g.wcon_raw());
  check(p.wch(), g.wch_raw());
  return out;
}

// Small randomized parameter store with non-trivial diagonals.
inline ParamStore random_params(std::mt19937_64& rng, int dim, int objects, int ctx_slots,
                                int ch_slots = ltt::kScopeFeatures) {
  ParamStore p(dim, ctx_slots, ch_slots);
  for (int i = 0; i < objects; ++i) p.objects().intern("o" + std::to_string(i));
  p.initialize(rng(), 0.8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : p.b()) x = u(rng);
  for (double& x : p.wcon()) x = u(rng) + 0.5;
  for (double& x : p.wch()) x = u(rng) + 0.5;
  return p;
}

// Exhaustive latent path enumeration: log-likelihood, unary and pairwise
// marginals of a K-state chain with N x K natural-log emissions.
struct Brute {
  double log_likelihood = 0.0;
  std::vector<double> unary;
  std::vector<double> pairwise;
};

inline Brute brute_force_chain(const std::vector<double>& em, int n, int k,
                               const std::vector<double>& log_prior,
                               const std::vector<double>& log_trans) {
  std::vector<double> path_logs;
  std::vector<std::vector<int>> paths;
  std::vector<int> h(n, 0);
  while (true) {
    double lp = log_prior[h[0]] + em[h[0]];
    for (int i = 1; i < n; ++i) lp += log_trans[h[i - 1] * k + h[i]] + em[i * k + h[i]];
    path_logs.push_back(lp);
    paths.push_back(h);
    int pos = n - 1;
    while (pos >= 0 && ++h[pos] == k) h[pos--] = 0;
    if (pos < 0) break;
  }
  Brute b;
  b.log_likelihood = lse(path_logs);
  b.unary.assign(std::size_t(n) * k, 0.0);
  b.pairwise.assign(std::size_t(std::max(n - 1, 0)) * k * k, 0.0);
  if (!std::isfinite(b.log_likelihood)) return b;
  for (std::size_t j = 0; j < paths.size(); ++j) {
    const double w = std::exp(path_logs[j] - b.log_likelihood);
    for (int i = 0; i < n; ++i) b.unary[i * k + paths[j][i]] += w;
    for (int i = 1; i < n; ++i) b.pairwise[(i - 1) * k * k + paths[j][i - 1] * k + paths[j][i]] += w;
  }
  return b;
}

}  // namespace oracle
