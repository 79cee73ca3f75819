#include "ltt/params.hpp"

#include <cmath>
#include <random>

#include "ltt/error.hpp"

namespace ltt {

int Vocab::intern(const std::string& key) {
  auto [it, inserted] = ids_.try_emplace(key, static_cast<int>(keys_.size()));
  if (inserted) keys_.push_back(key);
  return it->second;
}

std::optional<int> Vocab::find(const std::string& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void adagrad_apply(std::span<double> theta, std::span<const double> grad,
                   std::span<double> acc, double learning_rate, double epsilon) {
  if (theta.size() != grad.size() || theta.size() != acc.size()) {
    throw ConfigError("adagrad_apply: size mismatch");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    theta[i] -= learning_rate * g / (std::sqrt(acc[i]) + epsilon);
  }
}

ParamStore::ParamStore(int dim, int context_slots, int children_slots)
    : dim_(dim), context_slots_(context_slots), children_slots_(children_slots) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
  wcon_.assign(std::size_t(context_slots) * dim, 1.0);
  wch_.assign(std::size_t(children_slots) * dim, 1.0);
}

void ParamStore::initialize(std::uint64_t seed, double init_scale) {
  std::mt19937_64 rng(seed);
  const std::size_t n = objects_.size();
  r_.resize(n * dim_);
  b_.resize(n);
  for (std::size_t id = 0; id < n; ++id) {
    for (int d = 0; d < dim_; ++d) {
      r_[id * dim_ + d] = uniform(rng, -init_scale, init_scale);
    }
    b_[id] = uniform(rng, -init_scale, init_scale);
  }
  std::fill(wcon_.begin(), wcon_.end(), 1.0);
  std::fill(wch_.begin(), wch_.end(), 1.0);
}

void ParamStore::grow() {
  r_.resize(objects_.size() * dim_, 0.0);
  b_.resize(objects_.size(), 0.0);
}

void AdaGradState::resize_for(const ParamStore& params) {
  r.resize(params.r().size(), 0.0);
  b.resize(params.b().size(), 0.0);
  wcon.resize(params.wcon().size(), 0.0);
  wch.resize(params.wch().size(), 0.0);
}

}  // namespace ltt
