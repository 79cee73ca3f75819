#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ltt {

// Interned object keys -> dense ids, in first-insertion order.
class Vocab {
 public:
  int intern(const std::string& key);
  std::optional<int> find(const std::string& key) const;
  const std::string& key(int id) const { return keys_.at(id); }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> keys_;
};

// Uniform double in [lo, hi) from the top 53 bits of a 64-bit draw; used
// instead of std::uniform_real_distribution so parameter files are
// identical across standard libraries.
template <class Engine>
double uniform(Engine& engine, double lo, double hi) {
  const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagrad_apply(std::span<double> theta, std::span<const double> grad,
                   std::span<double> acc, double learning_rate, double epsilon);

// Embedding table R, biases b, diagonal context matrices W_con and
// diagonal children (scope feature) matrices W_ch.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(int dim, int context_slots, int children_slots);

  int dim() const { return dim_; }
  int context_slots() const { return context_slots_; }
  int children_slots() const { return children_slots_; }

  Vocab& objects() { return objects_; }
  const Vocab& objects() const { return objects_; }

  // Sizes R/b to the vocabulary. New rows are drawn uniformly from
  // [-init_scale, init_scale] in id order; diagonals start at 1.
  void initialize(std::uint64_t seed, double init_scale = 0.01);
  // Zero-initialized rows for objects interned after initialize().
  void grow();

  std::span<double> row(int id) { return {r_.data() + std::size_t(id) * dim_, std::size_t(dim_)}; }
  std::span<const double> row(int id) const {
    return {r_.data() + std::size_t(id) * dim_, std::size_t(dim_)};
  }
  double& bias(int id) { return b_.at(id); }
  double bias(int id) const { return b_.at(id); }
  std::span<double> w_context(int slot) {
    return {wcon_.data() + std::size_t(slot) * dim_, std::size_t(dim_)};
  }
  std::span<const double> w_context(int slot) const {
    return {wcon_.data() + std::size_t(slot) * dim_, std::size_t(dim_)};
  }
  std::span<double> w_children(int u) {
    return {wch_.data() + std::size_t(u) * dim_, std::size_t(dim_)};
  }
  std::span<const double> w_children(int u) const {
    return {wch_.data() + std::size_t(u) * dim_, std::size_t(dim_)};
  }

  // Raw arrays, in id / slot order; used by serialization and optimizers.
  std::vector<double>& r() { return r_; }
  std::vector<double>& b() { return b_; }
  std::vector<double>& wcon() { return wcon_; }
  std::vector<double>& wch() { return wch_; }
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& wcon() const { return wcon_; }
  const std::vector<double>& wch() const { return wch_; }

 private:
  int dim_ = 0;
  int context_slots_ = 0;
  int children_slots_ = 0;
  Vocab objects_;
  std::vector<double> r_, b_, wcon_, wch_;
};

// AdaGrad accumulators shaped like a ParamStore.
struct AdaGradState {
  std::vector<double> r, b, wcon, wch;
  void resize_for(const ParamStore& params);
};

}  // namespace ltt
