#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ltt/ast.hpp"
#include "ltt/baselines.hpp"
#include "ltt/lbl_model.hpp"
#include "ltt/training.hpp"

namespace ltt {

// Any trained model, tagged by its variant name.
struct AnyModel {
  std::variant<LttModel, NgramModel, LblNgramModel, LblHmmModel> model;

  std::string variant() const;
  bool is_tree_model() const { return std::holds_alternative<LttModel>(model); }
  const LttModel& tree_model() const;
};

// Every variant name accepted by train_model.
const std::vector<std::string>& known_variants();
bool is_known_variant(const std::string& variant);
// Variants with a latent traversal variable (default K = 32).
bool is_latent_variant(const std::string& variant);

struct TrainSummary {
  int best_epoch = 0;
  long forward_backward_calls = 0;
  std::vector<EpochStats> history;
  AdaGradState optimizer;  // LTT variants only
};

AnyModel train_model(const TrainConfig& config, const std::vector<Tree>& train,
                     const std::vector<Tree>& valid = {},
                     const std::vector<Tree>& universe = {}, TrainSummary* summary = nullptr);

// Single-file model format: a text magic line, the little-endian length of
// a JSON manifest, the manifest, then little-endian float64 arrays.
std::string serialize_model(const AnyModel& model, const AdaGradState* optimizer = nullptr);
AnyModel deserialize_model(const std::string& bytes);
void save_model(const AnyModel& model, const std::string& path,
                const AdaGradState* optimizer = nullptr);
AnyModel load_model(const std::string& path);

}  // namespace ltt
