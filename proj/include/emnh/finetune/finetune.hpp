#pragma once

#include "emnh/finetune/hierarchy.hpp"
#include "emnh/finetune/submodels.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace emnh::finetune {

struct FinetuneConfig {
  int batch = 64;
  /// Problem size of the fine-tuning instances.
  int n = 20;
  std::optional<double> capacity;
  TuneMode mode = TuneMode::full;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct TuneResult {
  ad::ParamStore params;
  /// Mean scalarized cost per step.
  std::vector<double> costs;
};

/// K single-task REINFORCE + Adam steps for a fixed weight, fresh optimizer state.
TuneResult finetune_submodel(const policy::ModelConfig& config, const ad::ParamStore& params,
                             const decomp::WeightVector& lambda, int K, const FinetuneConfig& ft,
                             std::uint64_t seed);

/// Level 1 from the meta-model, every deeper node from its parent.
/// `K` holds one step count per level (a single value applies to all).
/// Node j of level l uses seed derive_seed(ft.seed, {l, j}).
SubmodelSet hierarchical_finetune(const policy::ModelConfig& config, const ad::ParamStore& meta,
                                  const Hierarchy& hierarchy, const std::vector<int>& K, const FinetuneConfig& ft);

/// Every weight fine-tuned directly from the meta-model for K~ steps.
SubmodelSet vanilla_finetune(const policy::ModelConfig& config, const ad::ParamStore& meta,
                             const decomp::WeightSet& weights, int ktilde, const FinetuneConfig& ft);

struct StepBudget {
  /// K a (a^L - 1) / (a - 1), assuming a^L = N.
  long long idealized_hierarchical = 0;
  /// K L a^L.
  long long idealized_vanilla = 0;
  double idealized_ratio = 0.0;
  /// sum_{l<L} a^l K_l + N K_L.
  long long exact_hierarchical = 0;
  /// round(exact / N), the vanilla steps per weight matching the exact total.
  int matched_ktilde = 0;
  /// N * matched_ktilde.
  long long vanilla_total = 0;
};

/// Budget for uniform K per level.
StepBudget step_budget(int a, int L, int N, int K);
/// Exact total for arbitrary per-level K (size L).
long long exact_budget(int a, int N, const std::vector<int>& K);

nlohmann::json to_json(const StepBudget& b);

}  // namespace emnh::finetune
