#include "emnh/finetune/finetune.hpp"

#include "emnh/core/parallel.hpp"
#include "emnh/training/meta.hpp"

#include <cmath>

namespace emnh::finetune {

TuneResult finetune_submodel(const policy::ModelConfig& config, const ad::ParamStore& params,
                             const decomp::WeightVector& lambda, int K, const FinetuneConfig& ft,
                             std::uint64_t seed) {
  if (K < 0) throw UsageError("fine-tuning steps must be >= 0, got " + std::to_string(K));
  TuneResult out{params, {}};
  if (K == 0) return out;
  ad::AdamState adam(ad::AdamConfig{ft.learning_rate});
  const train::InnerConfig inner{K, ft.batch, ft.n, ft.capacity, ft.threads};
  const auto mode = ft.mode;
  const auto res = train::inner_loop(config, out.params, {train::Task{policy::kHeadPath, lambda}}, inner, adam, seed,
                                     [mode](const ad::ParamStore::Entry& e) { return tunable(mode, e.path); });
  for (const auto& c : res.costs) out.costs.push_back(c.front());
  return out;
}

namespace {

std::vector<int> per_level(const std::vector<int>& K, int L) {
  if (K.size() == 1) return std::vector<int>(static_cast<std::size_t>(L), K.front());
  if (static_cast<int>(K.size()) != L)
    throw UsageError("expected 1 or " + std::to_string(L) + " per-level step counts, got " + std::to_string(K.size()));
  return K;
}

}  // namespace

SubmodelSet hierarchical_finetune(const policy::ModelConfig& config, const ad::ParamStore& meta,
                                  const Hierarchy& hierarchy, const std::vector<int>& K, const FinetuneConfig& ft) {
  const int L = hierarchy.L();
  const auto steps = per_level(K, L);
  // one thread per submodel inside a level; the inner loop runs single-threaded
  FinetuneConfig inner = ft;
  inner.threads = 1;
  std::vector<ad::ParamStore> previous;
  for (int l = 1; l <= L; ++l) {
    const auto& level = hierarchy.levels[static_cast<std::size_t>(l - 1)];
    std::vector<ad::ParamStore> current(level.size());
    parallel_for(level.size(), ft.threads, [&](std::size_t j) {
      const auto& node = level[j];
      const ad::ParamStore& from = node.parent < 0 ? meta : previous[static_cast<std::size_t>(node.parent)];
      current[j] = finetune_submodel(config, from, node.center, steps[static_cast<std::size_t>(l - 1)], inner,
                                     derive_seed(ft.seed, {static_cast<std::uint64_t>(l), j}))
                       .params;
    });
    previous = std::move(current);
  }
  SubmodelSet set;
  set.config = config;
  set.mode = ft.mode;
  for (const auto& s : hierarchy.final_level()) set.weights.push_back(s.center);
  set.models = std::move(previous);
  const int N = static_cast<int>(set.weights.size());
  const auto b = step_budget(hierarchy.a, L, N, steps.back());
  set.manifest["method"] = "hierarchical";
  set.manifest["steps_per_level"] = steps;
  set.manifest["budget"] = to_json(b);
  set.manifest["budget"]["exact_hierarchical"] = exact_budget(hierarchy.a, N, steps);
  set.manifest["lineage"] = lineage_json(hierarchy);
  return set;
}

SubmodelSet vanilla_finetune(const policy::ModelConfig& config, const ad::ParamStore& meta,
                             const decomp::WeightSet& weights, int ktilde, const FinetuneConfig& ft) {
  FinetuneConfig inner = ft;
  inner.threads = 1;
  SubmodelSet set;
  set.config = config;
  set.mode = ft.mode;
  set.weights = weights;
  set.models.resize(weights.size());
  // seeded like a single-level hierarchy so that L=1 hierarchical matches vanilla
  parallel_for(weights.size(), ft.threads, [&](std::size_t j) {
    set.models[j] = finetune_submodel(config, meta, weights[j], ktilde, inner, derive_seed(ft.seed, {1, j})).params;
  });
  set.manifest["method"] = "vanilla";
  set.manifest["ktilde"] = ktilde;
  set.manifest["budget"] = {{"vanilla_total", static_cast<long long>(weights.size()) * ktilde}};
  return set;
}

StepBudget step_budget(int a, int L, int N, int K) {
  if (a < 2 || L < 1 || N < 1 || K < 0) throw UsageError("step_budget needs a >= 2, L >= 1, N >= 1 and K >= 0");
  StepBudget b;
  long long aL = 1;
  for (int l = 0; l < L; ++l) aL *= a;
  b.idealized_hierarchical = static_cast<long long>(K) * a * (aL - 1) / (a - 1);
  b.idealized_vanilla = static_cast<long long>(K) * L * aL;
  b.idealized_ratio = b.idealized_vanilla > 0 ? static_cast<double>(b.idealized_hierarchical) /
                                                    static_cast<double>(b.idealized_vanilla)
                                              : 0.0;
  b.exact_hierarchical = exact_budget(a, N, std::vector<int>(static_cast<std::size_t>(L), K));
  b.matched_ktilde = static_cast<int>(std::llround(static_cast<double>(b.exact_hierarchical) / N));
  b.vanilla_total = static_cast<long long>(N) * b.matched_ktilde;
  return b;
}

long long exact_budget(int a, int N, const std::vector<int>& K) {
  if (K.empty()) throw UsageError("at least one level is required");
  long long total = 0, al = 1;
  for (std::size_t l = 0; l + 1 < K.size(); ++l) {
    al *= a;
    total += al * K[l];
  }
  return total + static_cast<long long>(N) * K.back();
}

nlohmann::json to_json(const StepBudget& b) {
  return {{"idealized_hierarchical", b.idealized_hierarchical},
          {"idealized_vanilla", b.idealized_vanilla},
          {"idealized_ratio", b.idealized_ratio},
          {"exact_hierarchical", b.exact_hierarchical},
          {"matched_ktilde", b.matched_ktilde},
          {"vanilla_total", b.vanilla_total}};
}

}  // namespace emnh::finetune
