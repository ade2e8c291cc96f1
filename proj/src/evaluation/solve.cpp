#include "emnh/evaluation/solve.hpp"

#include "emnh/core/parallel.hpp"

#include <cmath>
#include <limits>

namespace emnh::eval {

ParetoPoint best_for_weight(const policy::ModelConfig& config, const ad::ParamStore& params,
                            const decomp::WeightVector& lambda, const problems::Instance& instance,
                            const std::vector<problems::Instance>& copies) {
  policy::RolloutOptions opt;
  opt.mode = policy::DecodeMode::greedy;
  ParetoPoint best;
  double best_cost = std::numeric_limits<double>::infinity();
  const Sense sense = instance.kind.sense();
  for (std::size_t a = 0; a < copies.size(); ++a) {
    const auto ms = policy::rollout_multistart(config, params, copies[a], opt);
    for (const auto& r : ms.rollouts) {
      Vector f = problems::objectives(instance, r.actions);
      const double cost = decomp::weighted_sum(f, lambda, sense);
      if (cost < best_cost) {
        best_cost = cost;
        best = {std::move(f), -1, static_cast<int>(a), r.start, r.actions};
      }
    }
  }
  if (!std::isfinite(best_cost)) throw DataError("no feasible rollout for the instance");
  return best;
}

ParetoSet solve_instance(const finetune::SubmodelSet& submodels, const problems::Instance& instance,
                         bool use_augmentation, int threads) {
  if (!(submodels.config.kind == instance.kind))
    throw UsageError("submodels were trained for " + submodels.config.kind.name() + " M=" +
                     std::to_string(submodels.config.kind.M) + " but the instance is " + instance.kind.name() +
                     " M=" + std::to_string(instance.kind.M));
  if (submodels.models.size() != submodels.weights.size())
    throw DataError("submodel set has " + std::to_string(submodels.models.size()) + " models for " +
                    std::to_string(submodels.weights.size()) + " weights");
  const std::vector<problems::Instance> copies =
      use_augmentation ? problems::augment(instance) : std::vector<problems::Instance>{instance};
  std::vector<ParetoPoint> points(submodels.size());
  parallel_for(submodels.size(), threads, [&](std::size_t i) {
    points[i] = best_for_weight(submodels.config, submodels.models[i], submodels.weights[i], instance, copies);
    points[i].weight_index = static_cast<int>(i);
  });
  return pareto_filter(std::move(points), instance.kind.sense());
}

}  // namespace emnh::eval
