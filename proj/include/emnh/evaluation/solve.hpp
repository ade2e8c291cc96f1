#pragma once

#include "emnh/evaluation/pareto.hpp"
#include "emnh/finetune/submodels.hpp"

namespace emnh::eval {

/// Best greedy multi-start solution of one submodel under its weight,
/// optionally over every augmented copy. Objectives are recomputed on the
/// original instance; ties keep the earliest (augmentation, start).
ParetoPoint best_for_weight(const policy::ModelConfig& config, const ad::ParamStore& params,
                            const decomp::WeightVector& lambda, const problems::Instance& instance,
                            const std::vector<problems::Instance>& copies);

/// Union of the per-weight best solutions, Pareto-filtered. Throws
/// UsageError when the submodels were built for another problem.
ParetoSet solve_instance(const finetune::SubmodelSet& submodels, const problems::Instance& instance,
                         bool use_augmentation, int threads = 1);

}  // namespace emnh::eval
