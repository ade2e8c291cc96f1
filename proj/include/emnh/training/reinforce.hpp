#pragma once

#include "emnh/decomposition/weights.hpp"
#include "emnh/policy/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emnh::train {

using policy::Instance;
using policy::ModelConfig;

/// Mean scalarized cost of the multi-start rollouts of one instance.
double shared_baseline(const std::vector<double>& costs);

/// One subproblem: a weight vector decoded through the head at `head_path`.
struct Task {
  std::string head_path = policy::kHeadPath;
  decomp::WeightVector lambda;
};

/// Tasks for a multi-task model: weight i uses head task_head_path(i).
std::vector<Task> multitask_tasks(const decomp::WeightSet& weights);

/// Sampled actions of one task on one instance and the loss coefficient
/// (g - b) / (Ntilde * B * n) of each rollout.
struct TaskSample {
  std::vector<std::vector<int>> actions;
  std::vector<double> coefficients;
  double mean_cost = 0.0;
};

struct GradientResult {
  ad::NamedTensors grads;
  /// Mean scalarized cost per task over the batch and starts.
  std::vector<double> mean_cost;
  /// [instance][task].
  std::vector<std::vector<TaskSample>> samples;
  double loss = 0.0;
};

/// Gradient of sum over tasks, instances and starts of (g - b) log P,
/// normalised by Ntilde * B * n, with actions sampled from the policy.
/// Instance b samples with Rng(derive_seed(seed, {b})). The per-instance
/// gradients are summed in instance order whatever the thread count.
GradientResult reinforce_gradient(const ModelConfig& config, const ad::ParamStore& params,
                                  const std::vector<Task>& tasks, const std::vector<Instance>& batch,
                                  std::uint64_t seed, int threads = 1);

/// The same surrogate loss with actions and coefficients frozen to `samples`.
ad::Var frozen_surrogate(ad::Tape& tape, const ModelConfig& config, const ad::ParamStore& params,
                         const std::vector<Task>& tasks, const std::vector<Instance>& batch,
                         const std::vector<std::vector<TaskSample>>& samples);

}  // namespace emnh::train
