#include "emnh/training/reinforce.hpp"

#include "emnh/core/parallel.hpp"

#include <numeric>

namespace emnh::train {

using policy::DecodeMode;
using policy::RolloutOptions;

double shared_baseline(const std::vector<double>& costs) {
  if (costs.empty()) throw UsageError("baseline of an empty rollout set");
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

std::vector<Task> multitask_tasks(const decomp::WeightSet& weights) {
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < weights.size(); ++i)
    tasks.push_back({policy::task_head_path(static_cast<int>(i)), weights[i]});
  return tasks;
}

namespace {

struct InstanceGradient {
  ad::NamedTensors grads;
  std::vector<TaskSample> samples;
  double loss = 0.0;
};

InstanceGradient instance_gradient(const ModelConfig& cfg, const ad::ParamStore& params,
                                   const std::vector<Task>& tasks, const Instance& inst, double norm,
                                   std::uint64_t seed) {
  ad::Tape tape;
  Rng rng(seed);
  const auto enc = policy::encode(tape, cfg, params, inst);
  const Sense sense = inst.kind.sense();
  InstanceGradient out;
  ad::Var loss = tape.constant(ad::Tensor::Zero(1, 1));
  for (const auto& task : tasks) {
    RolloutOptions opt;
    opt.mode = DecodeMode::sample;
    opt.head_path = task.head_path;
    opt.rng = &rng;
    const auto ms = policy::rollout_multistart(tape, cfg, params, enc, inst, opt);
    std::vector<double> costs;
    for (const auto& r : ms.rollouts) costs.push_back(decomp::weighted_sum(r.objectives, task.lambda, sense));
    const double b = shared_baseline(costs);
    TaskSample s;
    s.mean_cost = b;
    const double scale = norm / static_cast<double>(costs.size());
    for (std::size_t k = 0; k < costs.size(); ++k) {
      s.actions.push_back(ms.rollouts[k].actions);
      s.coefficients.push_back((costs[k] - b) * scale);
    }
    loss = ad::add(loss, policy::weighted_log_likelihood(tape, ms, s.coefficients));
    out.samples.push_back(std::move(s));
  }
  out.loss = loss.value()(0, 0);
  tape.backward(loss);
  out.grads = tape.gradients(params);
  return out;
}

ad::Var forced_instance_loss(ad::Tape& tape, const ModelConfig& cfg, const ad::ParamStore& params,
                             const std::vector<Task>& tasks, const Instance& inst,
                             const std::vector<TaskSample>& samples) {
  const auto enc = policy::encode(tape, cfg, params, inst);
  ad::Var loss = tape.constant(ad::Tensor::Zero(1, 1));
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    RolloutOptions opt;
    opt.mode = DecodeMode::forced;
    opt.head_path = tasks[i].head_path;
    opt.forced = &samples[i].actions;
    const auto ms = policy::rollout_multistart(tape, cfg, params, enc, inst, opt);
    loss = ad::add(loss, policy::weighted_log_likelihood(tape, ms, samples[i].coefficients));
  }
  return loss;
}

}  // namespace

GradientResult reinforce_gradient(const ModelConfig& config, const ad::ParamStore& params,
                                  const std::vector<Task>& tasks, const std::vector<Instance>& batch,
                                  std::uint64_t seed, int threads) {
  if (tasks.empty()) throw UsageError("reinforce_gradient needs at least one task");
  if (batch.empty()) throw UsageError("reinforce_gradient needs at least one instance");
  const double norm = 1.0 / (static_cast<double>(tasks.size()) * static_cast<double>(batch.size()));
  std::vector<InstanceGradient> parts(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    parts[b] = instance_gradient(config, params, tasks, batch[b], norm, derive_seed(seed, {b}));
  });

  GradientResult out;
  out.grads = params.zeros_like();
  out.mean_cost.assign(tasks.size(), 0.0);
  for (auto& part : parts) {
    for (auto& [path, g] : out.grads) g += part.grads.at(path);
    for (std::size_t i = 0; i < tasks.size(); ++i)
      out.mean_cost[i] += part.samples[i].mean_cost / static_cast<double>(batch.size());
    out.loss += part.loss;
    out.samples.push_back(std::move(part.samples));
  }
  for (const auto& [path, g] : out.grads)
    if (!g.allFinite()) throw NumericError("non-finite gradient for parameter " + path);
  return out;
}

ad::Var frozen_surrogate(ad::Tape& tape, const ModelConfig& config, const ad::ParamStore& params,
                         const std::vector<Task>& tasks, const std::vector<Instance>& batch,
                         const std::vector<std::vector<TaskSample>>& samples) {
  if (samples.size() != batch.size()) throw ShapeError("one sample set per instance is required");
  ad::Var total = tape.constant(ad::Tensor::Zero(1, 1));
  for (std::size_t b = 0; b < batch.size(); ++b)
    total = ad::add(total, forced_instance_loss(tape, config, params, tasks, batch[b], samples[b]));
  return total;
}

}  // namespace emnh::train
