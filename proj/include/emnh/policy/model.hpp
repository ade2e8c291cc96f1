#pragma once

#include "emnh/autodiff/tape.hpp"
#include "emnh/core/rng.hpp"
#include "emnh/problems/env.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace emnh::policy {

using ad::ParamStore;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using problems::Instance;
using problems::ProblemKind;

enum class GraphPooling { mean, sum };

struct ModelConfig {
  ProblemKind kind;
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 4;
  /// Feed-forward hidden width; 0 means 4 * d_model.
  int ff_hidden = 0;
  double clip = 10.0;
  GraphPooling pooling = GraphPooling::mean;

  int ff_width() const { return ff_hidden > 0 ? ff_hidden : 4 * d_model; }
  int context_dim() const;
  /// Throws UsageError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Path of the final key projection W^K, the only head parameter.
inline const std::string kHeadPath = "decoder.wk";
/// Path of head i in a multi-task parameter set.
std::string task_head_path(int i);

/// Fresh parameters, uniform in +-1/sqrt(fan_in); batch-norm scales 1 and shifts 0.
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

/// Node embeddings of one instance plus the per-instance decoder projections.
struct Encoded {
  /// action_count x d (mocvrp: depot row first).
  Var nodes;
  /// 1 x d.
  Var graph;
  /// Glimpse keys and values, action_count x d.
  Var glimpse_keys;
  Var glimpse_values;
};

Encoded encode(Tape& tape, const ModelConfig& config, const ParamStore& params, const Instance& instance);

/// One context row per state: motsp [graph; last; first], mocvrp
/// [graph; last; remaining], mokp [graph; remaining].
Var context_embedding(Tape& tape, const ModelConfig& config, const Encoded& enc, const Instance& instance,
                      const std::vector<const problems::DecodeState*>& states);

/// Additive mask rows (0 or kMaskedLogit) for a set of states. Throws
/// DataError if a state has no selectable action.
Tensor additive_mask(const Instance& instance, const std::vector<const problems::DecodeState*>& states);

struct StepOutput {
  /// rows x action_count probabilities.
  Var probabilities;
  /// Clipped compatibilities before masking.
  Var compatibility;
};

/// Query from the glimpse attention over the context, keys from the head at
/// `head_path`, clipped compatibility, masked softmax.
StepOutput decode_step(Tape& tape, const ModelConfig& config, const ParamStore& params, const Encoded& enc,
                       Var context, const Tensor& mask, const std::string& head_path = kHeadPath);

/// Per-task step outputs for task heads `task_head_path(i)` sharing one encoding.
std::vector<StepOutput> multi_task_decode_step(Tape& tape, const ModelConfig& config, const ParamStore& params,
                                               const Encoded& enc, const std::vector<Var>& contexts,
                                               const std::vector<Tensor>& masks);

/// Shared body plus Ntilde heads initialised from the meta head.
struct MultiTaskParams {
  ParamStore params;
  int ntilde = 0;
};

MultiTaskParams build_multitask(const ParamStore& meta, int ntilde);

enum class DecodeMode { sample, greedy, forced };

struct Rollout {
  int start = 0;
  /// Full action sequence; the forced prefix is included.
  std::vector<int> actions;
  Vector objectives;
  /// Sum of log-probabilities of the decoded (non-forced) actions.
  double log_likelihood = 0.0;
};

/// Log-probabilities of the chosen actions at one decoding step, for the
/// rollouts listed in `rows` (indices into MultiStart::rollouts).
struct StepLog {
  std::vector<int> rows;
  Var log_p;
};

struct MultiStart {
  std::vector<Rollout> rollouts;
  std::vector<StepLog> steps;
  /// Start indices that could not begin a rollout (overweight mokp items).
  std::vector<int> skipped_starts;
};

struct RolloutOptions {
  DecodeMode mode = DecodeMode::greedy;
  std::string head_path = kHeadPath;
  /// Required for sample mode.
  Rng* rng = nullptr;
  /// Required for forced mode: full action sequences per feasible start, in start order.
  const std::vector<std::vector<int>>* forced = nullptr;
};

/// One rollout per start decoded as a batch on `tape`.
MultiStart rollout_multistart(Tape& tape, const ModelConfig& config, const ParamStore& params, const Encoded& enc,
                              const Instance& instance, const RolloutOptions& options);

/// Convenience: encodes and decodes on a private tape without gradients.
MultiStart rollout_multistart(const ModelConfig& config, const ParamStore& params, const Instance& instance,
                              const RolloutOptions& options);

/// sum_k weight_k * log P(rollout k) as a 1 x 1 node.
Var weighted_log_likelihood(Tape& tape, const MultiStart& result, const std::vector<double>& weights);

}  // namespace emnh::policy
