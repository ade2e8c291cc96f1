#pragma once

#include "emnh/autodiff/adam.hpp"
#include "emnh/autodiff/checkpoint.hpp"
#include "emnh/training/reinforce.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace emnh::train {

enum class SamplingMode { random, symmetric, scaled };

std::string to_string(SamplingMode m);
/// "random", "symmetric" or "scaled". Throws UsageError.
SamplingMode parse_sampling_mode(const std::string& s);

/// Seed of the fixed validation instances, shared by every run.
inline constexpr std::uint64_t kValidationSeed = 0x5eedba5e;

struct MetaConfig {
  int tm = 3000;
  int tu = 100;
  int batch = 64;
  /// 0 means M.
  int ntilde = 0;
  double eps0 = 1.0;
  SamplingMode sampling = SamplingMode::scaled;
  std::uint64_t seed = 1;
  double learning_rate = 1e-4;
  /// Problem size of the training instances.
  int n = 20;
  /// Overrides the default vehicle or knapsack capacity.
  std::optional<double> capacity;
  /// f' is re-estimated every this many meta-iterations (scaled sampling only).
  int scale_every = 1;
  decomp::ScalePick scale_pick = decomp::ScalePick::best;
  int validation_size = 32;
  /// Validation HV ratio every this many iterations and at the end; 0 disables it.
  int hv_every = 0;
  /// Das-Dennis H of the validation weights.
  int hv_weights_h = 10;
  /// Checkpoint every this many iterations (and at the end) when a directory is set.
  int checkpoint_every = 0;
  int threads = 1;

  int resolved_ntilde(int M) const { return ntilde > 0 ? ntilde : M; }
  /// Throws UsageError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const MetaConfig& c);
MetaConfig meta_config_from_json(const nlohmann::json& j);

/// Meta-learning rate of iteration t (1-based): eps0 * (1 - (t - 1) / tm).
double epsilon_at(const MetaConfig& c, int t);

struct InnerConfig {
  int steps = 0;
  int batch = 1;
  int n = 0;
  std::optional<double> capacity;
  int threads = 1;
};

struct InnerResult {
  /// [step][task] mean scalarized cost.
  std::vector<std::vector<double>> costs;
};

/// `steps` Adam updates of `params` on fresh batches. Step s (1-based) draws
/// instances from derive_seed(seed, {s, 1}) and actions from derive_seed(seed, {s, 2}).
InnerResult inner_loop(const ModelConfig& config, ad::ParamStore& params, const std::vector<Task>& tasks,
                       const InnerConfig& inner, ad::AdamState& adam, std::uint64_t seed,
                       const ad::TrainablePredicate& trainable = {});

/// Copies the multi-task body into `meta` and moves its head toward the mean
/// of the task heads by `eps`.
void meta_update(ad::ParamStore& meta, const policy::MultiTaskParams& trained, double eps);

struct LogRow {
  int iteration = 0;
  double epsilon = 0.0;
  std::vector<double> task_cost;
  Vector scale;
  std::vector<Vector> weights;
  std::optional<double> val_hv_ratio;
  /// Not persisted in checkpoints.
  std::optional<double> wall_seconds;
};

struct TrainLog {
  std::optional<double> initial_val_hv_ratio;
  std::vector<LogRow> rows;
};

nlohmann::json to_json(const TrainLog& log);
TrainLog train_log_from_json(const nlohmann::json& j);
/// iteration, epsilon, cost_i..., fprime_m..., val_hv_ratio, wall_seconds.
std::string train_log_csv(const TrainLog& log);

/// f' from greedy multi-start rollouts of the meta-model on `validation`.
Vector estimate_scale(const ModelConfig& config, const ad::ParamStore& params,
                      const std::vector<Instance>& validation, decomp::ScalePick pick, int threads = 1);

/// Mean HV ratio of the meta-model's fronts (one greedy solution per weight)
/// against the bundled reference points.
double validation_hv_ratio(const ModelConfig& config, const ad::ParamStore& params,
                           const std::vector<Instance>& validation, const decomp::WeightSet& weights,
                           int threads = 1);

struct TrainOptions {
  /// Periodic checkpoints go here as meta_<t>.json plus meta_latest.json.
  std::filesystem::path checkpoint_dir;
  /// Continue from checkpoint_dir/meta_latest.json.
  bool resume = false;
  /// Stop after this iteration (0 = run to tm); used to emulate interruption.
  int stop_after = 0;
  /// Copied into every checkpoint's metadata.
  nlohmann::json provenance = nlohmann::json::object();
  std::function<void(const LogRow&)> on_iteration;
};

struct MetaResult {
  ad::ParamStore meta;
  TrainLog log;
  decomp::ScaleEstimate scale;
  int completed = 0;
};

MetaResult meta_train(const ModelConfig& model, const MetaConfig& meta, const TrainOptions& options = {});

/// Checkpoint holding the meta-model and everything needed to resume.
ad::Checkpoint make_meta_checkpoint(const ModelConfig& model, const MetaConfig& meta, const MetaResult& state,
                                    const nlohmann::json& provenance);

}  // namespace emnh::train
