#pragma once

#include "emnh/evaluation/pareto.hpp"
#include "emnh/finetune/finetune.hpp"
#include "emnh/training/meta.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emnh::cli {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "EMNH_OUTPUT_ROOT";

struct FinetuneOptions {
  /// "hierarchical" or "vanilla".
  std::string method = "hierarchical";
  finetune::TuneMode tune = finetune::TuneMode::full;
  /// Das-Dennis H of the final weights; 0 = 100 for M=2, 13 for M=3.
  int weights_h = 0;
  /// 0 = smallest L with a^L >= N.
  int levels = 0;
  /// Steps per level (one value for all levels).
  std::vector<int> k{20};
  /// Vanilla steps per weight; 0 = matched to the hierarchical budget.
  int ktilde = 0;
  int batch = 64;
  double learning_rate = 1e-4;
};

struct EvalOptions {
  /// Generated test instances when no instance file is given.
  int count = 20;
  std::uint64_t instance_seed = 20240917;
  bool augment = false;
  bool oracle_compare = false;
  std::optional<Vector> reference;
  std::optional<Vector> ideal;
  /// SVG scatter for this many instances.
  int plot = 0;
};

struct Paths {
  std::filesystem::path out;
  std::filesystem::path checkpoint;
  std::filesystem::path submodels;
  std::filesystem::path instances;
  std::vector<std::filesystem::path> fronts;
};

struct RunConfig {
  std::string command;
  policy::ModelConfig model;
  train::MetaConfig meta;
  FinetuneOptions finetune;
  EvalOptions eval;
  Paths paths;
  bool resume = false;
  /// Whether --problem / --size were given (otherwise taken from checkpoints).
  bool problem_set = false;
  bool size_set = false;
};

nlohmann::json to_json(const RunConfig& c);

/// FNV-1a of the configuration without paths and thread count, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// {version, config_hash, seed}.
nlohmann::json provenance(const RunConfig& c);

/// --out, else $EMNH_OUTPUT_ROOT/<command>, else ./emnh_runs/<command>.
std::filesystem::path output_dir(const RunConfig& c);

/// Final weights of the fine-tuning stage.
decomp::WeightSet final_weights(const RunConfig& c);

/// Test instances: the instance file if given, else generated from the eval seed.
std::vector<problems::Instance> test_instances(const RunConfig& c);

/// Each command writes its artifacts under output_dir(c) and returns a
/// summary that the CLI prints.
nlohmann::json cmd_train(const RunConfig& c);
nlohmann::json cmd_finetune(const RunConfig& c);
nlohmann::json cmd_eval(const RunConfig& c);
nlohmann::json cmd_oracle(const RunConfig& c);
nlohmann::json cmd_budget(const RunConfig& c);
nlohmann::json cmd_plot(const RunConfig& c);

/// Parses arguments, runs the command and maps errors onto exit codes
/// (0 success, 2 usage, 3 data, 4 numeric).
int run_cli(int argc, const char* const* argv);

/// Pareto front as CSV with provenance comment lines.
std::string front_csv(const eval::ParetoSet& front, const nlohmann::json& provenance);
std::vector<Vector> read_front_csv(const std::filesystem::path& path);

/// Static scatter plot: one panel for M=2, three pairwise panels for M=3.
std::string svg_scatter(const std::vector<std::vector<Vector>>& fronts, const std::vector<std::string>& labels,
                        const std::string& title, const nlohmann::json& provenance);

}  // namespace emnh::cli
