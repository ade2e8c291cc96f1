#pragma once

#include "emnh/decomposition/weights.hpp"
#include "emnh/policy/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace emnh::finetune {

/// Which parameters fine-tuning may change.
enum class TuneMode { full, head_only, decoder_only };

std::string to_string(TuneMode m);
/// "full", "head-only" or "decoder-only". Throws UsageError.
TuneMode parse_tune_mode(const std::string& s);

/// Trainable-parameter predicate for a mode.
bool tunable(TuneMode mode, const std::string& path);

/// One specialised model per final weight vector.
struct SubmodelSet {
  policy::ModelConfig config;
  decomp::WeightSet weights;
  std::vector<ad::ParamStore> models;
  TuneMode mode = TuneMode::full;
  /// Budget report, lineage and provenance.
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return weights.size(); }
};

/// The same parameters for every weight (an untuned meta-model).
SubmodelSet uniform_submodels(const policy::ModelConfig& config, const ad::ParamStore& params,
                              const decomp::WeightSet& weights);

/// Directory with manifest.json and one checkpoint per submodel; head-only
/// sets store a shared body plus one head file per weight.
void save_submodels(const std::filesystem::path& dir, const SubmodelSet& set);
SubmodelSet load_submodels(const std::filesystem::path& dir);

}  // namespace emnh::finetune
