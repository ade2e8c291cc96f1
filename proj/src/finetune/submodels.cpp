#include "emnh/finetune/submodels.hpp"

#include "emnh/autodiff/checkpoint.hpp"

namespace emnh::finetune {

std::string to_string(TuneMode m) {
  switch (m) {
    case TuneMode::full: return "full";
    case TuneMode::head_only: return "head-only";
    case TuneMode::decoder_only: return "decoder-only";
  }
  return "full";
}

TuneMode parse_tune_mode(const std::string& s) {
  if (s == "full") return TuneMode::full;
  if (s == "head-only") return TuneMode::head_only;
  if (s == "decoder-only") return TuneMode::decoder_only;
  throw UsageError("unknown fine-tune mode '" + s + "' (expected full, head-only or decoder-only)");
}

bool tunable(TuneMode mode, const std::string& path) {
  switch (mode) {
    case TuneMode::full: return true;
    case TuneMode::head_only: return path == policy::kHeadPath;
    case TuneMode::decoder_only: return path.rfind("decoder.", 0) == 0;
  }
  return true;
}

SubmodelSet uniform_submodels(const policy::ModelConfig& config, const ad::ParamStore& params,
                              const decomp::WeightSet& weights) {
  SubmodelSet s;
  s.config = config;
  s.weights = weights;
  s.models.assign(weights.size(), params);
  return s;
}

namespace {

std::string model_file(std::size_t i, bool head) {
  return (head ? "head_" : "submodel_") + std::to_string(i) + ".json";
}

ad::Checkpoint wrap(const SubmodelSet& set, ad::ParamStore params, nlohmann::json meta) {
  ad::Checkpoint c;
  c.problem_kind = set.config.kind.name();
  c.hyperparameters = policy::to_json(set.config);
  c.parameters = std::move(params);
  c.metadata = std::move(meta);
  return c;
}

ad::ParamStore only(const ad::ParamStore& p, bool head) {
  ad::ParamStore out;
  for (const auto& e : p.entries())
    if ((e.path == policy::kHeadPath) == head) out.add(e.path, e.partition, e.value);
  return out;
}

}  // namespace

void save_submodels(const std::filesystem::path& dir, const SubmodelSet& set) {
  if (set.models.size() != set.weights.size()) throw DataError("submodel count does not match the weight count");
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = set.manifest;
  manifest["model"] = policy::to_json(set.config);
  manifest["mode"] = to_string(set.mode);
  manifest["weights"] = nlohmann::json::array();
  manifest["files"] = nlohmann::json::array();
  const bool heads = set.mode == TuneMode::head_only;
  for (std::size_t i = 0; i < set.size(); ++i) {
    manifest["weights"].push_back(std::vector<double>(set.weights[i].data(), set.weights[i].data() + set.weights[i].size()));
    manifest["files"].push_back(model_file(i, heads));
    nlohmann::json meta = {{"weight_index", i}};
    ad::save_checkpoint(dir / model_file(i, heads), wrap(set, heads ? only(set.models[i], true) : set.models[i], meta));
  }
  if (heads) {
    manifest["body"] = "body.json";
    ad::save_checkpoint(dir / "body.json", wrap(set, only(set.models.front(), false), {{"shared_body", true}}));
  }
  ad::write_text_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

SubmodelSet load_submodels(const std::filesystem::path& dir) {
  const auto mpath = dir / "manifest.json";
  if (!std::filesystem::exists(mpath)) throw DataError("no submodel manifest at " + mpath.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ad::read_text_file(mpath));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("manifest " + mpath.string() + " is not valid JSON: " + e.what());
  }
  SubmodelSet set;
  try {
    set.config = policy::model_config_from_json(manifest.at("model"));
    set.mode = parse_tune_mode(manifest.at("mode").get<std::string>());
    for (const auto& w : manifest.at("weights")) {
      const auto v = w.get<std::vector<double>>();
      set.weights.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    std::optional<ad::ParamStore> body;
    if (set.mode == TuneMode::head_only) body = ad::load_checkpoint(dir / manifest.at("body").get<std::string>()).parameters;
    for (const auto& f : manifest.at("files")) {
      ad::ParamStore p = ad::load_checkpoint(dir / f.get<std::string>()).parameters;
      if (body) {
        // rebuild in the original entry order: body entries with the head in place
        ad::ParamStore full;
        for (const auto& e : body->entries()) full.add(e.path, e.partition, e.value);
        full.add(policy::kHeadPath, ad::Partition::head, p.at(policy::kHeadPath));
        p = std::move(full);
      }
      set.models.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed submodel manifest: " + std::string(e.what()));
  }
  if (set.models.size() != set.weights.size()) throw DataError("manifest lists a different number of files and weights");
  for (const char* k : {"model", "mode", "weights", "files", "body"}) manifest.erase(k);
  set.manifest = std::move(manifest);
  return set;
}

}  // namespace emnh::finetune
