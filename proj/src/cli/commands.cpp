#include "emnh/cli/commands.hpp"

#include "emnh/build_info.hpp"
#include "emnh/evaluation/oracle.hpp"
#include "emnh/evaluation/reference.hpp"
#include "emnh/evaluation/solve.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emnh::cli {

namespace {

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  ad::write_text_file(path, j.dump(1) + "\n");
}

struct Reference {
  Vector reference, ideal;
};

Reference reference_for(const RunConfig& c, const problems::ProblemKind& kind, int n) {
  Reference r;
  if (c.eval.reference && c.eval.ideal) {
    r.reference = *c.eval.reference;
    r.ideal = *c.eval.ideal;
  } else {
    const auto table = eval::reference_points(kind, n);
    r.reference = c.eval.reference ? *c.eval.reference : table.reference;
    r.ideal = c.eval.ideal ? *c.eval.ideal : table.ideal;
  }
  if (r.reference.size() != kind.M || r.ideal.size() != kind.M)
    throw UsageError("reference and ideal points need " + std::to_string(kind.M) + " components");
  return r;
}

// Points beyond the reference point are dropped from the HV computation.
std::vector<Vector> within(const std::vector<Vector>& front, const Vector& ref, Sense sense, int& dropped) {
  std::vector<Vector> kept;
  for (const auto& f : front) {
    const bool ok = sense == Sense::minimize ? (f.array() <= ref.array()).all() : (f.array() >= ref.array()).all();
    if (ok)
      kept.push_back(f);
    else
      ++dropped;
  }
  return kept;
}

ad::Checkpoint require_checkpoint(const RunConfig& c) {
  if (c.paths.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (!std::filesystem::exists(c.paths.checkpoint))
    throw DataError("checkpoint " + c.paths.checkpoint.string() + " does not exist");
  return ad::load_checkpoint(c.paths.checkpoint);
}

policy::ModelConfig model_of(const ad::Checkpoint& ck) {
  if (ck.hyperparameters.contains("model")) return policy::model_config_from_json(ck.hyperparameters.at("model"));
  return policy::model_config_from_json(ck.hyperparameters);
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json ft = {{"method", c.finetune.method},
                       {"tune", finetune::to_string(c.finetune.tune)},
                       {"weights_h", c.finetune.weights_h},
                       {"levels", c.finetune.levels},
                       {"k", c.finetune.k},
                       {"ktilde", c.finetune.ktilde},
                       {"batch", c.finetune.batch},
                       {"learning_rate", c.finetune.learning_rate}};
  nlohmann::json ev = {{"count", c.eval.count},
                       {"instance_seed", c.eval.instance_seed},
                       {"augment", c.eval.augment},
                       {"oracle_compare", c.eval.oracle_compare},
                       {"reference", c.eval.reference ? vec_json(*c.eval.reference) : nlohmann::json(nullptr)},
                       {"ideal", c.eval.ideal ? vec_json(*c.eval.ideal) : nlohmann::json(nullptr)},
                       {"plot", c.eval.plot}};
  nlohmann::json paths = {{"out", c.paths.out.string()},
                          {"checkpoint", c.paths.checkpoint.string()},
                          {"submodels", c.paths.submodels.string()},
                          {"instances", c.paths.instances.string()}};
  paths["fronts"] = nlohmann::json::array();
  for (const auto& f : c.paths.fronts) paths["fronts"].push_back(f.string());
  return {{"command", c.command}, {"model", policy::to_json(c.model)},     {"meta", train::to_json(c.meta)},
          {"finetune", ft},       {"eval", ev},                            {"paths", paths},
          {"resume", c.resume},   {"threads", c.meta.threads}};
}

std::string config_hash(const RunConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("paths");
  j.erase("threads");
  j.erase("resume");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json provenance(const RunConfig& c) {
  return {{"version", build_info::version}, {"config_hash", config_hash(c)}, {"seed", c.meta.seed}};
}

std::filesystem::path output_dir(const RunConfig& c) {
  if (!c.paths.out.empty()) return c.paths.out;
  const char* root = std::getenv(kOutputRootEnv);
  return std::filesystem::path(root && *root ? root : "emnh_runs") / c.command;
}

decomp::WeightSet final_weights(const RunConfig& c) {
  const int M = c.model.kind.M;
  const int H = c.finetune.weights_h > 0 ? c.finetune.weights_h : (M == 2 ? 100 : 13);
  return decomp::das_dennis_weights(M, H);
}

std::vector<problems::Instance> test_instances(const RunConfig& c) {
  if (!c.paths.instances.empty()) {
    if (!std::filesystem::exists(c.paths.instances))
      throw DataError("instance file " + c.paths.instances.string() + " does not exist");
    return problems::load_instances(c.paths.instances);
  }
  if (c.eval.count < 1) throw UsageError("--count must be >= 1");
  return problems::generate_instances(c.model.kind, c.meta.n, c.eval.instance_seed, c.eval.count, c.meta.capacity);
}

nlohmann::json cmd_train(const RunConfig& c) {
  if (!c.problem_set) throw UsageError("--problem is required for train");
  const auto out = output_dir(c);
  std::filesystem::create_directories(out);
  const auto prov = provenance(c);
  train::TrainOptions opt;
  opt.checkpoint_dir = out / "checkpoints";
  opt.resume = c.resume;
  opt.provenance = prov;
  const auto t0 = std::chrono::steady_clock::now();
  auto result = train::meta_train(c.model, c.meta, opt);
  ad::save_checkpoint(out / "meta.json", train::make_meta_checkpoint(c.model, c.meta, result, prov));
  std::string csv = "# version=" + std::string(build_info::version) + " config_hash=" + prov["config_hash"].get<std::string>() +
                    " seed=" + std::to_string(c.meta.seed) + "\n" + train::train_log_csv(result.log);
  ad::write_text_file(out / "train_log.csv", csv);
  nlohmann::json run = {{"provenance", prov}, {"config", to_json(c)}};
  write_json(out / "run.json", run);
  nlohmann::json summary = {{"checkpoint", (out / "meta.json").string()},
                            {"iterations", result.completed},
                            {"config_hash", prov["config_hash"]},
                            {"runtime_seconds", seconds_since(t0)}};
  if (result.log.initial_val_hv_ratio) summary["initial_val_hv_ratio"] = *result.log.initial_val_hv_ratio;
  if (!result.log.rows.empty() && result.log.rows.back().val_hv_ratio)
    summary["final_val_hv_ratio"] = *result.log.rows.back().val_hv_ratio;
  return summary;
}

nlohmann::json cmd_finetune(const RunConfig& c) {
  const auto ck = require_checkpoint(c);
  RunConfig rc = c;
  rc.model = model_of(ck);
  if (ck.hyperparameters.contains("meta")) {
    const auto trained = train::meta_config_from_json(ck.hyperparameters.at("meta"));
    if (!c.size_set) rc.meta.n = trained.n;
    if (!rc.meta.capacity) rc.meta.capacity = trained.capacity;
  }
  const int M = rc.model.kind.M;
  const auto weights = final_weights(rc);
  finetune::FinetuneConfig ft;
  ft.batch = c.finetune.batch;
  ft.n = rc.meta.n;
  ft.capacity = rc.meta.capacity;
  ft.mode = c.finetune.tune;
  ft.learning_rate = c.finetune.learning_rate;
  ft.seed = c.meta.seed;
  ft.threads = c.meta.threads;
  if (c.finetune.k.empty()) throw UsageError("--k needs at least one value");
  for (int k : c.finetune.k)
    if (k < 0) throw UsageError("--k values must be >= 0");

  const auto t0 = std::chrono::steady_clock::now();
  finetune::SubmodelSet set;
  const int a = finetune::sections(M);
  const int N = static_cast<int>(weights.size());
  const int L = c.finetune.levels > 0 ? c.finetune.levels : finetune::default_levels(M, N);
  if (c.finetune.method == "hierarchical") {
    const auto h = finetune::build_hierarchy(M, weights, L);
    set = finetune::hierarchical_finetune(rc.model, ck.parameters, h, c.finetune.k, ft);
  } else if (c.finetune.method == "vanilla") {
    const int kt = c.finetune.ktilde > 0 ? c.finetune.ktilde : finetune::step_budget(a, L, N, c.finetune.k.back()).matched_ktilde;
    set = finetune::vanilla_finetune(rc.model, ck.parameters, weights, kt, ft);
  } else {
    throw UsageError("unknown fine-tune method '" + c.finetune.method + "' (expected hierarchical or vanilla)");
  }
  set.manifest["provenance"] = provenance(rc);
  set.manifest["source_checkpoint"] = c.paths.checkpoint.filename().string();
  set.manifest["training_size"] = rc.meta.n;
  const auto dir = c.paths.submodels.empty() ? output_dir(c) / "submodels" : c.paths.submodels;
  finetune::save_submodels(dir, set);
  return {{"submodels", dir.string()},
          {"method", c.finetune.method},
          {"weights", N},
          {"budget", set.manifest["budget"]},
          {"runtime_seconds", seconds_since(t0)}};
}

nlohmann::json cmd_eval(const RunConfig& c) {
  finetune::SubmodelSet set;
  RunConfig rc = c;
  if (!c.paths.submodels.empty()) {
    set = finetune::load_submodels(c.paths.submodels);
    rc.model = set.config;
    if (!c.size_set && set.manifest.contains("training_size")) rc.meta.n = set.manifest["training_size"].get<int>();
  } else if (!c.paths.checkpoint.empty()) {
    const auto ck = require_checkpoint(c);
    rc.model = model_of(ck);
    if (!c.size_set && ck.hyperparameters.contains("meta"))
      rc.meta.n = train::meta_config_from_json(ck.hyperparameters.at("meta")).n;
    set = finetune::uniform_submodels(rc.model, ck.parameters, final_weights(rc));
  } else {
    throw UsageError("eval needs --submodels or --checkpoint");
  }
  if (c.problem_set && !(c.model.kind == rc.model.kind))
    throw UsageError("submodels were trained for " + rc.model.kind.name() + " but --problem is " + c.model.kind.name());

  const auto instances = test_instances(rc);
  const auto out = output_dir(c);
  std::filesystem::create_directories(out / "fronts");
  const auto prov = provenance(c);
  const Sense sense = rc.model.kind.sense();
  const auto t_all = std::chrono::steady_clock::now();

  nlohmann::json rows = nlohmann::json::array();
  double sum_hv = 0.0, sum_ratio = 0.0, sum_gap = 0.0, sum_oracle = 0.0;
  std::vector<std::vector<Vector>> plot_fronts;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto ref = reference_for(c, inst.kind, inst.n);
    const auto t0 = std::chrono::steady_clock::now();
    const auto front = eval::solve_instance(set, inst, c.eval.augment, c.meta.threads);
    const double runtime = seconds_since(t0);
    int dropped = 0;
    const auto kept = within(front.objectives(), ref.reference, sense, dropped);
    const double hv = eval::hypervolume(kept, ref.reference, sense);
    const double ratio = eval::hv_ratio(kept, ref.reference, ref.ideal, sense);
    nlohmann::json row = {{"index", i},        {"points", front.size()}, {"dropped_points", dropped},
                          {"hv", hv},          {"hv_ratio", ratio},      {"runtime_seconds", runtime}};
    if (c.eval.oracle_compare) {
      const auto exact = eval::brute_force_pareto(inst);
      int odrop = 0;
      const auto okept = within(exact.objectives(), ref.reference, sense, odrop);
      const double ohv = eval::hypervolume(okept, ref.reference, sense);
      row["oracle_hv"] = ohv;
      row["oracle_hv_ratio"] = eval::hv_ratio(okept, ref.reference, ref.ideal, sense);
      row["oracle_points"] = exact.size();
      row["gap"] = eval::gap(hv, ohv);
      sum_gap += row["gap"].get<double>();
      sum_oracle += row["oracle_hv_ratio"].get<double>();
    }
    ad::write_text_file(out / "fronts" / ("front_" + std::to_string(i) + ".csv"), front_csv(front, prov));
    if (static_cast<int>(i) < c.eval.plot) {
      ad::write_text_file(out / ("front_" + std::to_string(i) + ".svg"),
                          svg_scatter({front.objectives()}, {"instance " + std::to_string(i)},
                                      rc.model.kind.name() + " n=" + std::to_string(inst.n) + " instance " + std::to_string(i),
                                      prov));
    }
    sum_hv += hv;
    sum_ratio += ratio;
    rows.push_back(std::move(row));
  }
  const double count = static_cast<double>(instances.size());
  nlohmann::json results = {{"provenance", prov},
                            {"problem", rc.model.kind.name()},
                            {"objectives", rc.model.kind.M},
                            {"augment", c.eval.augment},
                            {"submodels", set.size()},
                            {"instances", rows},
                            {"mean_hv", sum_hv / count},
                            {"mean_hv_ratio", sum_ratio / count},
                            {"runtime_seconds", seconds_since(t_all)}};
  if (c.eval.oracle_compare) {
    results["mean_gap"] = sum_gap / count;
    results["mean_oracle_hv_ratio"] = sum_oracle / count;
  }
  write_json(out / "results.json", results);
  nlohmann::json summary = {{"results", (out / "results.json").string()},
                            {"mean_hv", results["mean_hv"]},
                            {"mean_hv_ratio", results["mean_hv_ratio"]}};
  if (c.eval.oracle_compare) summary["mean_oracle_hv_ratio"] = results["mean_oracle_hv_ratio"];
  return summary;
}

nlohmann::json cmd_oracle(const RunConfig& c) {
  if (!c.problem_set && c.paths.instances.empty()) throw UsageError("oracle needs --problem or --instances");
  const auto instances = test_instances(c);
  const auto out = output_dir(c);
  std::filesystem::create_directories(out / "fronts");
  const auto prov = provenance(c);
  nlohmann::json rows = nlohmann::json::array();
  double sum_ratio = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto exact = eval::brute_force_pareto(inst);
    const auto ref = reference_for(c, inst.kind, inst.n);
    int dropped = 0;
    const auto kept = within(exact.objectives(), ref.reference, inst.kind.sense(), dropped);
    const double ratio = eval::hv_ratio(kept, ref.reference, ref.ideal, inst.kind.sense());
    rows.push_back({{"index", i},
                    {"points", exact.size()},
                    {"dropped_points", dropped},
                    {"hv", eval::hypervolume(kept, ref.reference, inst.kind.sense())},
                    {"hv_ratio", ratio}});
    sum_ratio += ratio;
    ad::write_text_file(out / "fronts" / ("oracle_" + std::to_string(i) + ".csv"), front_csv(exact, prov));
  }
  nlohmann::json result = {{"provenance", prov},
                           {"instances", rows},
                           {"mean_hv_ratio", sum_ratio / static_cast<double>(instances.size())}};
  write_json(out / "oracle.json", result);
  return {{"results", (out / "oracle.json").string()}, {"mean_hv_ratio", result["mean_hv_ratio"]}};
}

nlohmann::json cmd_budget(const RunConfig& c) {
  const int M = c.model.kind.M;
  const int N = static_cast<int>(final_weights(c).size());
  const int a = finetune::sections(M);
  const int L = c.finetune.levels > 0 ? c.finetune.levels : finetune::default_levels(M, N);
  if (c.finetune.k.empty()) throw UsageError("--k needs at least one value");
  auto b = finetune::to_json(finetune::step_budget(a, L, N, c.finetune.k.back()));
  if (c.finetune.k.size() > 1) b["exact_hierarchical"] = finetune::exact_budget(a, N, c.finetune.k);
  if (c.finetune.ktilde > 0) b["vanilla_total"] = static_cast<long long>(N) * c.finetune.ktilde;
  b["M"] = M;
  b["N"] = N;
  b["a"] = a;
  b["L"] = L;
  b["k"] = c.finetune.k;
  return b;
}

nlohmann::json cmd_plot(const RunConfig& c) {
  if (c.paths.fronts.empty()) throw UsageError("plot needs at least one --fronts CSV file");
  std::vector<std::vector<Vector>> fronts;
  std::vector<std::string> labels;
  for (const auto& p : c.paths.fronts) {
    fronts.push_back(read_front_csv(p));
    labels.push_back(p.stem().string());
  }
  const auto out = output_dir(c);
  std::filesystem::create_directories(out);
  const auto path = out / "plot.svg";
  ad::write_text_file(path, svg_scatter(fronts, labels, "Pareto fronts", provenance(c)));
  return {{"plot", path.string()}};
}

std::string front_csv(const eval::ParetoSet& front, const nlohmann::json& prov) {
  std::ostringstream os;
  os << "# version=" << prov.value("version", "") << " config_hash=" << prov.value("config_hash", "")
     << " seed=" << prov.value("seed", 0ULL) << "\n";
  const Eigen::Index M = front.points.empty() ? 0 : front.points.front().f.size();
  for (Eigen::Index m = 0; m < M; ++m) os << (m ? "," : "") << "f" << m + 1;
  if (M == 0) os << "f1";
  os << ",weight_index,augmentation,start,sequence\n";
  for (const auto& p : front.points) {
    for (Eigen::Index m = 0; m < M; ++m) os << (m ? "," : "") << fmt(p.f(m));
    os << ',' << p.weight_index << ',' << p.augmentation << ',' << p.start << ',';
    for (std::size_t j = 0; j < p.sequence.size(); ++j) os << (j ? " " : "") << p.sequence[j];
    os << '\n';
  }
  return os.str();
}

std::vector<Vector> read_front_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read front file " + path.string());
  std::string line;
  int M = -1;
  std::vector<Vector> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (M < 0) {
      M = 0;
      while (M < static_cast<int>(cells.size()) && cells[static_cast<std::size_t>(M)] == "f" + std::to_string(M + 1)) ++M;
      if (M == 0) throw DataError(path.string() + ": header must start with f1");
      continue;
    }
    if (static_cast<int>(cells.size()) < M) throw DataError(path.string() + ":" + std::to_string(lineno) + ": too few columns");
    Vector f(M);
    for (int m = 0; m < M; ++m) {
      try {
        f(m) = std::stod(cells[static_cast<std::size_t>(m)]);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": not a number");
      }
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace emnh::cli
