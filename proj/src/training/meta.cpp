#include "emnh/training/meta.hpp"

#include "emnh/core/parallel.hpp"
#include "emnh/evaluation/reference.hpp"
#include "emnh/evaluation/solve.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace emnh::train {

std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::random: return "random";
    case SamplingMode::symmetric: return "symmetric";
    case SamplingMode::scaled: return "scaled";
  }
  return "scaled";
}

SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "random") return SamplingMode::random;
  if (s == "symmetric") return SamplingMode::symmetric;
  if (s == "scaled") return SamplingMode::scaled;
  throw UsageError("unknown sampling mode '" + s + "' (expected random, symmetric or scaled)");
}

void MetaConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw UsageError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(tm, "tm");
  positive(tu, "tu");
  positive(batch, "batch");
  positive(n, "size");
  positive(scale_every, "scale_every");
  positive(validation_size, "validation_size");
  positive(hv_weights_h, "hv_weights_h");
  positive(threads, "threads");
  if (ntilde < 0) throw UsageError("ntilde must be >= 1 (or 0 for M), got " + std::to_string(ntilde));
  if (!(eps0 > 0.0)) throw UsageError("eps0 must be > 0");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (hv_every < 0) throw UsageError("hv_every must be >= 0");
  if (checkpoint_every < 0) throw UsageError("checkpoint_every must be >= 0");
  if (capacity && !(*capacity > 0.0)) throw UsageError("capacity must be > 0");
}

nlohmann::json to_json(const MetaConfig& c) {
  return {{"tm", c.tm},
          {"tu", c.tu},
          {"batch", c.batch},
          {"ntilde", c.ntilde},
          {"eps0", c.eps0},
          {"sampling", to_string(c.sampling)},
          {"seed", c.seed},
          {"learning_rate", c.learning_rate},
          {"n", c.n},
          {"capacity", c.capacity ? nlohmann::json(*c.capacity) : nlohmann::json(nullptr)},
          {"scale_every", c.scale_every},
          {"scale_pick", c.scale_pick == decomp::ScalePick::best ? "best" : "worst"},
          {"validation_size", c.validation_size},
          {"hv_every", c.hv_every},
          {"hv_weights_h", c.hv_weights_h},
          {"checkpoint_every", c.checkpoint_every}};
}

MetaConfig meta_config_from_json(const nlohmann::json& j) {
  MetaConfig c;
  c.tm = j.value("tm", c.tm);
  c.tu = j.value("tu", c.tu);
  c.batch = j.value("batch", c.batch);
  c.ntilde = j.value("ntilde", c.ntilde);
  c.eps0 = j.value("eps0", c.eps0);
  c.sampling = parse_sampling_mode(j.value("sampling", to_string(c.sampling)));
  c.seed = j.value("seed", c.seed);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.n = j.value("n", c.n);
  if (j.contains("capacity") && !j["capacity"].is_null()) c.capacity = j["capacity"].get<double>();
  c.scale_every = j.value("scale_every", c.scale_every);
  c.scale_pick = j.value("scale_pick", std::string("best")) == "worst" ? decomp::ScalePick::worst : decomp::ScalePick::best;
  c.validation_size = j.value("validation_size", c.validation_size);
  c.hv_every = j.value("hv_every", c.hv_every);
  c.hv_weights_h = j.value("hv_weights_h", c.hv_weights_h);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

double epsilon_at(const MetaConfig& c, int t) {
  return c.eps0 * (1.0 - static_cast<double>(t - 1) / static_cast<double>(c.tm));
}

InnerResult inner_loop(const ModelConfig& config, ad::ParamStore& params, const std::vector<Task>& tasks,
                       const InnerConfig& inner, ad::AdamState& adam, std::uint64_t seed,
                       const ad::TrainablePredicate& trainable) {
  InnerResult out;
  for (int s = 1; s <= inner.steps; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const auto batch =
        problems::generate_instances(config.kind, inner.n, derive_seed(seed, {us, 1}), inner.batch, inner.capacity);
    auto res = reinforce_gradient(config, params, tasks, batch, derive_seed(seed, {us, 2}), inner.threads);
    ad::adam_step(params, res.grads, adam, trainable);
    out.costs.push_back(std::move(res.mean_cost));
  }
  return out;
}

void meta_update(ad::ParamStore& meta, const policy::MultiTaskParams& trained, double eps) {
  if (trained.ntilde < 1) throw ShapeError("multi-task model has no task heads");
  for (auto& e : meta.entries()) {
    if (e.partition == ad::Partition::body) {
      const auto& src = trained.params.at(e.path);
      if (src.rows() != e.value.rows() || src.cols() != e.value.cols())
        throw ShapeError("shape mismatch for body parameter " + e.path);
      e.value = src;
      continue;
    }
    ad::Tensor mean = trained.params.at(policy::task_head_path(0));
    for (int i = 1; i < trained.ntilde; ++i) mean += trained.params.at(policy::task_head_path(i));
    if (mean.rows() != e.value.rows() || mean.cols() != e.value.cols())
      throw ShapeError("shape mismatch for head parameter " + e.path);
    if (trained.ntilde > 1) mean /= static_cast<double>(trained.ntilde);
    if (eps == 1.0)
      e.value = mean;
    else
      e.value += eps * (mean - e.value);
  }
}

namespace {

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> json_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const TrainLog& log) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : log.rows) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& v : r.weights) w.push_back(vec_json(v));
    rows.push_back({{"iteration", r.iteration},
                    {"epsilon", r.epsilon},
                    {"task_cost", r.task_cost},
                    {"scale", vec_json(r.scale)},
                    {"weights", w},
                    {"val_hv_ratio", optional_json(r.val_hv_ratio)}});
  }
  return {{"initial_val_hv_ratio", optional_json(log.initial_val_hv_ratio)}, {"rows", rows}};
}

TrainLog train_log_from_json(const nlohmann::json& j) {
  TrainLog log;
  log.initial_val_hv_ratio = json_optional(j, "initial_val_hv_ratio");
  for (const auto& r : j.at("rows")) {
    LogRow row;
    row.iteration = r.at("iteration").get<int>();
    row.epsilon = r.at("epsilon").get<double>();
    row.task_cost = r.at("task_cost").get<std::vector<double>>();
    row.scale = json_vec(r.at("scale"));
    for (const auto& w : r.at("weights")) row.weights.push_back(json_vec(w));
    row.val_hv_ratio = json_optional(r, "val_hv_ratio");
    log.rows.push_back(std::move(row));
  }
  return log;
}

std::string train_log_csv(const TrainLog& log) {
  std::ostringstream os;
  const std::size_t tasks = log.rows.empty() ? 0 : log.rows.front().task_cost.size();
  const Eigen::Index M = log.rows.empty() ? 0 : log.rows.front().scale.size();
  os << "iteration,epsilon";
  for (std::size_t i = 0; i < tasks; ++i) os << ",cost_" << i + 1;
  for (Eigen::Index m = 0; m < M; ++m) os << ",fprime_" << m + 1;
  os << ",val_hv_ratio,wall_seconds\n";
  for (const auto& r : log.rows) {
    os << r.iteration << ',' << fmt(r.epsilon);
    for (double c : r.task_cost) os << ',' << fmt(c);
    for (Eigen::Index m = 0; m < r.scale.size(); ++m) os << ',' << fmt(r.scale(m));
    os << ',' << (r.val_hv_ratio ? fmt(*r.val_hv_ratio) : "") << ',';
    if (r.wall_seconds) os << fmt(*r.wall_seconds);
    os << '\n';
  }
  return os.str();
}

Vector estimate_scale(const ModelConfig& config, const ad::ParamStore& params,
                      const std::vector<Instance>& validation, decomp::ScalePick pick, int threads) {
  std::vector<std::vector<Vector>> candidates(validation.size());
  policy::RolloutOptions opt;
  opt.mode = policy::DecodeMode::greedy;
  parallel_for(validation.size(), threads, [&](std::size_t i) {
    const auto ms = policy::rollout_multistart(config, params, validation[i], opt);
    for (const auto& r : ms.rollouts) candidates[i].push_back(r.objectives);
  });
  return decomp::estimate_ideal_scale(candidates, config.kind.sense(), pick);
}

double validation_hv_ratio(const ModelConfig& config, const ad::ParamStore& params,
                           const std::vector<Instance>& validation, const decomp::WeightSet& weights,
                           int threads) {
  if (validation.empty()) throw UsageError("empty validation set");
  const auto ref = eval::reference_points(config.kind, validation.front().n);
  const auto set = finetune::uniform_submodels(config, params, weights);
  std::vector<double> ratios(validation.size());
  parallel_for(validation.size(), threads, [&](std::size_t i) {
    const auto front = eval::solve_instance(set, validation[i], false);
    std::vector<Vector> kept;
    for (const auto& f : front.objectives())
      if (eval::box_contains(ref, f, config.kind.sense())) kept.push_back(f);
    ratios[i] = eval::hv_ratio(kept, ref.reference, ref.ideal, config.kind.sense());
  });
  double total = 0.0;
  for (double r : ratios) total += r;
  return total / static_cast<double>(ratios.size());
}

ad::Checkpoint make_meta_checkpoint(const ModelConfig& model, const MetaConfig& meta, const MetaResult& state,
                                    const nlohmann::json& provenance) {
  ad::Checkpoint c;
  c.problem_kind = model.kind.name();
  c.hyperparameters = {{"model", policy::to_json(model)}, {"meta", to_json(meta)}};
  c.parameters = state.meta;
  c.metadata = provenance;
  c.metadata["training"] = {
      {"iteration", state.completed},
      {"scale", vec_json(state.scale.f)},
      {"scale_source",
       state.scale.source == decomp::ScaleEstimate::Source::validation_estimate ? "validation_estimate" : "configured"},
      {"scale_iteration", state.scale.iteration},
      {"log", to_json(state.log)}};
  return c;
}

namespace {

MetaResult resume_state(const ModelConfig& model, const MetaConfig& meta, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("no checkpoint to resume from at " + path.string());
  const auto c = ad::load_checkpoint(path);
  const nlohmann::json expect = {{"model", policy::to_json(model)}, {"meta", to_json(meta)}};
  if (c.hyperparameters != expect)
    throw UsageError("checkpoint " + path.string() + " was written with a different configuration");
  MetaResult r;
  r.meta = c.parameters;
  const auto& t = c.metadata.at("training");
  r.completed = t.at("iteration").get<int>();
  r.scale.f = json_vec(t.at("scale"));
  r.scale.source = t.at("scale_source") == "validation_estimate" ? decomp::ScaleEstimate::Source::validation_estimate
                                                                 : decomp::ScaleEstimate::Source::configured;
  r.scale.iteration = t.at("scale_iteration").get<int>();
  r.log = train_log_from_json(t.at("log"));
  return r;
}

}  // namespace

MetaResult meta_train(const ModelConfig& model, const MetaConfig& meta, const TrainOptions& options) {
  model.validate();
  meta.validate();
  const int M = model.kind.M;
  const int ntilde = meta.resolved_ntilde(M);
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  };

  const auto validation =
      problems::generate_instances(model.kind, meta.n, kValidationSeed, meta.validation_size, meta.capacity);
  const auto hv_weights = decomp::das_dennis_weights(M, meta.hv_weights_h);
  auto val_hv = [&](const ad::ParamStore& p) {
    return validation_hv_ratio(model, p, validation, hv_weights, meta.threads);
  };

  MetaResult state;
  const auto latest = options.checkpoint_dir / "meta_latest.json";
  if (options.resume) {
    state = resume_state(model, meta, latest);
  } else {
    state.meta = policy::init_params(model, meta.seed);
    state.scale = decomp::unit_scale(M);
    if (meta.hv_every > 0) state.log.initial_val_hv_ratio = val_hv(state.meta);
  }

  auto save = [&](int t) {
    if (options.checkpoint_dir.empty()) return;
    const auto c = make_meta_checkpoint(model, meta, state, options.provenance);
    ad::save_checkpoint(options.checkpoint_dir / ("meta_" + std::to_string(t) + ".json"), c);
    ad::save_checkpoint(latest, c);
  };
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  const int last = options.stop_after > 0 ? std::min(options.stop_after, meta.tm) : meta.tm;
  for (int t = state.completed + 1; t <= last; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    const double eps = epsilon_at(meta, t);

    if (meta.sampling == SamplingMode::scaled && (t - 1) % meta.scale_every == 0) {
      state.scale.f = estimate_scale(model, state.meta, validation, meta.scale_pick, meta.threads);
      state.scale.source = decomp::ScaleEstimate::Source::validation_estimate;
      state.scale.iteration = t;
    }
    Rng rng(derive_seed(meta.seed, {ut, 0}));
    decomp::WeightSet weights;
    switch (meta.sampling) {
      case SamplingMode::random: weights = decomp::random_sample(rng, ntilde, M); break;
      case SamplingMode::symmetric: weights = decomp::scaled_symmetric_sample(rng, Vector::Ones(M), ntilde, M); break;
      case SamplingMode::scaled: weights = decomp::scaled_symmetric_sample(rng, state.scale.f, ntilde, M); break;
    }

    // fresh multi-task model and optimizer state every meta-iteration
    auto mt = policy::build_multitask(state.meta, ntilde);
    ad::AdamState adam(ad::AdamConfig{meta.learning_rate});
    const InnerConfig inner{meta.tu, meta.batch, meta.n, meta.capacity, meta.threads};
    const auto res = inner_loop(model, mt.params, multitask_tasks(weights), inner, adam, derive_seed(meta.seed, {ut, 1}));
    meta_update(state.meta, mt, eps);

    LogRow row;
    row.iteration = t;
    row.epsilon = eps;
    row.task_cost.assign(static_cast<std::size_t>(ntilde), 0.0);
    for (const auto& step : res.costs)
      for (std::size_t i = 0; i < step.size(); ++i) row.task_cost[i] += step[i] / static_cast<double>(res.costs.size());
    row.scale = state.scale.f;
    row.weights = weights;
    if (meta.hv_every > 0 && (t % meta.hv_every == 0 || t == meta.tm)) row.val_hv_ratio = val_hv(state.meta);
    row.wall_seconds = elapsed();
    state.log.rows.push_back(row);
    state.completed = t;
    if (options.on_iteration) options.on_iteration(row);
    if ((meta.checkpoint_every > 0 && t % meta.checkpoint_every == 0) || t == last) save(t);
  }
  return state;
}

}  // namespace emnh::train
