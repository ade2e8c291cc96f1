// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "emnh/autodiff/graph.hpp"
#include "emnh/cli/commands.hpp"
#include "emnh/evaluation/oracle.hpp"
#include "emnh/evaluation/reference.hpp"
#include "emnh/evaluation/solve.hpp"
#include "emnh/finetune/finetune.hpp"
#include "emnh/training/meta.hpp"

#include "gradcheck_cases.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

using namespace emnh;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---- 1. budget arithmetic ---------------------------------------------------

Outcome budget_arithmetic() {
  const auto b = finetune::step_budget(2, 7, 101, 20);
  const bool ok = b.idealized_hierarchical == 5080 && b.exact_hierarchical == 4540 && b.exact_hierarchical == 227 * 20;
  return {ok, "idealized " + std::to_string(b.idealized_hierarchical) + ", exact " + std::to_string(b.exact_hierarchical)};
}

// ---- 2. weight generation ---------------------------------------------------

Outcome weight_generation() {
  const auto w2 = decomp::das_dennis_weights(2, 100);
  const auto w3 = decomp::das_dennis_weights(3, 13);
  double worst = 0.0;
  bool nonneg = true;
  for (const auto* set : {&w2, &w3})
    for (const auto& w : *set) {
      worst = std::max(worst, std::abs(w.sum() - 1.0));
      nonneg = nonneg && (w.array() >= 0.0).all();
    }
  const bool ok = w2.size() == 101 && w3.size() == 105 && nonneg && worst <= 1e-12;
  return {ok, std::to_string(w2.size()) + " and " + std::to_string(w3.size()) + " weights, max |sum - 1| " +
                  fmt("%.1e", worst)};
}

// ---- 3. gradient correctness ------------------------------------------------

Outcome gradient_correctness() {
  Rng rng(3);
  const problems::ProblemKind kinds[] = {{problems::Family::motsp1, 2}, {problems::Family::motsp1, 3},
                                         {problems::Family::motsp2, 2}, {problems::Family::mocvrp, 2},
                                         {problems::Family::mokp, 2},   {problems::Family::mokp, 3}};
  double worst = 0.0;
  int configs = 0;
  for (int trial = 0; trial < 24; ++trial) {
    policy::ModelConfig c;
    c.kind = kinds[trial % 6];
    c.d_model = trial % 3 == 0 ? 4 : 8;
    c.n_layers = 2;
    c.n_heads = trial % 2 ? 2 : 1;
    const int n = 3 + static_cast<int>(rng.below(3));
    const int ntilde = 1 + static_cast<int>(rng.below(3));
    const int batch = 1 + static_cast<int>(rng.below(2));
    const auto meta = policy::init_params(c, rng.next_u64());
    const auto mt = policy::build_multitask(meta, ntilde);
    std::optional<double> cap;
    if (c.kind.family == problems::Family::mokp) cap = 0.3 * n;
    const auto instances = problems::generate_instances(c.kind, n, rng.next_u64(), batch, cap);
    decomp::WeightSet weights;
    for (int i = 0; i < ntilde; ++i) weights.push_back(decomp::sample_simplex(rng, c.kind.M));
    const auto tasks = train::multitask_tasks(weights);
    const auto res = train::reinforce_gradient(c, mt.params, tasks, instances, rng.next_u64());
    auto fn = [&](ad::Tape& t, const ad::ParamStore& p) {
      return train::frozen_surrogate(t, c, p, tasks, instances, res.samples);
    };
    // step 1e-6: at 1e-5 a ReLU pre-activation can sit inside the difference stencil
    worst = std::max(worst, ad::check_gradients(fn, mt.params, 1e-3, 1e-6).worst);
    ++configs;
  }
  double prim = 0.0;
  std::string prim_name;
  for (const auto& [name, err] : testing::primitive_gradcheck(100))
    if (err >= prim) prim = err, prim_name = name;
  const bool ok = configs >= 20 && worst < 1e-3 && prim < 1e-4;
  return {ok, std::to_string(configs) + " policy configs worst rel err " + fmt("%.2e", worst) + "; primitives worst " +
                  fmt("%.2e", prim) + " (" + prim_name + ")"};
}

// ---- 4. multi-task equivalence ----------------------------------------------

problems::DecodeState random_state(const problems::Instance& inst, Rng& rng) {
  int start;
  do start = static_cast<int>(rng.below(static_cast<std::uint64_t>(inst.n)));
  while (!problems::feasible_start(inst, start));
  auto s = problems::initial_state(inst, start);
  const int steps = static_cast<int>(rng.below(static_cast<std::uint64_t>(inst.n)));
  for (int i = 0; i < steps && !s.done; ++i) {
    const Mask m = problems::feasible_mask(inst, s);
    std::vector<int> open;
    for (int a = 0; a < m.size(); ++a)
      if (m(a)) open.push_back(a);
    auto next = problems::apply_action(inst, s, open[rng.below(open.size())]);
    if (next.done) break;
    s = next;
  }
  return s;
}

Outcome multitask_equivalence() {
  Rng rng(4);
  double worst = 0.0;
  int states = 0;
  for (int ntilde : {1, 2, 3}) {
    policy::ModelConfig c;
    c.kind = problems::parse_kind("motsp1");
    c.d_model = 16;
    const auto meta = policy::init_params(c, 40 + static_cast<std::uint64_t>(ntilde));
    const auto mt = policy::build_multitask(meta, ntilde);
    for (int trial = 0; trial < 100; ++trial) {
      const auto inst = problems::generate_instance(c.kind, 4 + static_cast<int>(rng.below(5)), rng.next_u64());
      ad::Tape t(false);
      const auto base_enc = policy::encode(t, c, meta, inst);
      const auto mt_enc = policy::encode(t, c, mt.params, inst);
      std::vector<problems::DecodeState> st;
      for (int i = 0; i < ntilde; ++i) st.push_back(random_state(inst, rng));
      std::vector<ad::Var> contexts;
      std::vector<ad::Tensor> masks;
      for (auto& s : st) {
        contexts.push_back(policy::context_embedding(t, c, mt_enc, inst, {&s}));
        masks.push_back(policy::additive_mask(inst, {&s}));
      }
      const auto outs = policy::multi_task_decode_step(t, c, mt.params, mt_enc, contexts, masks);
      for (int i = 0; i < ntilde; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const auto base = policy::decode_step(t, c, meta, base_enc, policy::context_embedding(t, c, base_enc, inst, {&st[k]}),
                                              masks[k]);
        worst = std::max(worst, (outs[k].probabilities.value() - base.probabilities.value()).cwiseAbs().maxCoeff());
      }
      ++states;
    }
  }
  return {worst <= 1e-12, std::to_string(states) + " states over Ntilde 1..3, max |dp| " + fmt("%.1e", worst)};
}

// ---- 5. Reptile degenerate case ---------------------------------------------

Outcome reptile_degenerate() {
  policy::ModelConfig c;
  c.kind = problems::parse_kind("motsp1");
  c.d_model = 8;
  c.n_heads = 2;
  train::MetaConfig m;
  m.tm = 1;
  m.tu = 5;
  m.batch = 4;
  m.n = 6;
  m.ntilde = 1;
  m.eps0 = 1.0;
  m.sampling = train::SamplingMode::random;
  m.validation_size = 2;
  m.seed = 5;
  const auto dir = fs::temp_directory_path() / "emnh_acceptance_reptile";
  fs::remove_all(dir);
  train::TrainOptions opt;
  opt.checkpoint_dir = dir;
  train::meta_train(c, m, opt);
  const auto ck = ad::load_checkpoint(dir / "meta_latest.json");

  auto mt = policy::build_multitask(policy::init_params(c, m.seed), 1);
  Rng rng(derive_seed(m.seed, {1, 0}));
  const auto weights = decomp::random_sample(rng, 1, 2);
  ad::AdamState adam(ad::AdamConfig{m.learning_rate});
  train::inner_loop(c, mt.params, train::multitask_tasks(weights), train::InnerConfig{m.tu, m.batch, m.n, m.capacity, 1},
                    adam, derive_seed(m.seed, {1, 1}));
  int mismatched = 0, total = 0;
  for (const auto& e : ck.parameters.entries()) {
    const auto& other = e.path == policy::kHeadPath ? mt.params.at(policy::task_head_path(0)) : mt.params.at(e.path);
    mismatched += ad::encode_tensor_values(e.value) != ad::encode_tensor_values(other);
    ++total;
  }
  const bool moved = !(ck.parameters == policy::init_params(c, m.seed));
  fs::remove_all(dir);
  return {mismatched == 0 && moved && total > 0,
          std::to_string(total - mismatched) + "/" + std::to_string(total) + " tensors bitwise equal"};
}

// ---- 6. sampling stabilization ----------------------------------------------

Outcome sampling_stabilization() {
  Rng rng(6);
  bool centred = true;
  for (int i = 0; i < 10000; ++i) {
    const auto w = decomp::scaled_symmetric_sample(rng, Vector::Ones(2), 2, 2);
    centred = centred && (w[0] + w[1]) / 2.0 == Vector::Constant(2, 0.5);
  }
  double plain_err = 0.0;
  for (int M = 2; M <= 3; ++M)
    for (int i = 0; i < 1000; ++i) {
      const auto w = decomp::scaled_symmetric_sample(rng, Vector::Ones(M), M, M);
      const auto plain = decomp::symmetric_rotations(w[0]);
      for (int k = 1; k < M; ++k)
        plain_err = std::max(plain_err, (w[static_cast<std::size_t>(k)] - plain[static_cast<std::size_t>(k - 1)]).cwiseAbs().maxCoeff());
    }
  auto variance = [&](bool symmetric) {
    Rng r(symmetric ? 61 : 62);
    double s = 0.0, s2 = 0.0;
    const int iters = 10000;
    for (int i = 0; i < iters; ++i) {
      const auto w = symmetric ? decomp::scaled_symmetric_sample(r, Vector::Ones(2), 2, 2) : decomp::random_sample(r, 2, 2);
      const double mean = (w[0](0) + w[1](0)) / 2.0;
      s += mean;
      s2 += mean * mean;
    }
    const double mu = s / iters;
    return std::max(0.0, s2 / iters - mu * mu);
  };
  const double var_sym = variance(true), var_rand = variance(false);
  const bool ok = centred && plain_err <= 1e-12 && var_sym == 0.0 && var_rand > 0.01;
  return {ok, std::string(centred ? "pairs centred" : "pairs NOT centred") + ", scaled vs plain " + fmt("%.1e", plain_err) +
                  ", mean-weight variance symmetric " + fmt("%g", var_sym) + " random " + fmt("%.4f", var_rand)};
}

// ---- 7. hypervolume correctness ---------------------------------------------

std::vector<Vector> random_front(Rng& rng, int M, int points) {
  std::vector<Vector> pts;
  for (int i = 0; i < points; ++i) {
    Vector f(M);
    for (int m = 0; m < M; ++m) f(m) = rng.uniform(0.05, 0.95);
    pts.push_back(f);
  }
  return eval::pareto_filter(pts, Sense::minimize);
}

Outcome hypervolume_correctness() {
  Rng rng(7);
  int outside = 0, total = 0;
  double worst_sigma = 0.0;
  for (int M = 2; M <= 3; ++M)
    for (int trial = 0; trial < 100; ++trial) {
      const auto front = random_front(rng, M, 4 + static_cast<int>(rng.below(12)));
      const Vector r = Vector::Ones(M), z = Vector::Zero(M);
      const double exact = eval::hypervolume(front, r);
      const auto mc = eval::mc_hypervolume(front, r, z, 1000000,
                                           derive_seed(77, {static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(trial)}));
      const double sigmas = std::abs(mc.value - exact) / mc.std_error;
      worst_sigma = std::max(worst_sigma, sigmas);
      outside += sigmas > 3.0;
      ++total;
    }
  Vector a(2), b(2);
  a << 1, 2;
  b << 2, 1;
  const double hand = eval::hypervolume({a, b}, Vector::Constant(2, 3.0));
  const bool ok = outside == 0 && hand == 3.0;
  return {ok, std::to_string(total - outside) + "/" + std::to_string(total) + " fronts within 3 sigma (worst " +
                  fmt("%.2f", worst_sigma) + "), hand case " + fmt("%.6f", hand)};
}

// ---- 8. feasibility and augmentation invariants -----------------------------

bool feasible(const problems::Instance& inst, const std::vector<int>& seq) {
  using problems::Family;
  const int n = inst.n;
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  if (inst.kind.family == Family::mocvrp) {
    if (seq.empty() || seq.front() != 0 || seq.back() != 0) return false;
    double load = 0.0;
    for (int a : seq) {
      if (a == 0) {
        load = 0.0;
        continue;
      }
      if (a < 1 || a > n || seen[static_cast<std::size_t>(a - 1)]++) return false;
      load += inst.features(a - 1, 2);
      if (load > inst.capacity + 1e-9) return false;
    }
    return std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; });
  }
  if (inst.kind.family == Family::mokp) {
    double weight = 0.0;
    for (int a : seq) {
      if (a < 0 || a >= n || seen[static_cast<std::size_t>(a)]++) return false;
      weight += inst.features(a, inst.kind.M);
    }
    if (weight > inst.capacity + 1e-9) return false;
    // maximal: no unpicked item still fits
    for (int i = 0; i < n; ++i)
      if (!seen[static_cast<std::size_t>(i)] && weight + inst.features(i, inst.kind.M) <= inst.capacity - 1e-9) return false;
    return true;
  }
  if (static_cast<int>(seq.size()) != n) return false;
  for (int a : seq)
    if (a < 0 || a >= n || seen[static_cast<std::size_t>(a)]++) return false;
  return true;
}

Outcome feasibility_and_augmentation() {
  Rng rng(8);
  const problems::ProblemKind kinds[] = {{problems::Family::motsp1, 2}, {problems::Family::motsp1, 3},
                                         {problems::Family::motsp2, 2}, {problems::Family::motsp2, 3},
                                         {problems::Family::mocvrp, 2}, {problems::Family::mokp, 2},
                                         {problems::Family::mokp, 3}};
  std::string detail;
  bool ok = true;
  for (const auto& kind : kinds) {
    policy::ModelConfig c;
    c.kind = kind;
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    const auto params = policy::init_params(c, rng.next_u64());
    long long rollouts = 0, bad = 0;
    while (rollouts < 10000) {
      const int n = 3 + static_cast<int>(rng.below(10));
      std::optional<double> cap;
      if (kind.family == problems::Family::mokp) cap = rng.uniform(0.2, 0.5) * n;
      const auto inst = problems::generate_instance(kind, n, rng.next_u64(), cap);
      policy::RolloutOptions opt;
      opt.mode = policy::DecodeMode::sample;
      opt.rng = &rng;
      const auto ms = policy::rollout_multistart(c, params, inst, opt);
      for (const auto& r : ms.rollouts) {
        ++rollouts;
        bool good = feasible(inst, r.actions);
        if (good) {
          const Vector f = problems::objectives(inst, r.actions);
          good = f.allFinite() && (f - r.objectives).cwiseAbs().maxCoeff() <= 1e-12;
        }
        bad += !good;
      }
    }
    ok = ok && bad == 0;
    if (bad) detail += kind.name() + "/M" + std::to_string(kind.M) + " " + std::to_string(bad) + " infeasible; ";
  }
  if (ok) detail += "10^4 sampled rollouts per problem all feasible; ";

  double worst = 0.0;
  bool counts = true;
  for (const auto& kind : {problems::ProblemKind{problems::Family::motsp1, 2}, problems::ProblemKind{problems::Family::motsp1, 3},
                           problems::ProblemKind{problems::Family::motsp2, 2}, problems::ProblemKind{problems::Family::motsp2, 3},
                           problems::ProblemKind{problems::Family::mocvrp, 2}}) {
    const int M = kind.M;
    const int expected = kind.family == problems::Family::motsp1   ? static_cast<int>(std::pow(8, M))
                         : kind.family == problems::Family::motsp2 ? 2 * static_cast<int>(std::pow(8, M - 1))
                                                                   : 8;
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = problems::generate_instance(kind, 8, rng.next_u64());
      const auto copies = problems::augment(inst);
      counts = counts && static_cast<int>(copies.size()) == expected && problems::augmentation_count(kind) == expected;
      std::vector<int> seq;
      if (kind.family == problems::Family::mocvrp) {
        std::vector<int> customers(8);
        for (int i = 0; i < 8; ++i) customers[static_cast<std::size_t>(i)] = i + 1;
        for (int i = 7; i > 0; --i) std::swap(customers[static_cast<std::size_t>(i)], customers[rng.below(static_cast<std::uint64_t>(i + 1))]);
        double load = 0.0;
        seq.push_back(0);
        for (int cst : customers) {
          const double d = inst.features(cst - 1, 2);
          if (load + d > inst.capacity) seq.push_back(0), load = 0.0;
          seq.push_back(cst);
          load += d;
        }
        seq.push_back(0);
      } else {
        seq.resize(8);
        for (int i = 0; i < 8; ++i) seq[static_cast<std::size_t>(i)] = i;
        for (int i = 7; i > 0; --i) std::swap(seq[static_cast<std::size_t>(i)], seq[rng.below(static_cast<std::uint64_t>(i + 1))]);
      }
      const Vector f = problems::objectives(inst, seq);
      for (const auto& copy : copies) worst = std::max(worst, (problems::objectives(copy, seq) - f).cwiseAbs().maxCoeff());
    }
  }
  ok = ok && counts && worst <= 1e-9;
  detail += std::string(counts ? "transform counts 64/512/16/128/8" : "transform counts WRONG") +
            ", max objective drift " + fmt("%.1e", worst);
  return {ok, detail};
}

// ---- 9 and 10. desk-scale pipeline ------------------------------------------

struct Desk {
  policy::ModelConfig model;
  train::MetaConfig meta;
  finetune::FinetuneConfig ft;
  decomp::WeightSet weights;
  finetune::Hierarchy hierarchy;
  std::vector<problems::Instance> test;
  eval::RefPoints ref;
  ad::ParamStore trained;
  double train_seconds = 0.0;
};

Desk& desk() {
  static Desk d = [] {
    Desk s;
    s.model.kind = problems::parse_kind("motsp1");
    s.model.d_model = 32;
    s.model.n_layers = 2;
    s.meta.tm = 200;
    s.meta.tu = 10;
    s.meta.batch = 16;
    s.meta.ntilde = 2;
    s.meta.sampling = train::SamplingMode::scaled;
    s.meta.n = 6;
    s.meta.seed = 1;
    s.ft.batch = 16;
    s.ft.n = 6;
    s.ft.seed = 7;
    s.weights = decomp::das_dennis_weights(2, 10);
    s.hierarchy = finetune::build_hierarchy(2, s.weights, 3);
    s.test = problems::generate_instances(s.model.kind, 6, cli::EvalOptions{}.instance_seed, 20);
    s.ref = eval::reference_points(s.model.kind, 6);
    const auto t0 = std::chrono::steady_clock::now();
    s.trained = train::meta_train(s.model, s.meta).meta;
    s.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }();
  return d;
}

double mean_hv_ratio(const std::vector<std::vector<Vector>>& fronts) {
  const auto& d = desk();
  double sum = 0.0;
  for (const auto& front : fronts) {
    std::vector<Vector> kept;
    for (const auto& f : front)
      if ((f.array() <= d.ref.reference.array()).all()) kept.push_back(f);
    sum += eval::hv_ratio(kept, d.ref.reference, d.ref.ideal);
  }
  return sum / static_cast<double>(fronts.size());
}

double solve_all(const finetune::SubmodelSet& set) {
  std::vector<std::vector<Vector>> fronts;
  for (const auto& inst : desk().test) fronts.push_back(eval::solve_instance(set, inst, true).objectives());
  return mean_hv_ratio(fronts);
}

Outcome desk_pipeline() {
  auto& d = desk();
  const auto tuned = finetune::hierarchical_finetune(d.model, d.trained, d.hierarchy, {5}, d.ft);
  const double model = solve_all(tuned);
  const double untrained = solve_all(finetune::uniform_submodels(d.model, policy::init_params(d.model, d.meta.seed), d.weights));
  std::vector<std::vector<Vector>> exact;
  for (const auto& inst : d.test) exact.push_back(eval::brute_force_pareto(inst).objectives());
  const double oracle = mean_hv_ratio(exact);
  const bool ok = model >= 0.95 * oracle && model > untrained;
  return {ok, fmt("HV ratio %.5f vs oracle %.5f (%.2f%%)", model, oracle, 100.0 * model / oracle) +
                  fmt(", untrained %.5f, training %.0fs", untrained, d.train_seconds)};
}

Outcome hierarchical_vs_vanilla() {
  auto& d = desk();
  bool ok = true;
  std::string detail;
  for (int K : {1, 5}) {
    const int kt = finetune::step_budget(d.hierarchy.a, d.hierarchy.L(), static_cast<int>(d.weights.size()), K).matched_ktilde;
    const double hier = solve_all(finetune::hierarchical_finetune(d.model, d.trained, d.hierarchy, {K}, d.ft));
    const double van = solve_all(finetune::vanilla_finetune(d.model, d.trained, d.weights, kt, d.ft));
    ok = ok && hier >= van;
    detail += "K=" + std::to_string(K) + " hier " + fmt("%.5f", hier) + " vs vanilla K~=" + std::to_string(kt) + " " +
              fmt("%.5f", van) + (K == 1 ? "; " : "");
  }
  return {ok, detail};
}

// ---- 11. reproducibility ----------------------------------------------------

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "emnh");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  // keep the criterion lines clean of command summaries
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

void strip_runtime(nlohmann::json& j) {
  if (j.is_object()) {
    j.erase("runtime_seconds");
    for (auto& [k, v] : j.items()) strip_runtime(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_runtime(v);
  }
}

bool pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  const auto s = dir.string();
  return run({"train", "--problem", "motsp1", "-n", "6", "--tm", "4", "--tu", "3", "--batch", "4", "--d-model", "8",
              "--layers", "1", "--heads", "2", "--validation-size", "4", "--hv-every", "2", "--checkpoint-every", "2",
              "--seed", "11", "--out", s + "/train"}) == 0 &&
         run({"finetune", "--checkpoint", s + "/train/meta.json", "--weights-h", "4", "--k", "2", "--ft-batch", "3",
              "--seed", "11", "--submodels", s + "/subs"}) == 0 &&
         run({"eval", "--submodels", s + "/subs", "--count", "3", "--augment", "--oracle-compare", "--seed", "11", "--out",
              s + "/eval"}) == 0;
}

// Artifacts of one run keyed by relative path; timing fields are removed.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir);
    if (rel.filename() == "train_log.csv") continue;  // carries wall-clock seconds
    std::string text = ad::read_text_file(e.path());
    if (rel.filename() == "results.json") {
      auto j = nlohmann::json::parse(text);
      strip_runtime(j);
      text = j.dump();
    }
    out[rel.string()] = text;
  }
  return out;
}

Outcome reproducibility() {
  const auto dir = fs::temp_directory_path() / "emnh_acceptance_repro";
  if (!pipeline(dir)) return {false, "first run failed"};
  const auto first = snapshot(dir);
  if (!pipeline(dir)) return {false, "second run failed"};
  const auto second = snapshot(dir);
  fs::remove_all(dir);
  int same = 0;
  std::string first_diff;
  for (const auto& [path, text] : first) {
    const auto it = second.find(path);
    if (it != second.end() && it->second == text) ++same;
    else if (first_diff.empty()) first_diff = path;
  }
  const bool ok = !first.empty() && same == static_cast<int>(first.size()) && first.size() == second.size();
  return {ok, std::to_string(same) + "/" + std::to_string(first.size()) + " artifacts byte-identical" +
                  (first_diff.empty() ? "" : " (first difference " + first_diff + ")")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "budget arithmetic", budget_arithmetic},
      {2, "weight generation", weight_generation},
      {3, "gradient correctness", gradient_correctness},
      {4, "multi-task equivalence", multitask_equivalence},
      {5, "Reptile degenerate case", reptile_degenerate},
      {6, "sampling stabilization", sampling_stabilization},
      {7, "hypervolume correctness", hypervolume_correctness},
      {8, "feasibility and augmentation", feasibility_and_augmentation},
      {9, "desk-scale pipeline", desk_pipeline},
      {10, "hierarchical vs vanilla", hierarchical_vs_vanilla},
      {11, "reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2d %s: %s (%s) [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/11 criteria passed\n", 11 - failed);
  return failed ? 1 : 0;
}
