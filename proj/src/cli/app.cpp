#include "emnh/cli/commands.hpp"

#include "emnh/build_info.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

namespace emnh::cli {

namespace {

struct Raw {
  std::string problem;
  int objectives = 2;
  std::string sampling = "scaled";
  std::string scale_pick = "best";
  std::string pooling = "mean";
  std::string tune = "full";
  double capacity = 0.0;
  std::vector<double> reference, ideal;
  std::vector<std::string> fronts;
};

void add_common(CLI::App* sub, RunConfig& c, Raw& r) {
  sub->add_option("--problem", r.problem, "motsp1, motsp2, mocvrp or mokp");
  sub->add_option("--objectives,-M", r.objectives, "Number of objectives")->check(CLI::Range(2, 3));
  sub->add_option("--size,-n", c.meta.n, "Problem size");
  sub->add_option("--capacity", r.capacity, "Vehicle or knapsack capacity override");
  sub->add_option("--seed", c.meta.seed, "Master seed");
  sub->add_option("--threads", c.meta.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.paths.out, "Output directory");
}

void add_model(CLI::App* sub, RunConfig& c, Raw& r) {
  sub->add_option("--d-model", c.model.d_model, "Embedding width");
  sub->add_option("--layers", c.model.n_layers, "Encoder layers");
  sub->add_option("--heads", c.model.n_heads, "Attention heads");
  sub->add_option("--ff-hidden", c.model.ff_hidden, "Feed-forward width (0 = 4 * d-model)");
  sub->add_option("--clip", c.model.clip, "Logit clipping");
  sub->add_option("--pooling", r.pooling, "mean or sum");
}

void add_finetune(CLI::App* sub, RunConfig& c, Raw& r) {
  sub->add_option("--method", c.finetune.method, "hierarchical or vanilla");
  sub->add_option("--tune", r.tune, "full, head-only or decoder-only");
  sub->add_option("--weights-h", c.finetune.weights_h, "Das-Dennis H of the final weights (0 = 100 or 13)");
  sub->add_option("--levels", c.finetune.levels, "Hierarchy depth (0 = automatic)");
  sub->add_option("--k", c.finetune.k, "Steps per level, one value or one per level")->delimiter(',');
  sub->add_option("--ktilde", c.finetune.ktilde, "Vanilla steps per weight (0 = matched budget)");
  sub->add_option("--ft-batch", c.finetune.batch, "Fine-tuning batch size");
  sub->add_option("--ft-lr", c.finetune.learning_rate, "Fine-tuning learning rate");
}

void add_reference(CLI::App* sub, Raw& r) {
  sub->add_option("--reference", r.reference, "Reference point, comma separated")->delimiter(',');
  sub->add_option("--ideal", r.ideal, "Ideal point, comma separated")->delimiter(',');
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

void finish(RunConfig& c, const Raw& r, const CLI::App& sub) {
  c.problem_set = !r.problem.empty();
  const auto given = [&](const char* name) {
    const auto* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  c.size_set = given("--size");
  c.model.kind = problems::parse_kind(c.problem_set ? r.problem : "motsp1", r.objectives);
  problems::validate(c.model.kind);
  if (r.pooling == "mean") c.model.pooling = policy::GraphPooling::mean;
  else if (r.pooling == "sum") c.model.pooling = policy::GraphPooling::sum;
  else throw UsageError("--pooling must be mean or sum, got '" + r.pooling + "'");
  c.meta.sampling = train::parse_sampling_mode(r.sampling);
  if (r.scale_pick == "best") c.meta.scale_pick = decomp::ScalePick::best;
  else if (r.scale_pick == "worst") c.meta.scale_pick = decomp::ScalePick::worst;
  else throw UsageError("--scale-pick must be best or worst, got '" + r.scale_pick + "'");
  c.finetune.tune = finetune::parse_tune_mode(r.tune);
  if (given("--capacity")) {
    if (!(r.capacity > 0.0)) throw UsageError("--capacity must be positive");
    c.meta.capacity = r.capacity;
  }
  if (!r.reference.empty()) c.eval.reference = to_vector(r.reference);
  if (!r.ideal.empty()) c.eval.ideal = to_vector(r.ideal);
  for (const auto& f : r.fronts) c.paths.fronts.emplace_back(f);
}

// CLI11 reads config files on the top-level app only; accept --config after the subcommand too.
std::vector<std::string> hoist_config(int argc, const char* const* argv) {
  std::vector<std::string> head, rest;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      head.push_back(a);
      head.push_back(argv[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      head.push_back(a);
    } else {
      rest.push_back(a);
    }
  }
  head.insert(head.end(), rest.begin(), rest.end());
  std::reverse(head.begin(), head.end());
  return head;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Meta-learned neural heuristics for multi-objective combinatorial optimization", "emnh"};
  app.set_version_flag("--version", std::string(build_info::version));
  app.set_config("--config", "", "INI or TOML file; options go under [train], [finetune], ... sections");
  app.require_subcommand(1);

  RunConfig c;
  c.meta.checkpoint_every = 100;
  Raw r;

  auto* train_cmd = app.add_subcommand("train", "Meta-train a model");
  add_common(train_cmd, c, r);
  add_model(train_cmd, c, r);
  train_cmd->add_option("--tm", c.meta.tm, "Meta-iterations");
  train_cmd->add_option("--tu", c.meta.tu, "Inner steps per meta-iteration");
  train_cmd->add_option("--batch", c.meta.batch, "Inner batch size");
  train_cmd->add_option("--ntilde", c.meta.ntilde, "Weights per meta-iteration (0 = M)");
  train_cmd->add_option("--eps0", c.meta.eps0, "Initial meta step size");
  train_cmd->add_option("--sampling", r.sampling, "random, symmetric or scaled");
  train_cmd->add_option("--lr", c.meta.learning_rate, "Inner learning rate");
  train_cmd->add_option("--scale-every", c.meta.scale_every, "Re-estimate the objective scale every this many iterations");
  train_cmd->add_option("--scale-pick", r.scale_pick, "best or worst");
  train_cmd->add_option("--validation-size", c.meta.validation_size, "Validation instances");
  train_cmd->add_option("--hv-every", c.meta.hv_every, "Validation HV ratio cadence (0 = off)");
  train_cmd->add_option("--hv-weights-h", c.meta.hv_weights_h, "Das-Dennis H of the validation weights");
  train_cmd->add_option("--checkpoint-every", c.meta.checkpoint_every, "Checkpoint cadence");
  train_cmd->add_flag("--resume", c.resume, "Continue from the latest checkpoint in the output directory");

  auto* ft_cmd = app.add_subcommand("finetune", "Fine-tune submodels from a meta-model");
  add_common(ft_cmd, c, r);
  add_finetune(ft_cmd, c, r);
  ft_cmd->add_option("--checkpoint", c.paths.checkpoint, "Meta-model checkpoint")->required();
  ft_cmd->add_option("--submodels", c.paths.submodels, "Output directory of the submodels");

  auto* eval_cmd = app.add_subcommand("eval", "Solve test instances and report hypervolume");
  add_common(eval_cmd, c, r);
  add_finetune(eval_cmd, c, r);
  add_reference(eval_cmd, r);
  eval_cmd->add_option("--submodels", c.paths.submodels, "Fine-tuned submodels");
  eval_cmd->add_option("--checkpoint", c.paths.checkpoint, "Checkpoint used for every weight without fine-tuning");
  eval_cmd->add_option("--instances", c.paths.instances, "Instance file (JSON)");
  eval_cmd->add_option("--count", c.eval.count, "Generated instances when no file is given");
  eval_cmd->add_option("--instance-seed", c.eval.instance_seed, "Seed of the generated test instances");
  eval_cmd->add_flag("--augment", c.eval.augment, "Use instance augmentation");
  eval_cmd->add_flag("--oracle-compare", c.eval.oracle_compare, "Compare with the exact front (small instances)");
  eval_cmd->add_option("--plot", c.eval.plot, "Write SVG plots for the first this many instances");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exact Pareto fronts of small instances");
  add_common(oracle_cmd, c, r);
  add_reference(oracle_cmd, r);
  oracle_cmd->add_option("--instances", c.paths.instances, "Instance file (JSON)");
  oracle_cmd->add_option("--count", c.eval.count, "Generated instances when no file is given");
  oracle_cmd->add_option("--instance-seed", c.eval.instance_seed, "Seed of the generated test instances");

  auto* budget_cmd = app.add_subcommand("budget", "Print fine-tuning step budgets");
  budget_cmd->add_option("--objectives,-M", r.objectives, "Number of objectives")->check(CLI::Range(2, 3));
  add_finetune(budget_cmd, c, r);

  auto* plot_cmd = app.add_subcommand("plot", "Scatter plot of front CSV files");
  plot_cmd->add_option("--fronts", r.fronts, "Front CSV files")->required();
  plot_cmd->add_option("--seed", c.meta.seed, "Seed recorded in the plot");
  plot_cmd->add_option("--out", c.paths.out, "Output directory");

  try {
    app.parse(hoist_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    c.command = sub->get_name();
    finish(c, r, *sub);
    nlohmann::json summary;
    if (c.command == "train") summary = cmd_train(c);
    else if (c.command == "finetune") summary = cmd_finetune(c);
    else if (c.command == "eval") summary = cmd_eval(c);
    else if (c.command == "oracle") summary = cmd_oracle(c);
    else if (c.command == "budget") summary = cmd_budget(c);
    else summary = cmd_plot(c);
    std::cout << summary.dump(1) << "\n";
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace emnh::cli
