#include "emnh/policy/model.hpp"

#include <cmath>

namespace emnh::policy {

using problems::DecodeState;
using problems::Family;

int ModelConfig::context_dim() const {
  switch (kind.family) {
    case Family::motsp1:
    case Family::motsp2: return 3 * d_model;
    case Family::mocvrp: return 2 * d_model + 1;
    case Family::mokp: return d_model + 1;
  }
  return 0;
}

void ModelConfig::validate() const {
  problems::validate(kind);
  if (d_model < 1) throw UsageError("d_model must be positive");
  if (n_heads < 1) throw UsageError("n_heads must be positive");
  if (d_model % n_heads != 0) throw UsageError("d_model must be divisible by n_heads");
  if (n_layers < 0) throw UsageError("n_layers must be nonnegative");
  if (ff_hidden < 0) throw UsageError("ff_hidden must be nonnegative");
  if (!(clip > 0.0)) throw UsageError("clip must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"problem", c.kind.name()}, {"M", c.kind.M},       {"d_model", c.d_model},
          {"n_layers", c.n_layers},   {"n_heads", c.n_heads}, {"ff_hidden", c.ff_width()},
          {"clip", c.clip},           {"pooling", c.pooling == GraphPooling::sum ? "sum" : "mean"}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.kind = problems::parse_kind(j.at("problem").get<std::string>(), j.at("M").get<int>());
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.ff_hidden = j.value("ff_hidden", 0);
    c.clip = j.value("clip", 10.0);
    const std::string pooling = j.value("pooling", "mean");
    if (pooling != "mean" && pooling != "sum") throw DataError("unknown graph pooling '" + pooling + "'");
    c.pooling = pooling == "sum" ? GraphPooling::sum : GraphPooling::mean;
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("invalid model config: ") + e.what());
  }
}

std::string task_head_path(int i) { return kHeadPath + "." + std::to_string(i); }

ParamStore init_params(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(derive_seed(seed, {0x9a7a}));
  ParamStore p;
  const int d = c.d_model;
  auto linear = [&](const std::string& path, int in, int out, ad::Partition part = ad::Partition::body) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    p.add(path, part, std::move(w));
  };
  auto bias = [&](const std::string& path, int fan_in, int out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor b(1, out);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
    p.add(path, ad::Partition::body, std::move(b));
  };
  auto norm = [&](const std::string& prefix) {
    p.add(prefix + ".gamma", ad::Partition::body, Tensor::Ones(1, d));
    p.add(prefix + ".beta", ad::Partition::body, Tensor::Zero(1, d));
  };

  const int F = c.kind.feature_dim();
  linear("encoder.embed.w", F, d);
  bias("encoder.embed.b", F, d);
  if (c.kind.family == Family::mocvrp) {
    linear("encoder.embed_depot.w", 2, d);
    bias("encoder.embed_depot.b", 2, d);
  }
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string layer = "encoder.layer" + std::to_string(l);
    linear(layer + ".mha.wq", d, d);
    linear(layer + ".mha.wk", d, d);
    linear(layer + ".mha.wv", d, d);
    linear(layer + ".mha.wo", d, d);
    bias(layer + ".mha.bo", d, d);
    norm(layer + ".bn1");
    linear(layer + ".ff.w1", d, c.ff_width());
    bias(layer + ".ff.b1", d, c.ff_width());
    linear(layer + ".ff.w2", c.ff_width(), d);
    bias(layer + ".ff.b2", c.ff_width(), d);
    norm(layer + ".bn2");
  }
  linear("decoder.wq", c.context_dim(), d);
  linear("decoder.glimpse.wk", d, d);
  linear("decoder.glimpse.wv", d, d);
  linear("decoder.glimpse.wo", d, d);
  bias("decoder.glimpse.bo", d, d);
  linear(kHeadPath, d, d, ad::Partition::head);
  return p;
}

namespace {

// Multi-head attention of query rows over precomputed keys and values.
Var attend(const ModelConfig& c, Var q, Var k, Var v, const Tensor& mask) {
  const int dk = c.d_model / c.n_heads;
  const double norm = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(c.n_heads));
  for (int h = 0; h < c.n_heads; ++h) {
    Var qh = ad::slice_cols(q, h * dk, dk);
    Var kh = ad::slice_cols(k, h * dk, dk);
    Var vh = ad::slice_cols(v, h * dk, dk);
    Var a = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), norm), mask);
    heads.push_back(ad::matmul(a, vh));
  }
  return c.n_heads == 1 ? heads.front() : ad::concat_cols(heads);
}

Var encoder_layer(Tape& t, const ModelConfig& c, const ParamStore& p, int l, Var h) {
  const std::string layer = "encoder.layer" + std::to_string(l);
  Tape::Scope scope(t, "layer" + std::to_string(l));
  auto P = [&](const std::string& name) { return t.param(p, layer + "." + name); };
  Var q = ad::matmul(h, P("mha.wq"));
  Var k = ad::matmul(h, P("mha.wk"));
  Var v = ad::matmul(h, P("mha.wv"));
  Var mha = ad::add(ad::matmul(attend(c, q, k, v, Tensor()), P("mha.wo")), P("mha.bo"));
  Var h1 = ad::batch_norm(ad::add(h, mha), P("bn1.gamma"), P("bn1.beta"));
  Var ff = ad::add(ad::matmul(ad::relu(ad::add(ad::matmul(h1, P("ff.w1")), P("ff.b1"))), P("ff.w2")), P("ff.b2"));
  return ad::batch_norm(ad::add(h1, ff), P("bn2.gamma"), P("bn2.beta"));
}

void check_features(const ModelConfig& c, const Instance& inst) {
  if (!(inst.kind == c.kind))
    throw UsageError("model is configured for " + c.kind.name() + " M=" + std::to_string(c.kind.M) +
                     " but the instance is " + inst.kind.name() + " M=" + std::to_string(inst.kind.M));
  if (inst.features.cols() != c.kind.feature_dim() || inst.features.rows() != inst.n)
    throw ShapeError("instance features are " + std::to_string(inst.features.rows()) + " x " +
                     std::to_string(inst.features.cols()) + ", expected " + std::to_string(inst.n) + " x " +
                     std::to_string(c.kind.feature_dim()));
  if (c.kind.family == Family::mocvrp && inst.depot.size() != 2) throw ShapeError("mocvrp instance without depot");
}

}  // namespace

Encoded encode(Tape& t, const ModelConfig& c, const ParamStore& p, const Instance& inst) {
  check_features(c, inst);
  Encoded enc;
  {
    Tape::Scope scope(t, "encoder");
    Var h = ad::add(ad::matmul(t.constant(inst.features), t.param(p, "encoder.embed.w")),
                    t.param(p, "encoder.embed.b"));
    if (c.kind.family == Family::mocvrp) {
      Tensor depot = inst.depot;
      Var dh = ad::add(ad::matmul(t.constant(depot), t.param(p, "encoder.embed_depot.w")),
                       t.param(p, "encoder.embed_depot.b"));
      const Var parts[] = {dh, h};
      h = ad::concat_rows(parts);
    }
    for (int l = 0; l < c.n_layers; ++l) h = encoder_layer(t, c, p, l, h);
    enc.nodes = h;
    enc.graph = c.pooling == GraphPooling::sum ? ad::sum_rows(h) : ad::mean_rows(h);
  }
  Tape::Scope scope(t, "decoder");
  enc.glimpse_keys = ad::matmul(enc.nodes, t.param(p, "decoder.glimpse.wk"));
  enc.glimpse_values = ad::matmul(enc.nodes, t.param(p, "decoder.glimpse.wv"));
  return enc;
}

Var context_embedding(Tape& t, const ModelConfig& c, const Encoded& enc, const Instance& inst,
                      const std::vector<const DecodeState*>& states) {
  const auto r = static_cast<Eigen::Index>(states.size());
  std::vector<int> last, first;
  Tensor remaining(r, 1);
  for (Eigen::Index i = 0; i < r; ++i) {
    const DecodeState& s = *states[static_cast<std::size_t>(i)];
    last.push_back(s.current);
    first.push_back(s.first());
    remaining(i, 0) = s.remaining;
  }
  Var graph = ad::broadcast_rows(enc.graph, r);
  switch (c.kind.family) {
    case Family::motsp1:
    case Family::motsp2: {
      const Var parts[] = {graph, ad::gather_rows(enc.nodes, last), ad::gather_rows(enc.nodes, first)};
      return ad::concat_cols(parts);
    }
    case Family::mocvrp: {
      const Var parts[] = {graph, ad::gather_rows(enc.nodes, last), t.constant(remaining)};
      return ad::concat_cols(parts);
    }
    case Family::mokp: {
      const Var parts[] = {graph, t.constant(remaining)};
      return ad::concat_cols(parts);
    }
  }
  (void)inst;
  return graph;
}

Tensor additive_mask(const Instance& inst, const std::vector<const DecodeState*>& states) {
  Tensor mask(static_cast<Eigen::Index>(states.size()), inst.action_count());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Mask m = problems::feasible_mask(inst, *states[i]);
    if (!m.any()) throw DataError("decode step with every action masked");
    for (Eigen::Index a = 0; a < m.size(); ++a)
      mask(static_cast<Eigen::Index>(i), a) = m(a) ? 0.0 : ad::kMaskedLogit;
  }
  return mask;
}

StepOutput decode_step(Tape& t, const ModelConfig& c, const ParamStore& p, const Encoded& enc, Var context,
                       const Tensor& mask, const std::string& head_path) {
  Tape::Scope scope(t, "decoder");
  if (context.cols() != c.context_dim())
    throw ShapeError("context has " + std::to_string(context.cols()) + " columns, expected " +
                     std::to_string(c.context_dim()));
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    if ((mask.row(i).array() <= ad::kMaskedLogit).all()) throw DataError("decode step with every action masked");
  Var q = ad::matmul(context, t.param(p, "decoder.wq"));
  Var glimpse = attend(c, q, enc.glimpse_keys, enc.glimpse_values, mask);
  Var qc = ad::add(ad::matmul(glimpse, t.param(p, "decoder.glimpse.wo")), t.param(p, "decoder.glimpse.bo"));
  Var keys = ad::matmul(enc.nodes, t.param(p, head_path));
  const double norm = 1.0 / std::sqrt(static_cast<double>(c.d_model) / c.n_heads);
  Var u = ad::scale(ad::tanh(ad::scale(ad::matmul_nt(qc, keys), norm)), c.clip);
  return {ad::softmax_rows(u, mask), u};
}

std::vector<StepOutput> multi_task_decode_step(Tape& t, const ModelConfig& c, const ParamStore& p, const Encoded& enc,
                                               const std::vector<Var>& contexts, const std::vector<Tensor>& masks) {
  if (contexts.size() != masks.size()) throw ShapeError("one mask per task context is required");
  std::vector<StepOutput> out;
  for (std::size_t i = 0; i < contexts.size(); ++i)
    out.push_back(decode_step(t, c, p, enc, contexts[i], masks[i], task_head_path(static_cast<int>(i))));
  return out;
}

MultiTaskParams build_multitask(const ParamStore& meta, int ntilde) {
  if (ntilde < 1) throw UsageError("number of task heads must be >= 1");
  MultiTaskParams out;
  out.ntilde = ntilde;
  for (const auto& e : meta.entries())
    if (e.partition == ad::Partition::body) out.params.add(e.path, e.partition, e.value);
  const Tensor& head = meta.at(kHeadPath);
  for (int i = 0; i < ntilde; ++i) out.params.add(task_head_path(i), ad::Partition::head, head);
  return out;
}

namespace {

int sample_row(const Tensor& probs, Eigen::Index row, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_open = -1;
  for (Eigen::Index a = 0; a < probs.cols(); ++a) {
    const double pa = probs(row, a);
    if (pa <= 0.0) continue;
    last_open = static_cast<int>(a);
    acc += pa;
    if (u < acc) return last_open;
  }
  return last_open;
}

int argmax_row(const Tensor& probs, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index a = 1; a < probs.cols(); ++a)
    if (probs(row, a) > probs(row, best)) best = static_cast<int>(a);
  return best;
}

}  // namespace

MultiStart rollout_multistart(Tape& t, const ModelConfig& c, const ParamStore& p, const Encoded& enc,
                              const Instance& inst, const RolloutOptions& opt) {
  check_features(c, inst);
  if (opt.mode == DecodeMode::sample && !opt.rng) throw UsageError("sample mode needs a random source");
  if (opt.mode == DecodeMode::forced && !opt.forced) throw UsageError("forced mode needs action sequences");

  MultiStart out;
  std::vector<DecodeState> states;
  for (int k = 0; k < inst.n; ++k) {
    if (!problems::feasible_start(inst, k)) {
      out.skipped_starts.push_back(k);
      continue;
    }
    states.push_back(problems::initial_state(inst, k));
    Rollout r;
    r.start = k;
    out.rollouts.push_back(std::move(r));
  }
  if (opt.mode == DecodeMode::forced && opt.forced->size() != states.size())
    throw DataError("forced mode got " + std::to_string(opt.forced->size()) + " sequences for " +
                    std::to_string(states.size()) + " starts");

  while (true) {
    std::vector<int> rows;
    std::vector<const DecodeState*> active;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (!states[i].done) {
        rows.push_back(static_cast<int>(i));
        active.push_back(&states[i]);
      }
    if (rows.empty()) break;
    Var ctx = context_embedding(t, c, enc, inst, active);
    StepOutput step = decode_step(t, c, p, enc, ctx, additive_mask(inst, active), opt.head_path);
    const Tensor& probs = step.probabilities.value();
    std::vector<int> chosen(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      switch (opt.mode) {
        case DecodeMode::greedy: chosen[j] = argmax_row(probs, row); break;
        case DecodeMode::sample: chosen[j] = sample_row(probs, row, *opt.rng); break;
        case DecodeMode::forced: {
          const auto& seq = (*opt.forced)[static_cast<std::size_t>(rows[j])];
          const auto pos = static_cast<std::size_t>(active[j]->t());
          if (pos >= seq.size()) throw DataError("forced sequence ends before the rollout does");
          chosen[j] = seq[pos];
          break;
        }
      }
    }
    Var log_p = ad::log(ad::pick(step.probabilities, chosen));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out.rollouts[static_cast<std::size_t>(rows[j])].log_likelihood += log_p.value()(static_cast<Eigen::Index>(j), 0);
      problems::advance(inst, states[static_cast<std::size_t>(rows[j])], chosen[j]);
    }
    out.steps.push_back({std::move(rows), log_p});
  }

  for (std::size_t i = 0; i < states.size(); ++i) {
    problems::Solution sol = problems::finish(inst, states[i]);
    out.rollouts[i].actions = std::move(sol.sequence);
    out.rollouts[i].objectives = std::move(sol.objectives);
    if (opt.mode == DecodeMode::forced && out.rollouts[i].actions != (*opt.forced)[i])
      throw DataError("forced sequence for start " + std::to_string(out.rollouts[i].start) + " is not a rollout");
  }
  return out;
}

MultiStart rollout_multistart(const ModelConfig& c, const ParamStore& p, const Instance& inst,
                              const RolloutOptions& opt) {
  Tape t(false);
  Encoded enc = encode(t, c, p, inst);
  return rollout_multistart(t, c, p, enc, inst, opt);
}

Var weighted_log_likelihood(Tape& t, const MultiStart& result, const std::vector<double>& weights) {
  if (weights.size() != result.rollouts.size())
    throw ShapeError("one weight per rollout is required");
  Tensor zero = Tensor::Zero(1, 1);
  Var total = t.constant(zero);
  for (const auto& step : result.steps) {
    Tensor w(static_cast<Eigen::Index>(step.rows.size()), 1);
    for (std::size_t j = 0; j < step.rows.size(); ++j)
      w(static_cast<Eigen::Index>(j), 0) = weights[static_cast<std::size_t>(step.rows[j])];
    total = ad::add(total, ad::sum(ad::hadamard_const(step.log_p, w)));
  }
  return total;
}

}  // namespace emnh::policy
