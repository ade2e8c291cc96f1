#include <doctest.h>

#include "emnh/autodiff/adam.hpp"
#include "emnh/autodiff/checkpoint.hpp"
#include "emnh/autodiff/graph.hpp"
#include "emnh/core/rng.hpp"
#include "gradcheck_cases.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

using namespace emnh;
using namespace emnh::ad;

using testing::random_tensor;

TEST_CASE("matmul with identity returns the operand") {
  Tape tape;
  Rng rng(1);
  Tensor x = random_tensor(rng, 3, 4);
  Var out = matmul(tape.constant(Tensor::Identity(3, 3)), tape.constant(x));
  CHECK(bitwise_equal(out.value(), x));
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape tape;
  Var s = softmax_rows(tape.constant(Tensor::Zero(1, 3)));
  for (int i = 0; i < 3; ++i) CHECK(s.value()(0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("clipped compatibility saturates at the clip value") {
  Tape tape;
  Tensor u(1, 1);
  u(0, 0) = 1000.0;
  Var c = 10.0 * ad::tanh(tape.constant(u));
  CHECK(std::abs(c.value()(0, 0) - 10.0) < 1e-9);
}

TEST_CASE("masked softmax gives zero mass to masked entries") {
  Tape tape;
  Tensor mask = Tensor::Zero(1, 4);
  mask(0, 1) = kMaskedLogit;
  mask(0, 3) = kMaskedLogit;
  Tensor logits(1, 4);
  logits << 0.3, 50.0, -0.2, 1e3;
  Var s = softmax_rows(tape.constant(logits), mask);
  CHECK(s.value()(0, 1) == 0.0);
  CHECK(s.value()(0, 3) == 0.0);
  CHECK(std::abs(s.value().sum() - 1.0) < 1e-12);
}

TEST_CASE("softmax rows are distributions for random logits and masks") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    Tape tape;
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index c = 1 + static_cast<Eigen::Index>(rng.below(7));
    Tensor mask = Tensor::Zero(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 1; j < c; ++j)
        if (rng.uniform() < 0.4) mask(i, j) = kMaskedLogit;
    Var s = softmax_rows(tape.constant(random_tensor(rng, r, c, -30, 30)), mask);
    CHECK((s.value().array() >= 0.0).all());
    for (Eigen::Index i = 0; i < r; ++i) CHECK(std::abs(s.value().row(i).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("shape mismatch names the offending node") {
  Tape tape;
  Tape::Scope scope(tape, "encoder");
  Var a = tape.constant(Tensor::Zero(2, 3));
  Var b = tape.constant(Tensor::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("encoder/matmul") != std::string::npos);
    CHECK(msg.find("(2 x 3)") != std::string::npos);
  }
}

TEST_CASE("non-finite intermediate reports the node path") {
  Tape tape;
  Tape::Scope outer(tape, "decoder");
  Tape::Scope inner(tape, "glimpse");
  Var a = tape.constant(Tensor::Constant(1, 2, 1e300));
  try {
    scale(a, 1e300);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("decoder.glimpse/scale") != std::string::npos);
  }
}

TEST_CASE("gradient of sum(W x) is x broadcast over rows") {
  ParamStore params;
  Rng rng(3);
  params.add("w", Partition::body, random_tensor(rng, 2, 3));
  params.add("unused", Partition::head, random_tensor(rng, 2, 2));
  Tensor x = random_tensor(rng, 3, 1);
  GraphFn graph = [](Tape& t, const NamedVars& in, const ParamStore& p) {
    return NamedVars{{"loss", sum(matmul(t.param(p, "w"), in.at("x")))}};
  };
  Recorded rec = forward(graph, {{"x", x}}, params);
  NamedTensors g = gradients(rec, "loss", params);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(g.at("w")(r, c) == doctest::Approx(x(c, 0)));
  CHECK(g.at("unused").isZero(0.0));
}

TEST_CASE("non-scalar loss is rejected") {
  Tape tape;
  Var a = tape.constant(Tensor::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(a), ShapeError);
}

TEST_CASE("forward is pure") {
  ParamStore params;
  Rng rng(5);
  params.add("w1", Partition::body, random_tensor(rng, 4, 5));
  params.add("w2", Partition::head, random_tensor(rng, 5, 2));
  Tensor x = random_tensor(rng, 3, 4);
  GraphFn graph = [](Tape& t, const NamedVars& in, const ParamStore& p) {
    Var h = ad::tanh(matmul(in.at("x"), t.param(p, "w1")));
    return NamedVars{{"y", softmax_rows(matmul(h, t.param(p, "w2")))}};
  };
  Recorded a = forward(graph, {{"x", x}}, params);
  Recorded b = forward(graph, {{"x", x}}, params);
  CHECK(bitwise_equal(a.output("y"), b.output("y")));
}

TEST_CASE("two-layer network gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    ParamStore params;
    params.add("l1.w", Partition::body, random_tensor(rng, 4, 6));
    params.add("l1.b", Partition::body, random_tensor(rng, 1, 6));
    params.add("l2.w", Partition::head, random_tensor(rng, 6, 3));
    const Tensor x = random_tensor(rng, 5, 4);
    const Tensor r = random_tensor(rng, 5, 3);
    LossFn loss = [&](Tape& t, const ParamStore& p) {
      Var h = ad::tanh(add(matmul(t.constant(x), t.param(p, "l1.w")), t.param(p, "l1.b")));
      Var y = softmax_rows(matmul(h, t.param(p, "l2.w")));
      return sum(hadamard_const(y, r));
    };
    auto report = check_gradients(loss, params, 1e-4);
    CHECK_MESSAGE(report.passed, "worst relative error " << report.worst);
  }
}

TEST_CASE("every primitive passes gradient checks over 100 seeds") {
  for (const auto& [name, worst] : testing::primitive_gradcheck(100))
    CHECK_MESSAGE(worst < 1e-4, name << " worst relative error " << worst);
}

TEST_CASE("gradient check of a linear graph is at rounding level") {
  ParamStore params;
  Rng rng(9);
  params.add("w", Partition::body, random_tensor(rng, 3, 3));
  const Tensor x = random_tensor(rng, 2, 3);
  LossFn loss = [&](Tape& t, const ParamStore& p) { return sum(matmul(t.constant(x), t.param(p, "w"))); };
  auto report = check_gradients(loss, params, 1e-4);
  CHECK(report.passed);
  CHECK(report.worst < 1e-8);
}

TEST_CASE("gradient check flags a wrong backward rule") {
  ParamStore params;
  Rng rng(11);
  params.add("w", Partition::body, random_tensor(rng, 2, 2));
  // y = w^2 elementwise with a deliberately wrong derivative (w instead of 2w)
  LossFn loss = [](Tape& t, const ParamStore& p) {
    Var w = t.param(p, "w");
    const int ids[] = {w.id};
    Var sq = t.emplace("bad_square", w.value().cwiseProduct(w.value()), ids,
                       [iw = w.id](Tape& tp, const Tensor& g) { tp.accumulate(iw, g.cwiseProduct(tp.value(iw))); });
    return sum(sq);
  };
  auto report = check_gradients(loss, params, 1e-4);
  CHECK_FALSE(report.passed);
  CHECK(report.worst > 0.1);
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  ParamStore params;
  Rng rng(2);
  params.add("w", Partition::body, random_tensor(rng, 3, 2));
  const ParamStore before = params;
  AdamState state;
  auto zeros = params.zeros_like();
  for (int i = 0; i < 5; ++i) adam_step(params, zeros, state);
  CHECK(params == before);
  CHECK(state.step == 5);
  CHECK(state.first_moment.at("w").isZero(0.0));
  CHECK(state.second_moment.at("w").isZero(0.0));
}

TEST_CASE("first Adam step moves each entry by the learning rate against the gradient sign") {
  ParamStore params;
  params.add("w", Partition::body, Tensor::Zero(1, 3));
  NamedTensors g{{"w", Tensor(1, 3)}};
  g["w"] << 0.5, -2.0, 1e-3;
  AdamState state(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  adam_step(params, g, state);
  // bias correction is exact at t=1: update = -lr * g / (|g| + eps)
  for (int i = 0; i < 3; ++i) {
    const double gi = g["w"](0, i);
    CHECK(params.at("w")(0, i) == doctest::Approx(-1e-3 * gi / (std::abs(gi) + 1e-8)).epsilon(1e-12));
    CHECK(std::abs(std::abs(params.at("w")(0, i)) - 1e-3) < 1e-7);
  }
}

TEST_CASE("Adam under a constant gradient approaches lr * sign(g)") {
  ParamStore params;
  params.add("w", Partition::body, Tensor::Zero(1, 2));
  NamedTensors g{{"w", Tensor(1, 2)}};
  g["w"] << 3.0, -0.25;
  AdamState state(AdamConfig{1e-2, 0.9, 0.999, 1e-8});
  Tensor prev = params.at("w");
  for (int i = 0; i < 2000; ++i) {
    prev = params.at("w");
    adam_step(params, g, state);
  }
  Tensor step = params.at("w") - prev;
  CHECK(step(0, 0) == doctest::Approx(-1e-2).epsilon(1e-6));
  CHECK(step(0, 1) == doctest::Approx(1e-2).epsilon(1e-6));
  CHECK(state.step == 2000);
}

TEST_CASE("Adam requires a gradient for every parameter") {
  ParamStore params;
  params.add("a", Partition::body, Tensor::Zero(1, 1));
  params.add("b", Partition::head, Tensor::Zero(1, 1));
  AdamState state;
  NamedTensors g{{"a", Tensor::Ones(1, 1)}};
  CHECK_THROWS_AS(adam_step(params, g, state), DataError);
  CHECK(state.step == 0);
}

TEST_CASE("Adam skips frozen parameters") {
  ParamStore params;
  params.add("a", Partition::body, Tensor::Ones(1, 2));
  params.add("b", Partition::head, Tensor::Ones(1, 2));
  AdamState state;
  NamedTensors g{{"a", Tensor::Ones(1, 2)}, {"b", Tensor::Ones(1, 2)}};
  adam_step(params, g, state, [](const ParamStore::Entry& e) { return e.partition == Partition::head; });
  CHECK(bitwise_equal(params.at("a"), Tensor::Ones(1, 2)));
  CHECK(params.at("b")(0, 0) < 1.0);
}

TEST_CASE("base64 matches reference encodings") {
  auto enc = [](std::string s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foobar") == "Zm9vYmFy");
  auto dec = base64_decode("Zm9vYg==");
  CHECK(std::string(dec.begin(), dec.end()) == "foob");
  CHECK_THROWS_AS(base64_decode("Zm9"), DataError);
  CHECK_THROWS_AS(base64_decode("Zm=v"), DataError);
}

TEST_CASE("checkpoints restore parameters and Adam state bitwise") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Checkpoint c;
    c.problem_kind = "motsp1";
    c.hyperparameters = {{"d_model", 8}};
    c.parameters.add("encoder.w", Partition::body,
                     random_tensor(rng, 1 + rng.below(4), 1 + rng.below(4), -1e3, 1e3));
    c.parameters.add("decoder.wk", Partition::head, random_tensor(rng, 3, 3));
    AdamState s;
    adam_step(c.parameters, c.parameters.zeros_like(), s);
    c.adam_state = s;
    const Checkpoint back = checkpoint_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(back.parameters == c.parameters);
    REQUIRE(back.adam_state.has_value());
    CHECK(back.adam_state->step == 1);
    CHECK(bitwise_equal(back.adam_state->first_moment.at("encoder.w"), s.first_moment.at("encoder.w")));
    CHECK(back.hyperparameters == c.hyperparameters);
  }
}

TEST_CASE("checkpoint decoding rejects payloads that do not match the shape") {
  nlohmann::json j = {{"format_version", 1},
                      {"problem_kind", "mokp"},
                      {"parameters",
                       {{{"path", "w"}, {"partition", "body"}, {"shape", {2, 2}},
                         {"values", encode_tensor_values(Tensor::Zero(1, 1))}}}}};
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
  j["format_version"] = 99;
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
}
