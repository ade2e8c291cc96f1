#include "emnh/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>

namespace emnh::ad {

const Tensor& Recorded::output(const std::string& name) const {
  auto it = outputs.find(name);
  if (it == outputs.end()) throw UsageError("graph has no output named '" + name + "'");
  return it->second.value();
}

Recorded forward(const GraphFn& graph, const NamedTensors& inputs, const ParamStore& params) {
  Recorded r{std::make_unique<Tape>(), {}};
  NamedVars in;
  for (const auto& [name, value] : inputs) in.emplace(name, r.tape->constant(value));
  r.outputs = graph(*r.tape, in, params);
  return r;
}

NamedTensors gradients(Recorded& recorded, const std::string& loss_output, const ParamStore& params) {
  auto it = recorded.outputs.find(loss_output);
  if (it == recorded.outputs.end()) throw UsageError("graph has no output named '" + loss_output + "'");
  recorded.tape->backward(it->second);
  return recorded.tape->gradients(params);
}

GradCheckReport check_gradients(const LossFn& loss, const ParamStore& params, double tolerance, double step,
                                double floor) {
  NamedTensors analytic;
  {
    Tape tape;
    Var l = loss(tape, params);
    tape.backward(l);
    analytic = tape.gradients(params);
  }
  auto evaluate = [&](const ParamStore& p) {
    Tape tape(false);
    return loss(tape, p).value()(0, 0);
  };

  GradCheckReport report;
  report.tolerance = tolerance;
  ParamStore probe = params;
  for (auto& e : probe.entries()) {
    double worst = 0.0;
    const Tensor& a = analytic.at(e.path);
    for (Eigen::Index i = 0; i < e.value.size(); ++i) {
      const double original = e.value.data()[i];
      e.value.data()[i] = original + step;
      const double plus = evaluate(probe);
      e.value.data()[i] = original - step;
      const double minus = evaluate(probe);
      e.value.data()[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(a.data()[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a.data()[i] - numeric) / denom);
    }
    report.max_relative_error[e.path] = worst;
    report.worst = std::max(report.worst, worst);
  }
  report.passed = report.worst < tolerance;
  return report;
}

GradCheckReport check_gradients(const GraphFn& graph, const NamedTensors& inputs, const ParamStore& params,
                                const std::string& loss_output, double tolerance, double step, double floor) {
  LossFn loss = [&](Tape& tape, const ParamStore& p) {
    NamedVars in;
    for (const auto& [name, value] : inputs) in.emplace(name, tape.constant(value));
    NamedVars out = graph(tape, in, p);
    auto it = out.find(loss_output);
    if (it == out.end()) throw UsageError("graph has no output named '" + loss_output + "'");
    return it->second;
  };
  return check_gradients(loss, params, tolerance, step, floor);
}

}  // namespace emnh::ad
