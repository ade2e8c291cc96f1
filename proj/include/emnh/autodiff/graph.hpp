#pragma once

#include "emnh/autodiff/tape.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>

namespace emnh::ad {

using NamedVars = std::map<std::string, Var>;

/// A graph description: builds named outputs on a tape from named inputs and
/// the bound parameters (bind them with `tape.param(params, path)`).
using GraphFn = std::function<NamedVars(Tape&, const NamedVars& inputs, const ParamStore& params)>;

/// A recorded forward pass. Owns its tape so that output handles stay valid.
struct Recorded {
  std::unique_ptr<Tape> tape;
  NamedVars outputs;

  const Tensor& output(const std::string& name) const;
};

Recorded forward(const GraphFn& graph, const NamedTensors& inputs, const ParamStore& params);

/// dLoss/dParam for every parameter in `params` (zeros where unreachable).
NamedTensors gradients(Recorded& recorded, const std::string& loss_output, const ParamStore& params);

struct GradCheckReport {
  /// Worst relative error per parameter path.
  std::map<std::string, double> max_relative_error;
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares reverse-mode gradients of the scalar output `loss_output` with
/// central finite differences, entry by entry. The relative error of one
/// entry is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckReport check_gradients(const GraphFn& graph, const NamedTensors& inputs, const ParamStore& params,
                                const std::string& loss_output, double tolerance, double step = 1e-5,
                                double floor = 1e-6);

/// Same check for a loss expressed directly as a function of the parameters.
using LossFn = std::function<Var(Tape&, const ParamStore&)>;
GradCheckReport check_gradients(const LossFn& loss, const ParamStore& params, double tolerance,
                                double step = 1e-5, double floor = 1e-6);

}  // namespace emnh::ad
