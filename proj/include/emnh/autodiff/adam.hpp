#pragma once

#include "emnh/autodiff/param_store.hpp"

#include <cstdint>
#include <functional>

namespace emnh::ad {

/// Betas and epsilon are the customary defaults; only the learning rate is
/// pinned by the training recipe.
struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  NamedTensors first_moment;
  NamedTensors second_moment;

  explicit AdamState(AdamConfig c = {}) : config(c) {}
};

using TrainablePredicate = std::function<bool(const ParamStore::Entry&)>;

/// One bias-corrected Adam update. Every parameter needs a gradient entry of
/// matching shape (DataError otherwise). Entries rejected by `trainable` keep
/// their value and moments untouched.
void adam_step(ParamStore& params, const NamedTensors& grads, AdamState& state,
               const TrainablePredicate& trainable = {});

}  // namespace emnh::ad
