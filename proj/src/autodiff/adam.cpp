#include "emnh/autodiff/adam.hpp"

#include <cmath>

namespace emnh::ad {

void adam_step(ParamStore& params, const NamedTensors& grads, AdamState& state,
               const TrainablePredicate& trainable) {
  for (const auto& e : params.entries()) {
    auto it = grads.find(e.path);
    if (it == grads.end()) throw DataError("missing gradient for parameter '" + e.path + "'");
    if (it->second.rows() != e.value.rows() || it->second.cols() != e.value.cols())
      throw ShapeError("gradient shape does not match parameter '" + e.path + "'");
  }
  state.step += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (auto& e : params.entries()) {
    if (trainable && !trainable(e)) continue;
    const Tensor& g = grads.at(e.path);
    auto [m_it, m_new] = state.first_moment.try_emplace(e.path, Tensor::Zero(g.rows(), g.cols()));
    auto [v_it, v_new] = state.second_moment.try_emplace(e.path, Tensor::Zero(g.rows(), g.cols()));
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    const auto m_hat = m.array() / correction1;
    const auto v_hat = v.array() / correction2;
    e.value.array() -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
  }
}

}  // namespace emnh::ad
