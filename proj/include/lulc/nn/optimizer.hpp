#pragma once

#include <string>

#include "lulc/nn/network.hpp"

namespace lulc::nn {

template <typename T = float>
struct OptimizerState {
  double lr = 1e-3;
  double momentum = 0.9;
  ParamMap<T> velocity;

  void validate() const {
    // lr = 0 is accepted: it turns a training run into a pass that leaves the parameters untouched.
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  }
};

/// Zero velocity for every parameter.
template <typename T>
OptimizerState<T> make_optimizer(const ParamMap<T>& params, double lr = 1e-3, double momentum = 0.9) {
  OptimizerState<T> s{lr, momentum, {}};
  for (const auto& [name, p] : params) s.velocity.emplace(name, Tensor<T>(p.shape()));
  s.validate();
  return s;
}

/// Heavy-ball update, in place on `params` and `state.velocity`:
///   v <- momentum * v + g;  theta <- theta - lr * v
/// Everything is checked before anything is modified.
template <typename T>
void sgd_momentum_step(ParamMap<T>& params, const ParamMap<T>& grads, OptimizerState<T>& state) {
  state.validate();
  for (const auto& [name, p] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw ShapeError("no gradient for parameter '" + name + "'");
    if (g->second.shape() != p.shape())
      throw ShapeError("gradient for '" + name + "' has shape " + shape_string(g->second.shape()) + ", parameter has " +
                       shape_string(p.shape()));
    auto v = state.velocity.find(name);
    if (v == state.velocity.end()) throw ShapeError("no velocity for parameter '" + name + "'");
    if (v->second.shape() != p.shape())
      throw ShapeError("velocity for '" + name + "' has shape " + shape_string(v->second.shape()) + ", parameter has " +
                       shape_string(p.shape()));
  }
  for (const auto& [name, g] : grads)
    if (!params.count(name)) throw ShapeError("gradient for unknown parameter '" + name + "'");
  for (const auto& [name, v] : state.velocity)
    if (!params.count(name)) throw ShapeError("velocity for unknown parameter '" + name + "'");

  const T lr = static_cast<T>(state.lr), mu = static_cast<T>(state.momentum);
  for (auto& [name, p] : params) {
    const Tensor<T>& g = grads.at(name);
    Tensor<T>& v = state.velocity.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = mu * v[i] + g[i];
      p[i] -= lr * v[i];
    }
  }
}

}  // namespace lulc::nn
