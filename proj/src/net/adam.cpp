#include "dreamplan/net/adam.hpp"

#include <cmath>
#include <sstream>

#include "dreamplan/error.hpp"

namespace dreamplan::net {

AdamState make_adam(const MlpParams& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.m.resize(params.layers.size());
  state.v.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& layer = params.layers[i];
    state.m[i].W = Mat::Zero(layer.W.rows(), layer.W.cols());
    state.m[i].b = Vec::Zero(layer.b.size());
    state.v[i].W = Mat::Zero(layer.W.rows(), layer.W.cols());
    state.v[i].b = Vec::Zero(layer.b.size());
  }
  return state;
}

namespace {

template <typename T>
void adam_tensor(const AdamConfig& c, double bc1, double bc2, T& param, T& m,
                 T& v, const T& grad) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * grad.array().square();
  param.array() -=
      c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
}

}  // namespace

void adam_step(AdamState& state, MlpParams& params, const Gradients& grads) {
  if (grads.layers.size() != params.layers.size() ||
      state.m.size() != params.layers.size()) {
    throw ShapeError("adam state/gradients do not match parameters");
  }
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    if (grads.layers[i].W.rows() != params.layers[i].W.rows() ||
        grads.layers[i].W.cols() != params.layers[i].W.cols() ||
        grads.layers[i].b.size() != params.layers[i].b.size()) {
      std::ostringstream msg;
      msg << "layer " << i << ": gradient shape does not match parameters";
      throw ShapeError(msg.str());
    }
    if (!grads.layers[i].W.allFinite() || !grads.layers[i].b.allFinite()) {
      std::ostringstream msg;
      msg << "layer " << i << ": non-finite gradient, update rejected";
      throw ValueError(msg.str());
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    adam_tensor(c, bc1, bc2, params.layers[i].W, state.m[i].W, state.v[i].W,
                grads.layers[i].W);
    adam_tensor(c, bc1, bc2, params.layers[i].b, state.m[i].b, state.v[i].b,
                grads.layers[i].b);
  }
}

AdamVecState make_adam_vec(const Vec& param, const AdamConfig& config) {
  AdamVecState state;
  state.config = config;
  state.m = Vec::Zero(param.size());
  state.v = Vec::Zero(param.size());
  return state;
}

void adam_step_vec(AdamVecState& state, Vec& param, const Vec& grad) {
  if (grad.size() != param.size() || state.m.size() != param.size()) {
    throw ShapeError("adam state/gradient do not match parameter vector");
  }
  if (!grad.allFinite()) {
    throw ValueError("non-finite gradient for parameter vector, update rejected");
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  adam_tensor(c, bc1, bc2, param, state.m, state.v, grad);
}

}  // namespace dreamplan::net
