#include "dreamplan/net/mlp.hpp"

#include <cmath>
#include <sstream>

#include "dreamplan/error.hpp"

namespace dreamplan::net {

namespace {

double activate(Activation act, double x) {
  switch (act) {
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kElu:
      return x > 0.0 ? x : std::expm1(x);
  }
  return x;
}

// Derivative expressed in terms of the preactivation x.
double activate_grad(Activation act, double x) {
  switch (act) {
    case Activation::kTanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kElu:
      return x > 0.0 ? 1.0 : std::exp(x);
  }
  return 1.0;
}

}  // namespace

const char* activation_name(Activation act) {
  return act == Activation::kTanh ? "tanh" : "elu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "elu") return Activation::kElu;
  throw ValueError("unknown activation: " + name);
}

int MlpParams::in_dim() const {
  if (layers.empty()) throw ShapeError("mlp has no layers");
  return static_cast<int>(layers.front().W.cols());
}

int MlpParams::out_dim() const {
  if (layers.empty()) throw ShapeError("mlp has no layers");
  return static_cast<int>(layers.back().W.rows());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers) {
    n += static_cast<std::size_t>(layer.W.size() + layer.b.size());
  }
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("mlp has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (layer.b.size() != layer.W.rows()) {
      std::ostringstream msg;
      msg << "layer " << i << ": bias length " << layer.b.size()
          << " does not match weight rows " << layer.W.rows();
      throw ShapeError(msg.str());
    }
    if (i > 0 && layers[i - 1].W.rows() != layer.W.cols()) {
      std::ostringstream msg;
      msg << "layer " << i << ": input width " << layer.W.cols()
          << " does not match previous layer output " << layers[i - 1].W.rows();
      throw ShapeError(msg.str());
    }
    if (!layer.W.allFinite() || !layer.b.allFinite()) {
      std::ostringstream msg;
      msg << "layer " << i << ": non-finite parameters";
      throw ValueError(msg.str());
    }
  }
}

MlpParams make_mlp(int in, const std::vector<int>& hidden, int out,
                   Activation activation, Rng& rng) {
  if (in <= 0 || out <= 0) throw ShapeError("mlp dimensions must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ShapeError("mlp hidden widths must be positive");
  }

  std::vector<int> dims;
  dims.push_back(in);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);

  MlpParams params;
  params.activation = activation;
  params.layers.resize(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    int fan_in = dims[i];
    int fan_out = dims[i + 1];
    double bound = std::sqrt(1.0 / fan_in);
    Layer& layer = params.layers[i];
    layer.W.resize(fan_out, fan_in);
    // Column-major fill order; fixed so a given seed always yields the same
    // parameters.
    for (int c = 0; c < fan_in; ++c) {
      for (int r = 0; r < fan_out; ++r) {
        layer.W(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.b = Vec::Zero(fan_out);
  }
  return params;
}

Gradients zero_gradients(const MlpParams& params) {
  Gradients grads;
  grads.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    grads.layers[i].W = Mat::Zero(params.layers[i].W.rows(),
                                  params.layers[i].W.cols());
    grads.layers[i].b = Vec::Zero(params.layers[i].b.size());
  }
  return grads;
}

namespace {

void check_input(const MlpParams& params, Eigen::Index rows) {
  if (rows != params.layers.front().W.cols()) {
    std::ostringstream msg;
    msg << "input size " << rows << " does not match mlp input width "
        << params.layers.front().W.cols();
    throw ShapeError(msg.str());
  }
}

}  // namespace

Vec mlp_forward(const MlpParams& params, const Vec& input) {
  ForwardCache cache;
  return mlp_forward(params, input, cache);
}

Vec mlp_forward(const MlpParams& params, const Vec& input, ForwardCache& cache) {
  if (params.layers.empty()) throw ShapeError("mlp has no layers");
  check_input(params, input.size());

  const int n = params.layer_count();
  cache.activations.assign(1, input);
  cache.preactivations.clear();
  cache.preactivations.reserve(n);

  Vec x = input;
  for (int i = 0; i < n; ++i) {
    Vec z = params.layers[i].W * x + params.layers[i].b;
    cache.preactivations.push_back(z);
    if (i + 1 < n) {
      x = z.unaryExpr([&](double v) { return activate(params.activation, v); });
    } else {
      x = z;  // linear output layer
    }
    cache.activations.push_back(x);
  }
  return x;
}

Mat mlp_forward_batch(const MlpParams& params, const Mat& inputs) {
  BatchCache cache;
  return mlp_forward_batch(params, inputs, cache);
}

Mat mlp_forward_batch(const MlpParams& params, const Mat& inputs,
                      BatchCache& cache) {
  if (params.layers.empty()) throw ShapeError("mlp has no layers");
  check_input(params, inputs.rows());

  const int n = params.layer_count();
  cache.activations.assign(1, inputs);
  cache.preactivations.clear();
  cache.preactivations.reserve(n);

  Mat x = inputs;
  for (int i = 0; i < n; ++i) {
    Mat z = (params.layers[i].W * x).colwise() + params.layers[i].b;
    cache.preactivations.push_back(z);
    if (i + 1 < n) {
      if (params.activation == Activation::kTanh) {
        x = z.array().tanh();
      } else {
        x = z.unaryExpr(
            [&](double v) { return activate(params.activation, v); });
      }
    } else {
      x = z;
    }
    cache.activations.push_back(x);
  }
  return x;
}

Vec mlp_backward(const MlpParams& params, const ForwardCache& cache,
                 const Vec& upstream, Gradients& grads) {
  const int n = params.layer_count();
  if (static_cast<int>(cache.preactivations.size()) != n) {
    throw ShapeError("forward cache does not match mlp depth");
  }
  if (upstream.size() != params.out_dim()) {
    throw ShapeError("upstream gradient size does not match mlp output");
  }
  if (static_cast<int>(grads.layers.size()) != n) {
    throw ShapeError("gradient buffer does not match mlp depth");
  }

  Vec delta = upstream;  // dL/dz for the layer being processed
  for (int i = n - 1; i >= 0; --i) {
    if (i + 1 < n) {
      const Vec& z = cache.preactivations[i];
      delta = delta.cwiseProduct(z.unaryExpr(
          [&](double v) { return activate_grad(params.activation, v); }));
    }
    grads.layers[i].W.noalias() += delta * cache.activations[i].transpose();
    grads.layers[i].b += delta;
    delta = (params.layers[i].W.transpose() * delta).eval();
  }
  return delta;  // dL/d(input)
}

Vec mlp_backward(const MlpParams& params, const Vec& input, const Vec& upstream,
                 Gradients& grads) {
  ForwardCache cache;
  mlp_forward(params, input, cache);
  return mlp_backward(params, cache, upstream, grads);
}

Mat mlp_backward_batch(const MlpParams& params, const BatchCache& cache,
                       const Mat& upstream, Gradients& grads) {
  const int n = params.layer_count();
  if (static_cast<int>(cache.preactivations.size()) != n) {
    throw ShapeError("forward cache does not match mlp depth");
  }
  if (upstream.rows() != params.out_dim() ||
      upstream.cols() != cache.activations[0].cols()) {
    throw ShapeError("upstream gradient shape does not match cached batch");
  }
  if (static_cast<int>(grads.layers.size()) != n) {
    throw ShapeError("gradient buffer does not match mlp depth");
  }

  Mat delta = upstream;
  for (int i = n - 1; i >= 0; --i) {
    if (i + 1 < n) {
      const Mat& z = cache.preactivations[i];
      if (params.activation == Activation::kTanh) {
        delta.array() *= 1.0 - z.array().tanh().square();
      } else {
        delta.array() *= z.unaryExpr([&](double v) {
                            return activate_grad(params.activation, v);
                          }).array();
      }
    }
    grads.layers[i].W.noalias() += delta * cache.activations[i].transpose();
    grads.layers[i].b += delta.rowwise().sum();
    delta = (params.layers[i].W.transpose() * delta).eval();
  }
  return delta;
}

}  // namespace dreamplan::net
