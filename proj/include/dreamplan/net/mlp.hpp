#ifndef DREAMPLAN_NET_MLP_HPP_
#define DREAMPLAN_NET_MLP_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "dreamplan/rng.hpp"

namespace dreamplan::net {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { kTanh, kElu };

const char* activation_name(Activation act);
Activation activation_from_name(const std::string& name);

// One affine layer, y = W x + b. W is (out x in).
struct Layer {
  Mat W;
  Vec b;
};

// Fully connected network with a shared hidden activation and a linear
// output layer.
struct MlpParams {
  std::vector<Layer> layers;
  Activation activation = Activation::kTanh;

  int in_dim() const;
  int out_dim() const;
  int layer_count() const { return static_cast<int>(layers.size()); }
  std::size_t parameter_count() const;

  // Throws ShapeError if layer dimensions do not chain, ValueError if any
  // parameter is non-finite.
  void validate() const;
};

// Weights uniform in +-sqrt(1/fan_in), biases zero. Layer sizes are
// [in, hidden..., out]; `hidden` may be empty for a single affine map.
MlpParams make_mlp(int in, const std::vector<int>& hidden, int out,
                   Activation activation, Rng& rng);

// Gradients with the same shapes as the parameters they refer to.
struct Gradients {
  std::vector<Layer> layers;
};

Gradients zero_gradients(const MlpParams& params);

// Stored intermediates from a forward pass: activations[0] is the input,
// activations[i] the output of layer i-1 after its nonlinearity,
// preactivations[i] the affine output of layer i.
struct ForwardCache {
  std::vector<Vec> activations;
  std::vector<Vec> preactivations;
};

struct BatchCache {
  std::vector<Mat> activations;
  std::vector<Mat> preactivations;
};

Vec mlp_forward(const MlpParams& params, const Vec& input);
Vec mlp_forward(const MlpParams& params, const Vec& input, ForwardCache& cache);

// Columns of `inputs` are independent samples.
Mat mlp_forward_batch(const MlpParams& params, const Mat& inputs);
Mat mlp_forward_batch(const MlpParams& params, const Mat& inputs,
                      BatchCache& cache);

// Reverse-mode pass. `upstream` is dL/d(output); gradients are accumulated
// into `grads` (callers zero them when starting a fresh batch). Returns
// dL/d(input).
Vec mlp_backward(const MlpParams& params, const ForwardCache& cache,
                 const Vec& upstream, Gradients& grads);

// Convenience: runs its own forward pass first.
Vec mlp_backward(const MlpParams& params, const Vec& input, const Vec& upstream,
                 Gradients& grads);

// Batched reverse-mode pass; columns of `upstream` match columns of the
// cached forward batch. Gradients accumulate the sum over columns.
Mat mlp_backward_batch(const MlpParams& params, const BatchCache& cache,
                       const Mat& upstream, Gradients& grads);

}  // namespace dreamplan::net

#endif  // DREAMPLAN_NET_MLP_HPP_
