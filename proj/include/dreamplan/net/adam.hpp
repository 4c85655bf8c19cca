#ifndef DREAMPLAN_NET_ADAM_HPP_
#define DREAMPLAN_NET_ADAM_HPP_

#include "dreamplan/net/mlp.hpp"

namespace dreamplan::net {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one pair per layer tensor.
struct AdamState {
  AdamConfig config;
  std::vector<Layer> m;
  std::vector<Layer> v;
  long step = 0;
};

AdamState make_adam(const MlpParams& params, const AdamConfig& config);

// One bias-corrected Adam update, applied in place. Rejects non-finite
// gradients with a ValueError naming the offending layer; parameters are
// untouched in that case.
void adam_step(AdamState& state, MlpParams& params, const Gradients& grads);

// Same update rule for a bare parameter vector (e.g. a log-stddev vector).
struct AdamVecState {
  AdamConfig config;
  Vec m;
  Vec v;
  long step = 0;
};

AdamVecState make_adam_vec(const Vec& param, const AdamConfig& config);
void adam_step_vec(AdamVecState& state, Vec& param, const Vec& grad);

}  // namespace dreamplan::net

#endif  // DREAMPLAN_NET_ADAM_HPP_
