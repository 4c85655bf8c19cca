#ifndef DREAMPLAN_TRAIN_PPO_HPP_
#define DREAMPLAN_TRAIN_PPO_HPP_

#include <cstdint>

#include "dreamplan/net/adam.hpp"
#include "dreamplan/net/mlp.hpp"
#include "dreamplan/rng.hpp"

namespace dreamplan::train {

using net::Mat;
using net::Vec;

// Teacher policy and its asymmetric critic. The actor is a diagonal gaussian
// with a state-independent log-stddev vector; the critic sees observation
// plus privileged signals.
struct ExpertPair {
  net::MlpParams actor_mean;
  Vec log_std;
  net::MlpParams critic;
};

struct PpoConfig {
  double clip_ratio = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double lr = 1e-3;
  int epochs = 4;
  int minibatch = 128;
  int rollout_steps = 32;  // steps collected per lane per iteration
  double entropy_coef = 0.003;
  double value_coef = 0.5;
  double value_clip = 0.2;
  double init_log_std = -1.2039728043259361;  // log(0.3)
  double log_std_min = -4.0;
  double log_std_max = 1.0;
};

// Flattened on-policy batch; columns are samples.
struct PpoBatch {
  Mat actor_inputs;
  Mat critic_inputs;
  Mat actions;      // pre-clamp samples the log-probs refer to
  Vec log_probs_old;
  Vec advantages;   // normalized by ppo_update
  Vec returns;
  Vec values_old;
};

struct PpoStats {
  double policy_loss = 0.0;  // clipped surrogate (entropy excluded)
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Diagonal gaussian log density.
double gaussian_log_prob(const Vec& mean, const Vec& log_std, const Vec& action);

// Column-wise log densities for a batch of means/actions.
Vec gaussian_log_prob_batch(const Mat& means, const Vec& log_std,
                            const Mat& actions);

// Per-batch advantage normalization: (a - mean) / (std + 1e-8). A constant
// batch (zero variance) maps to all zeros.
Vec normalize_advantages(const Vec& advantages);

// Clipped-surrogate loss and its gradients for one minibatch. Exposed
// separately so tests can compare the gradient against hand-derived values.
struct PolicyLossGrads {
  double surrogate = 0.0;     // -mean(min(ratio A, clip(ratio) A))
  double entropy = 0.0;       // gaussian entropy (state independent)
  double approx_kl = 0.0;     // mean(logp_old - logp_new)
  double clip_fraction = 0.0;
  net::Gradients actor_grads;  // of surrogate - entropy_coef * entropy
  Vec log_std_grad;
};

PolicyLossGrads policy_loss_and_grads(const ExpertPair& expert,
                                      const Mat& actor_inputs,
                                      const Mat& actions, const Vec& logp_old,
                                      const Vec& advantages,
                                      const PpoConfig& config);

struct ValueLossGrads {
  double loss = 0.0;
  net::Gradients critic_grads;  // of value_coef * loss
};

ValueLossGrads value_loss_and_grads(const ExpertPair& expert,
                                    const Mat& critic_inputs,
                                    const Vec& returns, const Vec& values_old,
                                    const PpoConfig& config);

struct PpoAdam {
  net::AdamState actor;
  net::AdamVecState log_std;
  net::AdamState critic;
};

PpoAdam make_ppo_adam(const ExpertPair& expert, const PpoConfig& config);

// Full PPO update: normalizes advantages over the batch, then runs
// `epochs` passes of shuffled minibatch Adam steps on actor, log-stddev,
// and critic. Stats are averaged over all minibatches.
PpoStats ppo_update(ExpertPair& expert, PpoAdam& adam, const PpoBatch& batch,
                    const PpoConfig& config, Rng& shuffle_rng);

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_PPO_HPP_
