#ifndef DREAMPLAN_TRAIN_SUPERVISED_HPP_
#define DREAMPLAN_TRAIN_SUPERVISED_HPP_

#include "dreamplan/net/adam.hpp"
#include "dreamplan/train/buffer.hpp"
#include "dreamplan/train/ppo.hpp"
#include "dreamplan/wm/bundle.hpp"

namespace dreamplan::train {

struct SupervisedConfig {
  double lr = 1e-3;
  int epochs = 1;
  int minibatch = 256;
};

struct SupervisedAdam {
  net::AdamState dynamics;
  net::AdamState policy;
  net::AdamState reward;
  net::AdamState value;
  net::AdamState encoder;   // unused for NLM
  net::AdamState velocity;
};

SupervisedAdam make_supervised_adam(const wm::DreamerBundle& bundle,
                                    const net::MlpParams& velocity_net,
                                    const SupervisedConfig& config);

// Mean losses over the processed minibatches.
struct SupervisedLosses {
  double dynamics = 0.0;          // one-step observation delta MSE
  double reward = 0.0;            // reward head MSE
  double velocity = 0.0;          // twist estimator MSE
  double behavior_cloning = 0.0;  // cloned policy vs expert mean
  double value_distill = 0.0;     // value head vs privileged critic
};

// Fits the internal model on the freshly collected buffer: dynamics learns
// observation deltas, the reward head regresses achieved rewards, the cloned
// policy imitates the expert mean, the value head distills the (already
// PPO-updated) privileged critic, and the velocity estimator regresses the
// true twist. For PLM/FLM the encoder is trained end-to-end through the
// latent slice of each head's input; the twist estimate entering that
// conditioning block is treated as a constant (the estimator only learns
// from its own regression).
SupervisedLosses supervised_update(wm::DreamerBundle& bundle,
                                   net::MlpParams& velocity_net,
                                   const ExpertPair& expert,
                                   const RolloutBuffer& buffer,
                                   SupervisedAdam& adam,
                                   const SupervisedConfig& config,
                                   Rng& shuffle_rng);

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_SUPERVISED_HPP_
