#ifndef DREAMPLAN_TRAIN_BUFFER_HPP_
#define DREAMPLAN_TRAIN_BUFFER_HPP_

#include <cstdint>
#include <vector>

#include "dreamplan/net/mlp.hpp"

namespace dreamplan::train {

using net::Mat;
using net::Vec;

// Flattened on-policy collection buffer; columns are samples in (step, lane)
// order. Carries everything both the PPO update and the supervised model
// fits need, so one collection pass serves both.
struct RolloutBuffer {
  Mat obs;              // p x N, the noisy observation the policies saw
  Mat next_obs;         // p x N, observation after the transition
  Mat windows;          // (M*p) x N, history window ending at obs
  Mat actions;          // k x N, pre-clamp samples (log-probs refer to these)
  Mat executed;         // k x N, clamped actions the simulator received
  Mat expert_means;     // k x N, expert actor mean at collection time
  Mat actor_inputs;     // expert actor input
  Mat critic_inputs;    // (p + privileged) x N
  Mat true_twist;       // 3 x N, privileged body twist (velocity target)
  Vec rewards;
  Vec values;
  Vec log_probs;
  std::vector<std::uint8_t> dones;

  Eigen::Index size() const { return obs.cols(); }
};

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_BUFFER_HPP_
