#ifndef DREAMPLAN_MPC_SCORE_HPP_
#define DREAMPLAN_MPC_SCORE_HPP_

#include "dreamplan/mpc/constraints.hpp"
#include "dreamplan/wm/rollout.hpp"

namespace dreamplan::mpc {

using net::Mat;

// A fully evaluated candidate: the dreamed trajectory, its discounted
// return (already carrying the violation penalty), and the aggregated
// value of every constraint channel.
struct ScoredTrajectory {
  wm::DreamTrajectory dream;
  double ret = 0.0;
  Vec constraints;       // discounted channel sums
  bool feasible = false;  // every channel within its bound
  bool finite = true;     // model outputs stayed finite
};

// Double-precision reference scoring of one candidate. Seeds the dream
// with `obs` (command slice replaced by `command`), rolls the dynamics
// head under the given k x H action matrix, and folds
//   ret = sum_k discount^k reward(o_k, a_k) + discount^H value(o_H)
//         - penalty * sum(channels)
// with each channel aggregated as sum_k discount^k step(o_k, a_k).
// Non-finite model output yields feasible = false and ret = -infinity
// instead of an exception.
ScoredTrajectory score_trajectory(const wm::DreamerBundle& bundle,
                                  const Vec& obs,
                                  const Eigen::Vector3d& command,
                                  const Mat& actions,
                                  const ConstraintSpec& constraints,
                                  const Eigen::Vector3d& target,
                                  double discount, double penalty);

}  // namespace dreamplan::mpc

#endif  // DREAMPLAN_MPC_SCORE_HPP_
