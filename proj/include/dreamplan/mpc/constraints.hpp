#ifndef DREAMPLAN_MPC_CONSTRAINTS_HPP_
#define DREAMPLAN_MPC_CONSTRAINTS_HPP_

#include <functional>
#include <string>
#include <vector>

#include "dreamplan/env/config.hpp"
#include "dreamplan/mpc/config.hpp"
#include "dreamplan/net/mlp.hpp"

namespace dreamplan::mpc {

using net::Vec;

// Tags let the batched scorer vectorize the built-in channels; kCustom
// channels are evaluated through `step` on the stored dream.
enum class ChannelKind { kJointOvershoot, kOrientationOvershoot,
                         kCommandDeviation, kCustom };

// One hard-constraint channel. `step` returns the instantaneous violation
// for a dreamed observation/action pair; the scorer aggregates it as a
// discounted sum over the horizon and compares against `bound`. Channels
// must be pure and deterministic. Built-in kinds mirror their parameters in
// plain fields so the vectorized scorer can evaluate them without calling
// through `step`.
struct ConstraintChannel {
  std::string name;
  ChannelKind kind = ChannelKind::kCustom;
  std::function<double(const Vec& obs, const Vec& action,
                       const Eigen::Vector3d& command,
                       const Eigen::Vector3d& target)>
      step;
  double bound = 0.0;

  Vec joint_limit;                            // kJointOvershoot
  double roll_limit = 0.0, pitch_limit = 0.0; // kOrientationOvershoot
  Eigen::Vector3d allowed = Eigen::Vector3d::Zero();  // kCommandDeviation
};

using ConstraintSpec = std::vector<ConstraintChannel>;

// Roll and pitch recovered from a (not necessarily unit) body-frame gravity
// direction; the inverse of the level-frame convention used by the
// simulator's observation.
double roll_from_gravity(double gy, double gz);
double pitch_from_gravity(double gx);

// Instantaneous violations used by the default channels (also called by the
// batched scorer so both precisions share one definition).
double joint_overshoot(const env::ObsLayout& layout, const Vec& obs,
                       const Vec& soft_limit);
double orientation_overshoot(const env::ObsLayout& layout, const Vec& obs,
                             double roll_limit, double pitch_limit);
double command_deviation(const Eigen::Vector3d& command,
                         const Eigen::Vector3d& target,
                         const Eigen::Vector3d& allowed);

// The three standard channels: joint-position overshoot against the soft
// limits, roll/pitch overshoot against the tilt limits, and the command's
// distance outside its allowed box around the target.
ConstraintSpec default_constraints(const env::EnvConfig& env,
                                   const PlannerConfig& config);

}  // namespace dreamplan::mpc

#endif  // DREAMPLAN_MPC_CONSTRAINTS_HPP_
