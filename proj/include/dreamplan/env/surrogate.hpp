#ifndef DREAMPLAN_ENV_SURROGATE_HPP_
#define DREAMPLAN_ENV_SURROGATE_HPP_

#include <Eigen/Core>
#include <cstdint>

#include "dreamplan/env/config.hpp"
#include "dreamplan/rng.hpp"

namespace dreamplan::env {

struct EnvState {
  Vec q;        // joint positions
  Vec qd;       // joint velocities
  Eigen::Vector3d twist = Eigen::Vector3d::Zero();  // vx, vy, yaw rate
  double roll = 0.0;
  double pitch = 0.0;
  double roll_rate = 0.0;
  double pitch_rate = 0.0;
  Vec prev_action;
  Eigen::Vector3d disturbance = Eigen::Vector3d::Zero();  // impulse this step
  int step_index = 0;
};

// Reward terms, each already weighted and signed; total() is their sum.
struct RewardTerms {
  double track_lin = 0.0;
  double track_ang = 0.0;
  double orientation = 0.0;
  double action_rate = 0.0;
  double joint_vel = 0.0;
  double barrier = 0.0;

  double total() const {
    return track_lin + track_ang + orientation + action_rate + joint_vel +
           barrier;
  }
};

// Body-frame gravity direction for a roll/pitch attitude; unit length,
// (0, 0, -1) when level.
Eigen::Vector3d gravity_vector(double roll, double pitch);

// Relaxed log barrier: log(x/delta) for x >= delta, quadratic extension
// 0.5 (1 - ((x - 2 delta)/delta)^2) below. C1-continuous at x = delta.
double relaxed_log_barrier(double x, double delta);

// One semi-implicit Euler step: all accelerations are evaluated on the
// incoming state, velocities update first, then positions integrate with the
// new velocities. The action must be finite and within the action bound.
// Any pending disturbance impulse was already added to the twist by
// apply_disturbance, so the returned state clears it.
EnvState step_dynamics(const EnvConfig& config, const EnvState& state,
                       const Vec& action);

// Reward evaluated on the post-transition state.
RewardTerms compute_reward(const EnvConfig& config, const EnvState& next_state,
                           const Vec& action, const Vec& prev_action,
                           const Eigen::Vector3d& command);

// Noiseless observation [q - q_nominal, qd, gravity, command, prev_action].
Vec make_observation(const EnvConfig& config, const EnvState& state,
                     const Eigen::Vector3d& command);

// Adds level-scaled gaussian noise in place (command and previous-action
// slices stay exact).
void add_observation_noise(const EnvConfig& config, Rng& rng, Vec& obs);

bool is_fallen(const EnvConfig& config, const EnvState& state);

// Privileged signals for the asymmetric critic: [twist, disturbance,
// roll_rate, pitch_rate].
Vec privileged_observation(const EnvState& state);
constexpr int kPrivilegedDim = 8;

// Stateful wrapper owning an EnvState and a noise stream.
class SurrogateEnv {
 public:
  SurrogateEnv(EnvConfig config, std::uint64_t seed);

  // New episode: joints near nominal with seeded perturbation, everything
  // else at rest.
  void reset(std::uint64_t episode_seed);

  struct StepResult {
    Vec obs;
    double reward = 0.0;
    RewardTerms reward_terms;
    Vec privileged;
    bool done = false;
    bool fallen = false;
  };

  // Advances one control step under `command`. Throws ValueError on
  // non-finite or out-of-bound actions.
  StepResult step(const Vec& action, const Eigen::Vector3d& command);

  // Instantaneous twist impulse, visible in the privileged observation until
  // the next step.
  void apply_disturbance(const Eigen::Vector3d& impulse);

  // Noisy observation of the current state.
  Vec observe(const Eigen::Vector3d& command);

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  EnvState state_;
  Rng rng_;
};

}  // namespace dreamplan::env

#endif  // DREAMPLAN_ENV_SURROGATE_HPP_
