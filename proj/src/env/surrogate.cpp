#include "dreamplan/env/surrogate.hpp"

#include <cmath>

#include "dreamplan/error.hpp"

namespace dreamplan::env {

Eigen::Vector3d gravity_vector(double roll, double pitch) {
  return {-std::sin(pitch), std::sin(roll) * std::cos(pitch),
          -std::cos(roll) * std::cos(pitch)};
}

double relaxed_log_barrier(double x, double delta) {
  if (delta <= 0.0) throw ValueError("barrier delta must be positive");
  if (x >= delta) return std::log(x / delta);
  double t = (x - 2.0 * delta) / delta;
  return 0.5 * (1.0 - t * t);
}

EnvState step_dynamics(const EnvConfig& config, const EnvState& state,
                       const Vec& action) {
  if (action.size() != config.joint_count) {
    throw ShapeError("action length does not match joint_count");
  }
  if (!action.allFinite()) throw ValueError("non-finite action");
  if (action.cwiseAbs().maxCoeff() > config.action_bound + 1e-12) {
    throw ValueError("action exceeds action_bound");
  }

  const double dt = config.dt;

  // Accelerations from the incoming state only.
  Vec q_err = state.q - config.q_nominal;
  Vec qdd = config.kp * (action - q_err) - config.kd * state.qd;
  Eigen::Vector3d twist_dot = config.twist_from_q * q_err +
                              config.twist_from_qd * state.qd -
                              config.base_damping * state.twist;
  Eigen::Vector2d tilt(state.roll, state.pitch);
  Eigen::Vector2d tilt_rate(state.roll_rate, state.pitch_rate);
  Eigen::Vector2d tilt_acc = config.tilt_from_qd * state.qd -
                             config.tilt_stiffness * tilt -
                             config.tilt_damping * tilt_rate;

  // Semi-implicit Euler: velocities first, positions with new velocities.
  EnvState next = state;
  next.qd = state.qd + dt * qdd;
  next.q = state.q + dt * next.qd;
  next.twist = state.twist + dt * twist_dot;
  next.roll_rate = state.roll_rate + dt * tilt_acc(0);
  next.pitch_rate = state.pitch_rate + dt * tilt_acc(1);
  next.roll = state.roll + dt * next.roll_rate;
  next.pitch = state.pitch + dt * next.pitch_rate;
  next.prev_action = action;
  next.disturbance.setZero();
  next.step_index = state.step_index + 1;
  return next;
}

RewardTerms compute_reward(const EnvConfig& config, const EnvState& next_state,
                           const Vec& action, const Vec& prev_action,
                           const Eigen::Vector3d& command) {
  if (action.size() != config.joint_count ||
      prev_action.size() != config.joint_count) {
    throw ShapeError("reward action lengths do not match joint_count");
  }
  const RewardParams& rp = config.reward;

  RewardTerms terms;
  double lin_err = (next_state.twist.head<2>() - command.head<2>()).squaredNorm();
  terms.track_lin = rp.w_track_lin * std::exp(-lin_err / rp.sigma_lin);
  double ang_err = next_state.twist.z() - command.z();
  terms.track_ang = rp.w_track_ang * std::exp(-ang_err * ang_err / rp.sigma_ang);
  terms.orientation = -rp.w_orientation * (next_state.roll * next_state.roll +
                                           next_state.pitch * next_state.pitch);
  terms.action_rate = -rp.w_action_rate * (action - prev_action).squaredNorm();
  terms.joint_vel = -rp.w_joint_vel * next_state.qd.squaredNorm();

  double barrier = 0.0;
  for (int i = 0; i < config.joint_count; ++i) {
    double margin = config.q_soft_limit(i) -
                    std::abs(next_state.q(i) - config.q_nominal(i));
    barrier += relaxed_log_barrier(margin, rp.barrier_delta);
  }
  terms.barrier = rp.w_barrier * barrier;
  return terms;
}

Vec make_observation(const EnvConfig& config, const EnvState& state,
                     const Eigen::Vector3d& command) {
  ObsLayout layout(config.joint_count);
  Vec obs(layout.dim);
  obs.segment(layout.joint_pos, layout.k) = state.q - config.q_nominal;
  obs.segment(layout.joint_vel, layout.k) = state.qd;
  obs.segment<3>(layout.gravity) = gravity_vector(state.roll, state.pitch);
  obs.segment<3>(layout.command) = command;
  obs.segment(layout.prev_action, layout.k) = state.prev_action;
  return obs;
}

void add_observation_noise(const EnvConfig& config, Rng& rng, Vec& obs) {
  ObsLayout layout(config.joint_count);
  if (obs.size() != layout.dim) {
    throw ShapeError("observation length does not match layout");
  }
  double sigma = noise_level_sigma(config.noise_level);
  if (sigma == 0.0) return;
  NoiseScales scales = observation_noise_scales();
  for (int i = 0; i < layout.k; ++i) {
    obs(layout.joint_pos + i) += sigma * scales.joint_pos * rng.gaussian();
  }
  for (int i = 0; i < layout.k; ++i) {
    obs(layout.joint_vel + i) += sigma * scales.joint_vel * rng.gaussian();
  }
  for (int i = 0; i < 3; ++i) {
    obs(layout.gravity + i) += sigma * scales.gravity * rng.gaussian();
  }
  // Command and previous action are known exactly; no noise.
}

bool is_fallen(const EnvConfig& config, const EnvState& state) {
  return std::abs(state.roll) > config.fall_threshold ||
         std::abs(state.pitch) > config.fall_threshold;
}

Vec privileged_observation(const EnvState& state) {
  Vec priv(kPrivilegedDim);
  priv.segment<3>(0) = state.twist;
  priv.segment<3>(3) = state.disturbance;
  priv(6) = state.roll_rate;
  priv(7) = state.pitch_rate;
  return priv;
}

SurrogateEnv::SurrogateEnv(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  reset(seed);
}

void SurrogateEnv::reset(std::uint64_t episode_seed) {
  Rng reset_rng(derive_seed(episode_seed, 0x7e5e7ULL));
  state_ = EnvState{};
  state_.q = config_.q_nominal;
  for (int i = 0; i < config_.joint_count; ++i) {
    state_.q(i) += config_.reset_joint_noise * reset_rng.gaussian();
  }
  state_.qd = Vec::Zero(config_.joint_count);
  state_.prev_action = Vec::Zero(config_.joint_count);
  rng_ = Rng(derive_seed(episode_seed, 0x0b5eULL));
}

SurrogateEnv::StepResult SurrogateEnv::step(const Vec& action,
                                            const Eigen::Vector3d& command) {
  Vec prev_action = state_.prev_action;
  EnvState next = step_dynamics(config_, state_, action);

  StepResult result;
  result.reward_terms = compute_reward(config_, next, action, prev_action,
                                       command);
  result.reward = result.reward_terms.total();
  state_ = next;
  result.obs = observe(command);
  result.privileged = privileged_observation(state_);
  result.fallen = is_fallen(config_, state_);
  result.done = result.fallen || state_.step_index >= config_.max_steps;
  return result;
}

void SurrogateEnv::apply_disturbance(const Eigen::Vector3d& impulse) {
  if (!impulse.allFinite()) throw ValueError("non-finite disturbance impulse");
  state_.twist += impulse;
  state_.disturbance += impulse;
}

Vec SurrogateEnv::observe(const Eigen::Vector3d& command) {
  Vec obs = make_observation(config_, state_, command);
  add_observation_noise(config_, rng_, obs);
  return obs;
}

}  // namespace dreamplan::env
