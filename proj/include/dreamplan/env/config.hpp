#ifndef DREAMPLAN_ENV_CONFIG_HPP_
#define DREAMPLAN_ENV_CONFIG_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <json.hpp>
#include <string>

namespace dreamplan::env {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class NoiseLevel { kOff, kLow, kMedium, kHigh };

const char* noise_level_name(NoiseLevel level);
NoiseLevel noise_level_from_name(const std::string& name);

// Base joint-angle noise stddev for a level. Per-channel multipliers are in
// observation_noise_scales().
double noise_level_sigma(NoiseLevel level);

struct RewardParams {
  double w_track_lin = 1.5;    // linear velocity tracking weight
  double w_track_ang = 0.75;   // yaw rate tracking weight
  double w_orientation = 1.0;  // roll/pitch penalty weight
  double w_action_rate = 0.01;
  double w_joint_vel = 0.001;
  double w_barrier = 0.02;     // soft joint-limit bonus weight
  double sigma_lin = 0.25;     // tracking kernel widths (squared-error scale)
  double sigma_ang = 0.25;
  double barrier_delta = 0.05;  // relaxed log barrier switch point
};

// Parameters of the reduced-order legged platform. The base never translates
// in the model; it carries a body twist (vx, vy, yaw rate), a roll/pitch
// attitude driven by joint motion, and k position-controlled joints.
struct EnvConfig {
  int joint_count = 4;
  double dt = 0.02;

  // PD joint actuation: qdd = kp (a + q_nominal - q) - kd qd.
  Vec q_nominal;  // size k
  double kp = 40.0;
  double kd = 4.0;

  // Soft joint envelope: |q - q_nominal| should stay below q_soft_limit.
  Vec q_soft_limit;  // size k

  // Base twist: nu_dot = twist_from_q (q - q_nominal) + twist_from_qd qd
  //             - base_damping nu.
  Mat twist_from_q;   // 3 x k
  Mat twist_from_qd;  // 3 x k
  double base_damping = 1.2;

  // Attitude: [roll, pitch]_ddot = tilt_from_qd qd - tilt_stiffness [roll,
  // pitch] - tilt_damping [roll, pitch]_dot.
  Mat tilt_from_qd;  // 2 x k
  double tilt_stiffness = 25.0;
  double tilt_damping = 3.0;

  double action_bound = 1.0;      // |a_i| <= bound
  double fall_threshold = 0.8;    // |roll| or |pitch| beyond this ends episode
  int max_steps = 400;
  double reset_joint_noise = 0.05;

  // Training command range: |vx|, |vy|, |yaw rate| per component.
  Eigen::Vector3d command_limit{0.5, 0.5, 0.5};

  NoiseLevel noise_level = NoiseLevel::kLow;
  RewardParams reward;

  int obs_dim() const { return 3 * joint_count + 6; }

  // Throws on inconsistent dimensions or non-positive scalars.
  void validate() const;

  // Randomized but seed-determined coupling matrices; everything else at the
  // documented defaults.
  static EnvConfig make_default(int joint_count = 4,
                                std::uint64_t coupling_seed = 0x5eedULL);
};

// Index ranges of the observation vector [q - q_nominal, qd, gravity,
// command, previous action].
struct ObsLayout {
  int k;
  int joint_pos = 0;
  int joint_vel;
  int gravity;
  int command;
  int prev_action;
  int dim;

  explicit ObsLayout(int joint_count)
      : k(joint_count),
        joint_vel(joint_count),
        gravity(2 * joint_count),
        command(2 * joint_count + 3),
        prev_action(2 * joint_count + 6),
        dim(3 * joint_count + 6) {}
};

// Per-channel noise stddev multipliers applied to the base sigma:
// joint positions 1x, joint velocities 10x, gravity 2x, command and previous
// action exact (0x).
struct NoiseScales {
  double joint_pos = 1.0;
  double joint_vel = 10.0;
  double gravity = 2.0;
  double command = 0.0;
  double prev_action = 0.0;
};

NoiseScales observation_noise_scales();

void to_json(nlohmann::json& j, const RewardParams& p);
void from_json(const nlohmann::json& j, RewardParams& p);
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

}  // namespace dreamplan::env

#endif  // DREAMPLAN_ENV_CONFIG_HPP_
