#include "dreamplan/mpc/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dreamplan/error.hpp"

namespace dreamplan::mpc {

void PlannerConfig::validate() const {
  if (horizon < 1) throw ValueError("planner horizon must be >= 1");
  if (iterations < 1) throw ValueError("planner iterations must be >= 1");
  if (gaussian_samples < 0) throw ValueError("gaussian_samples must be >= 0");
  if (policy_samples < 1) throw ValueError("policy_samples must be >= 1");
  if (elite_count < 1 ||
      elite_count > gaussian_samples + policy_samples) {
    throw ValueError(
        "elite_count must lie in [1, gaussian_samples + policy_samples]");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw ValueError("discount must lie in (0, 1)");
  }
  if (stddev_floor <= 0.0) throw ValueError("stddev_floor must be positive");
  if (temperature <= 0.0) throw ValueError("temperature must be positive");
  if (momentum < 0.0 || momentum > 1.0) {
    throw ValueError("momentum must lie in [0, 1]");
  }
  if (init_action_stddev <= 0.0 || policy_action_jitter < 0.0) {
    throw ValueError("action spread parameters must be positive");
  }
  if ((command_deviation.array() < 0.0).any() ||
      (init_command_stddev.array() <= 0.0).any() ||
      (policy_command_jitter.array() < 0.0).any()) {
    throw ValueError("command spread parameters must be non-negative");
  }
  if (roll_limit <= 0.0 || roll_limit >= 1.5707963267948966 ||
      pitch_limit <= 0.0 || pitch_limit >= 1.5707963267948966) {
    throw ValueError("tilt limits must lie in (0, pi/2)");
  }
  if (joint_margin < 0.0 || orientation_margin < 0.0) {
    throw ValueError("constraint margins must be non-negative");
  }
}

void to_json(nlohmann::json& j, const PlannerConfig& c) {
  j = nlohmann::json{
      {"horizon", c.horizon},
      {"iterations", c.iterations},
      {"gaussian_samples", c.gaussian_samples},
      {"policy_samples", c.policy_samples},
      {"elite_count", c.elite_count},
      {"discount", c.discount},
      {"constraint_penalty", c.constraint_penalty},
      {"momentum", c.momentum},
      {"temperature", c.temperature},
      {"stddev_floor", c.stddev_floor},
      {"command_deviation",
       {c.command_deviation.x(), c.command_deviation.y(),
        c.command_deviation.z()}},
      {"init_action_stddev", c.init_action_stddev},
      {"init_command_stddev",
       {c.init_command_stddev.x(), c.init_command_stddev.y(),
        c.init_command_stddev.z()}},
      {"policy_action_jitter", c.policy_action_jitter},
      {"policy_command_jitter",
       {c.policy_command_jitter.x(), c.policy_command_jitter.y(),
        c.policy_command_jitter.z()}},
      {"joint_margin", c.joint_margin},
      {"orientation_margin", c.orientation_margin},
      {"roll_limit", c.roll_limit},
      {"pitch_limit", c.pitch_limit},
      {"single_precision", c.single_precision},
      {"sample_extraction", c.sample_extraction},
      {"record_candidates", c.record_candidates}};
}

namespace {
Eigen::Vector3d vec3(const nlohmann::json& j) {
  return Eigen::Vector3d(j.at(0).get<double>(), j.at(1).get<double>(),
                         j.at(2).get<double>());
}
}  // namespace

void from_json(const nlohmann::json& j, PlannerConfig& c) {
  j.at("horizon").get_to(c.horizon);
  j.at("iterations").get_to(c.iterations);
  j.at("gaussian_samples").get_to(c.gaussian_samples);
  j.at("policy_samples").get_to(c.policy_samples);
  j.at("elite_count").get_to(c.elite_count);
  j.at("discount").get_to(c.discount);
  j.at("constraint_penalty").get_to(c.constraint_penalty);
  j.at("momentum").get_to(c.momentum);
  j.at("temperature").get_to(c.temperature);
  j.at("stddev_floor").get_to(c.stddev_floor);
  c.command_deviation = vec3(j.at("command_deviation"));
  j.at("init_action_stddev").get_to(c.init_action_stddev);
  c.init_command_stddev = vec3(j.at("init_command_stddev"));
  j.at("policy_action_jitter").get_to(c.policy_action_jitter);
  c.policy_command_jitter = vec3(j.at("policy_command_jitter"));
  j.at("joint_margin").get_to(c.joint_margin);
  j.at("orientation_margin").get_to(c.orientation_margin);
  j.at("roll_limit").get_to(c.roll_limit);
  j.at("pitch_limit").get_to(c.pitch_limit);
  j.at("single_precision").get_to(c.single_precision);
  j.at("sample_extraction").get_to(c.sample_extraction);
  j.at("record_candidates").get_to(c.record_candidates);
}

double roll_from_gravity(double gy, double gz) {
  return std::atan2(gy, -gz);
}

double pitch_from_gravity(double gx) {
  return std::asin(std::clamp(-gx, -1.0, 1.0));
}

double joint_overshoot(const env::ObsLayout& layout, const Vec& obs,
                       const Vec& soft_limit) {
  double v = 0.0;
  // The leading observation block is already the deviation from nominal.
  for (int i = 0; i < layout.k; ++i) {
    v += std::max(0.0, std::abs(obs(layout.joint_pos + i)) - soft_limit(i));
  }
  return v;
}

double orientation_overshoot(const env::ObsLayout& layout, const Vec& obs,
                             double roll_limit, double pitch_limit) {
  const double gx = obs(layout.gravity + 0);
  const double gy = obs(layout.gravity + 1);
  const double gz = obs(layout.gravity + 2);
  double roll = roll_from_gravity(gy, gz);
  double pitch = pitch_from_gravity(gx);
  return std::max(0.0, std::abs(roll) - roll_limit) +
         std::max(0.0, std::abs(pitch) - pitch_limit);
}

double command_deviation(const Eigen::Vector3d& command,
                         const Eigen::Vector3d& target,
                         const Eigen::Vector3d& allowed) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(command(i) - target(i)) - allowed(i));
  }
  return worst;
}

ConstraintSpec default_constraints(const env::EnvConfig& env,
                                   const PlannerConfig& config) {
  env::ObsLayout layout(env.joint_count);
  ConstraintSpec spec;

  ConstraintChannel joints;
  joints.name = "joint_overshoot";
  joints.kind = ChannelKind::kJointOvershoot;
  joints.bound = config.joint_margin;
  joints.joint_limit = env.q_soft_limit;
  joints.step = [layout, limit = env.q_soft_limit](
                    const Vec& obs, const Vec&, const Eigen::Vector3d&,
                    const Eigen::Vector3d&) {
    return joint_overshoot(layout, obs, limit);
  };
  spec.push_back(std::move(joints));

  ConstraintChannel tilt;
  tilt.name = "orientation_overshoot";
  tilt.kind = ChannelKind::kOrientationOvershoot;
  tilt.bound = config.orientation_margin;
  tilt.roll_limit = config.roll_limit;
  tilt.pitch_limit = config.pitch_limit;
  tilt.step = [layout, rl = config.roll_limit, pl = config.pitch_limit](
                  const Vec& obs, const Vec&, const Eigen::Vector3d&,
                  const Eigen::Vector3d&) {
    return orientation_overshoot(layout, obs, rl, pl);
  };
  spec.push_back(std::move(tilt));

  ConstraintChannel cmd;
  cmd.name = "command_deviation";
  cmd.kind = ChannelKind::kCommandDeviation;
  cmd.bound = 0.0;
  cmd.allowed = config.command_deviation;
  cmd.step = [allowed = config.command_deviation](
                 const Vec&, const Vec&, const Eigen::Vector3d& command,
                 const Eigen::Vector3d& target) {
    return command_deviation(command, target, allowed);
  };
  spec.push_back(std::move(cmd));

  return spec;
}

}  // namespace dreamplan::mpc
