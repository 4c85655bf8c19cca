#ifndef DREAMPLAN_MPC_CONFIG_HPP_
#define DREAMPLAN_MPC_CONFIG_HPP_

#include <Eigen/Core>
#include <json.hpp>

namespace dreamplan::mpc {

// Sampling-based constrained planner settings. The decision variable is the
// twist command (3) followed by the H-step action sequence (time-major), so
// every distribution-shaped vector below has 3 + H * action_dim entries.
struct PlannerConfig {
  int horizon = 10;            // dream length H
  int iterations = 6;          // optimization rounds N
  int gaussian_samples = 500;  // distribution draws per round M
  int policy_samples = 30;     // policy-seeded candidates per round
  int elite_count = 60;        // candidates kept for the refit
  double discount = 0.99;
  double constraint_penalty = 1.0;  // return penalty per unit of violation
  double momentum = 0.95;           // weight on the fresh elite fit
  double temperature = 0.5;         // elite weighting softness
  double stddev_floor = 0.02;

  // Sampled commands stay inside target +- command_deviation (per axis);
  // the matching constraint channel uses the same box.
  Eigen::Vector3d command_deviation{1.0, 1.0, 0.5};

  // Cold-start spread and per-round policy candidate jitter.
  double init_action_stddev = 0.3;
  Eigen::Vector3d init_command_stddev{0.2, 0.2, 0.1};
  double policy_action_jitter = 0.1;
  Eigen::Vector3d policy_command_jitter{0.1, 0.1, 0.05};

  // Default constraint channel parameters: allowed discounted overshoot
  // budgets and the tilt limits the orientation channel enforces.
  double joint_margin = 0.05;
  double orientation_margin = 0.05;
  double roll_limit = 0.4;
  double pitch_limit = 0.4;

  // Fast batched scoring in single precision; the double-precision
  // per-candidate path stays available as a reference and fallback.
  bool single_precision = true;

  // Draw the emitted plan from the final distribution instead of taking
  // its mean.
  bool sample_extraction = false;

  // Keep every scored candidate in the plan result (heavy; for offline
  // inspection).
  bool record_candidates = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const PlannerConfig& c);
void from_json(const nlohmann::json& j, PlannerConfig& c);

}  // namespace dreamplan::mpc

#endif  // DREAMPLAN_MPC_CONFIG_HPP_
