#include "dreamplan/mpc/score.hpp"

#include <cmath>
#include <limits>

#include "dreamplan/error.hpp"

namespace dreamplan::mpc {

ScoredTrajectory score_trajectory(const wm::DreamerBundle& bundle,
                                  const Vec& obs,
                                  const Eigen::Vector3d& command,
                                  const Mat& actions,
                                  const ConstraintSpec& constraints,
                                  const Eigen::Vector3d& target,
                                  double discount, double penalty) {
  if (bundle.variant != wm::Variant::kNlm) {
    throw ValueError("trajectory scoring requires an NLM bundle");
  }
  if (obs.size() != bundle.obs_dim) {
    throw ShapeError("observation does not match bundle obs_dim");
  }
  if (actions.rows() != bundle.action_dim) {
    throw ShapeError("action rows do not match bundle action_dim");
  }
  const int horizon = static_cast<int>(actions.cols());
  if (horizon < 1) throw ShapeError("need at least one planned action");
  if (!obs.allFinite() || !actions.allFinite() || !command.allFinite()) {
    throw ValueError("scoring inputs must be finite");
  }

  env::ObsLayout layout(bundle.action_dim);
  const int channels = static_cast<int>(constraints.size());

  ScoredTrajectory out;
  out.constraints = Vec::Zero(channels);
  out.dream.observations.reserve(horizon + 1);
  out.dream.actions.reserve(horizon);

  // Same op sequence as the model rollout so a policy-generated action
  // sequence scores over the exact trajectory the rollout produced.
  Vec current = wm::replace_command(layout, obs, command);
  out.dream.observations.push_back(current);

  Vec dyn_in(bundle.obs_dim + bundle.action_dim);
  double reward_sum = 0.0;
  double gamma_k = 1.0;
  for (int k = 0; k < horizon; ++k) {
    const Vec action = actions.col(k);
    dyn_in.head(bundle.obs_dim) = current;
    dyn_in.tail(bundle.action_dim) = action;

    reward_sum += gamma_k * net::mlp_forward(bundle.reward, dyn_in)(0);
    for (int ch = 0; ch < channels; ++ch) {
      out.constraints(ch) +=
          gamma_k * constraints[ch].step(current, action, command, target);
    }

    Vec next = current + net::mlp_forward(bundle.dynamics, dyn_in);
    next.segment<3>(layout.command) = command;
    out.dream.actions.push_back(action);
    out.dream.observations.push_back(next);
    current = std::move(next);
    gamma_k *= discount;
  }
  const double terminal = net::mlp_forward(bundle.value, current)(0);
  out.ret = reward_sum + gamma_k * terminal -
            penalty * out.constraints.sum();

  if (!std::isfinite(out.ret) || !out.constraints.allFinite()) {
    out.ret = -std::numeric_limits<double>::infinity();
    out.feasible = false;
    out.finite = false;
    return out;
  }
  out.feasible = true;
  for (int ch = 0; ch < channels; ++ch) {
    if (out.constraints(ch) > constraints[ch].bound) {
      out.feasible = false;
      break;
    }
  }
  return out;
}

}  // namespace dreamplan::mpc
