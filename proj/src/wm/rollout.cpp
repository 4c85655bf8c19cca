#include "dreamplan/wm/rollout.hpp"

#include "dreamplan/error.hpp"

namespace dreamplan::wm {

namespace {

Vec clamp_action(Vec a, double bound) {
  return a.cwiseMax(-bound).cwiseMin(bound);
}

void check_obs(const DreamerBundle& bundle, const Vec& obs) {
  if (obs.size() != bundle.obs_dim) {
    throw ShapeError("observation does not match bundle obs_dim");
  }
}

// Shared dream loop. `context` is empty for NLM and [latent; velocity] for
// PLM/FLM; it stays fixed across the dream.
DreamTrajectory dream(const DreamerBundle& bundle, const Vec& seed_obs,
                      const Vec& context, int steps) {
  env::ObsLayout layout(bundle.action_dim);
  DreamTrajectory traj;
  traj.observations.reserve(steps + 1);
  traj.actions.reserve(steps);
  traj.observations.push_back(seed_obs);

  const Eigen::Vector3d command = seed_obs.segment<3>(layout.command);
  Vec obs = seed_obs;
  const Eigen::Index ctx = context.size();
  Vec head_in(bundle.obs_dim + ctx);
  Vec dyn_in(bundle.obs_dim + ctx + bundle.action_dim);
  if (ctx > 0) {
    head_in.segment(bundle.obs_dim, ctx) = context;
    dyn_in.segment(bundle.obs_dim, ctx) = context;
  }
  for (int j = 0; j < steps; ++j) {
    head_in.head(bundle.obs_dim) = obs;
    Vec action = clamp_action(net::mlp_forward(bundle.policy, head_in),
                              bundle.action_bound);
    dyn_in.head(bundle.obs_dim) = obs;
    dyn_in.tail(bundle.action_dim) = action;
    Vec next = obs + net::mlp_forward(bundle.dynamics, dyn_in);
    // Commands are exogenous: the dream cannot change them.
    next.segment<3>(layout.command) = command;
    traj.actions.push_back(std::move(action));
    traj.observations.push_back(next);
    obs = std::move(next);
  }
  return traj;
}

}  // namespace

Vec replace_command(const env::ObsLayout& layout, Vec obs,
                    const Eigen::Vector3d& command) {
  if (obs.size() != layout.dim) {
    throw ShapeError("observation does not match layout");
  }
  obs.segment<3>(layout.command) = command;
  return obs;
}

Vec estimate_velocity(const net::MlpParams& velocity_net,
                      const ObservationHistory& history) {
  if (history.count() == 0) {
    throw ValueError("cannot estimate velocity from an empty history");
  }
  Vec window = history.window_flat();
  if (velocity_net.in_dim() != window.size() || velocity_net.out_dim() != 3) {
    throw ShapeError("velocity estimator does not match history window");
  }
  return net::mlp_forward(velocity_net, window);
}

DreamTrajectory nlm_rollout(const DreamerBundle& bundle, const Vec& obs,
                            int steps) {
  if (bundle.variant != Variant::kNlm) {
    throw ValueError("nlm_rollout requires an NLM bundle");
  }
  if (steps < 0) throw ValueError("rollout steps must be >= 0");
  check_obs(bundle, obs);
  return dream(bundle, obs, Vec(), steps);
}

DreamTrajectory plm_rollout(const DreamerBundle& bundle,
                            const ObservationHistory& history,
                            const net::MlpParams& velocity_net, int steps) {
  if (bundle.variant == Variant::kNlm) {
    throw ValueError("plm_rollout requires a PLM or FLM bundle");
  }
  if (!history.filled()) {
    throw ValueError("plm_rollout requires a filled observation history");
  }
  if (steps < 0) steps = bundle.horizon;

  Vec window = history.window_flat();
  if (bundle.encoder.in_dim() != window.size()) {
    throw ShapeError("history window does not match bundle encoder");
  }
  Vec latent = net::mlp_forward(bundle.encoder, window);
  Vec velocity = estimate_velocity(velocity_net, history);

  Vec context(latent.size() + 3);
  context << latent, velocity;
  DreamTrajectory traj = dream(bundle, history.latest(), context, steps);
  traj.latent = std::move(latent);
  traj.velocity = std::move(velocity);
  return traj;
}

std::pair<Vec, Vec> flm_encode(const DreamerBundle& bundle,
                               const ObservationHistory& history,
                               const net::MlpParams& velocity_net) {
  if (bundle.variant != Variant::kFlm) {
    throw ValueError("flm_encode requires an FLM bundle");
  }
  DreamTrajectory traj = plm_rollout(bundle, history, velocity_net);

  // Dreamed window ending at step H: exactly the H dreamed observations.
  Mat future = dream_window(history, traj.observations, bundle.horizon,
                            bundle.history);
  Vec future_flat(future.size());
  for (int i = 0; i < future.cols(); ++i) {
    future_flat.segment(static_cast<Eigen::Index>(i) * future.rows(),
                        future.rows()) = future.col(i);
  }
  Vec y_future = net::mlp_forward(bundle.encoder, future_flat);
  Vec y_past = net::mlp_forward(bundle.encoder, history.window_flat());
  return {std::move(y_future), std::move(y_past)};
}

Mat dream_window(const ObservationHistory& history,
                 const std::vector<Vec>& dreamed, int j, int window) {
  if (j < 0 || j >= static_cast<int>(dreamed.size())) {
    throw ValueError("dream step outside the dreamed trajectory");
  }
  if (window <= 0) throw ValueError("window must be positive");

  const int p = history.obs_dim();
  Mat out(p, window);
  for (int s = 0; s < window; ++s) {
    int time = j - (window - 1) + s;  // relative to now (0 = current obs)
    if (time >= 1) {
      out.col(s) = dreamed[time];
    } else {
      out.col(s) = history.at_offset(time);
    }
  }
  return out;
}

int actor_input_dim(Variant variant, int obs_dim, int horizon, int latent_dim) {
  switch (variant) {
    case Variant::kNlm:
      return obs_dim + 3 + horizon * obs_dim;
    case Variant::kPlm:
      return obs_dim + 3 + horizon * obs_dim + latent_dim;
    case Variant::kFlm:
      return obs_dim + 3 + 2 * latent_dim;
  }
  return 0;
}

Vec actor_input(const DreamerBundle& bundle, const Vec& obs,
                const ObservationHistory& history,
                const net::MlpParams& velocity_net) {
  check_obs(bundle, obs);
  Vec v_hat = estimate_velocity(velocity_net, history);

  if (bundle.variant == Variant::kFlm) {
    auto [y_future, y_past] = flm_encode(bundle, history, velocity_net);
    Vec input(bundle.obs_dim + 3 + 2 * bundle.latent_dim);
    input << obs, v_hat, y_future, y_past;
    return input;
  }

  DreamTrajectory traj =
      bundle.variant == Variant::kNlm
          ? nlm_rollout(bundle, obs, bundle.horizon)
          : plm_rollout(bundle, history, velocity_net, bundle.horizon);

  const Eigen::Index p = bundle.obs_dim;
  Vec dream_flat(static_cast<Eigen::Index>(bundle.horizon) * p);
  for (int i = 0; i < bundle.horizon; ++i) {
    dream_flat.segment(static_cast<Eigen::Index>(i) * p, p) =
        traj.observations[i + 1];
  }

  if (bundle.variant == Variant::kNlm) {
    Vec input(p + 3 + dream_flat.size());
    input << obs, v_hat, dream_flat;
    return input;
  }
  Vec input(p + 3 + dream_flat.size() + bundle.latent_dim);
  input << obs, v_hat, dream_flat, traj.latent;
  return input;
}

}  // namespace dreamplan::wm
