#ifndef DREAMPLAN_WM_ROLLOUT_HPP_
#define DREAMPLAN_WM_ROLLOUT_HPP_

#include <utility>
#include <vector>

#include "dreamplan/wm/bundle.hpp"

namespace dreamplan::wm {

// A dreamed open-loop trajectory. observations[0] is the (real) seed
// observation; commands are exogenous, so every dreamed observation carries
// the seed's command slice.
struct DreamTrajectory {
  std::vector<Vec> observations;  // horizon + 1
  std::vector<Vec> actions;       // horizon
  Vec latent;                     // conditioning latent z (empty for NLM)
  Vec velocity;                   // conditioning twist estimate (empty for NLM)
};

// Returns `obs` with its command slice replaced; used to pin the command a
// dream or plan is conditioned on.
Vec replace_command(const env::ObsLayout& layout, Vec obs,
                    const Eigen::Vector3d& command);

// Twist estimate from the observation history window (padded while the
// buffer fills). Throws ValueError on an empty history, ShapeError if the
// estimator does not match the window.
Vec estimate_velocity(const net::MlpParams& velocity_net,
                      const ObservationHistory& history);

// Dream `steps` transitions from `obs` with the bundle's cloned policy
// choosing actions (clamped to the action bound). NLM only.
DreamTrajectory nlm_rollout(const DreamerBundle& bundle, const Vec& obs,
                            int steps);

// PLM/FLM dream: encodes the (filled) history into a latent, estimates the
// twist, and dreams `steps` transitions conditioned on both. `steps` < 0
// means the bundle horizon.
DreamTrajectory plm_rollout(const DreamerBundle& bundle,
                            const ObservationHistory& history,
                            const net::MlpParams& velocity_net,
                            int steps = -1);

// FLM summary pair: (latent of the dreamed window, latent of the real past
// window). Requires history == horizon.
std::pair<Vec, Vec> flm_encode(const DreamerBundle& bundle,
                               const ObservationHistory& history,
                               const net::MlpParams& velocity_net);

// The M-observation window ending at dream step j: the last max(0, M - j)
// real observations followed by the first min(j, M) dreamed ones. Columns
// oldest to newest. `dreamed` is DreamTrajectory::observations.
Mat dream_window(const ObservationHistory& history,
                 const std::vector<Vec>& dreamed, int j, int window);

// Width of the expert actor's input for a variant:
//   NLM:  obs + twist estimate + flattened dream (H * p)
//   PLM:  NLM layout + conditioning latent
//   FLM:  obs + twist estimate + two summary latents
int actor_input_dim(Variant variant, int obs_dim, int horizon, int latent_dim);

// Assembles the expert actor's input for the current observation, running
// the variant's dream internally.
Vec actor_input(const DreamerBundle& bundle, const Vec& obs,
                const ObservationHistory& history,
                const net::MlpParams& velocity_net);

}  // namespace dreamplan::wm

#endif  // DREAMPLAN_WM_ROLLOUT_HPP_
