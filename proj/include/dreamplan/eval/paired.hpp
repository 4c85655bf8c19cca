#ifndef DREAMPLAN_EVAL_PAIRED_HPP_
#define DREAMPLAN_EVAL_PAIRED_HPP_

#include <functional>
#include <vector>

#include "dreamplan/mpc/planner.hpp"
#include "dreamplan/train/evaluate.hpp"

namespace dreamplan::eval {

using net::Vec;

// One simulator step of a planner-in-the-loop episode, as seen by logging
// callbacks.
struct PlanStepInfo {
  int step = 0;
  const env::EnvState* state = nullptr;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();     // operator target
  Eigen::Vector3d optimized = Eigen::Vector3d::Zero();  // executed command
  const Vec* action = nullptr;
  double reward = 0.0;
  bool feasible = true;
  bool done = false;
};

struct PlannerEpisodeRecord {
  train::EpisodeRecord record;
  int command_deviation_steps = 0;  // steps where optimized != target
  int infeasible_steps = 0;         // steps where every candidate violated
};

// Planner-in-the-loop episode. Each step observes under the previous
// optimized command, plans toward the operator target, then executes the
// plan's first action together with its optimized command. Tracking errors
// are measured against the target so the record compares directly with a
// policy-mode episode under the same conditions. The caller resets the
// controller's episode stream beforehand.
PlannerEpisodeRecord run_planner_episode(
    env::SurrogateEnv& sim, std::uint64_t episode_seed,
    const std::function<Eigen::Vector3d(int step)>& target,
    mpc::MpcController& controller,
    const std::function<void(const PlanStepInfo&)>& on_step = nullptr);

struct PairedEpisodes {
  std::vector<train::EpisodeRecord> policy;
  std::vector<PlannerEpisodeRecord> planner;
  // Episodes where the planner's joint-exceedance fraction was no worse
  // than the policy's — the dominance count the comparison gates on.
  int planner_no_worse = 0;
};

// Runs the cloned-policy controller and the planner over the same episode
// conditions (seed-paired reset states, noise streams, and command
// profiles) and collects both sets of records. `profile` maps (episode,
// step) to the operator target; when null, each episode uses a constant
// command sampled inside command_scale * command_limit from the episode
// stream. The step hooks receive the episode index so callers can route
// per-episode logs. Throws ValueError when the artifacts were trained
// without an internal model.
PairedEpisodes evaluate_paired(
    const io::Artifacts& artifacts, const mpc::ConstraintSpec& constraints,
    const mpc::PlannerConfig& planner_config, int episodes, std::uint64_t seed,
    double command_scale,
    const std::function<Eigen::Vector3d(int episode, int step)>& profile =
        nullptr,
    const std::function<void(int episode, const train::StepInfo&)>&
        on_policy_step = nullptr,
    const std::function<void(int episode, const PlanStepInfo&)>&
        on_planner_step = nullptr);

}  // namespace dreamplan::eval

#endif  // DREAMPLAN_EVAL_PAIRED_HPP_
