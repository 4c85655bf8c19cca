#ifndef DREAMPLAN_TRAIN_EVALUATE_HPP_
#define DREAMPLAN_TRAIN_EVALUATE_HPP_

#include <functional>

#include "dreamplan/env/surrogate.hpp"
#include "dreamplan/io/bundle_io.hpp"

namespace dreamplan::train {

// Per-step information handed to an optional observer (CSV writers, plots).
struct StepInfo {
  int step = 0;
  const env::EnvState* state = nullptr;
  const Vec* obs = nullptr;
  const Vec* action = nullptr;
  Eigen::Vector3d command = Eigen::Vector3d::Zero();
  env::RewardTerms reward_terms;
  bool done = false;
};

struct EpisodeRecord {
  double ret = 0.0;  // undiscounted reward sum
  int steps = 0;
  bool fell = false;
  double joint_exceed_fraction = 0.0;  // steps with any joint past its limit
  double peak_roll = 0.0;
  double peak_pitch = 0.0;
  double mean_lin_track_err = 0.0;  // |twist_xy - command_xy|
  double mean_ang_track_err = 0.0;  // |yaw rate - command_z|
};

// Runs one episode under a caller-supplied controller. The command may vary
// per step (receives the step index). The controller sees the noisy
// observation stream.
EpisodeRecord run_episode(
    env::SurrogateEnv& sim, std::uint64_t episode_seed,
    const std::function<Eigen::Vector3d(int step)>& command,
    const std::function<Vec(const Vec& obs)>& controller,
    const std::function<void(const StepInfo&)>& on_step = nullptr);

// Deterministic (mean-action) policy controller; owns the observation
// history the internal model needs. Reset it per episode.
class PolicyController {
 public:
  explicit PolicyController(const io::Artifacts& artifacts);

  void reset();
  Vec operator()(const Vec& obs);

 private:
  const io::Artifacts& artifacts_;
  wm::ObservationHistory history_;
};

// Fixed command sampled uniformly inside scale * command_limit.
Eigen::Vector3d sample_command(Rng& rng, const env::EnvConfig& config,
                               double scale = 1.0);

// Condition streams shared by every evaluator. Episode conditions (reset
// state, observation noise, command) depend only on (seed, episode index),
// so two controllers evaluated under one seed face identical conditions.
std::uint64_t eval_reset_seed(std::uint64_t seed, int episode);
Eigen::Vector3d eval_command(std::uint64_t seed, int episode,
                             const env::EnvConfig& config, double scale);

struct EvalSummary {
  std::vector<EpisodeRecord> episodes;
  double mean_return = 0.0;
  double mean_exceed_fraction = 0.0;
};

// Mean-action policy evaluation over paired episode seeds derived from
// `seed`. Commands and initial states depend only on (seed, episode index),
// so different controllers evaluated with the same seed face identical
// conditions.
EvalSummary evaluate_policy(const io::Artifacts& artifacts, int episodes,
                            std::uint64_t seed, double command_scale = 1.0);

// Zero-action baseline on the same paired conditions.
EvalSummary evaluate_zero_action(const env::EnvConfig& config, int episodes,
                                 std::uint64_t seed, double command_scale = 1.0);

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_EVALUATE_HPP_
