#include "dreamplan/train/evaluate.hpp"

#include <cmath>

#include "dreamplan/wm/rollout.hpp"

namespace dreamplan::train {

EpisodeRecord run_episode(
    env::SurrogateEnv& sim, std::uint64_t episode_seed,
    const std::function<Eigen::Vector3d(int step)>& command,
    const std::function<Vec(const Vec& obs)>& controller,
    const std::function<void(const StepInfo&)>& on_step) {
  sim.reset(episode_seed);
  const env::EnvConfig& cfg = sim.config();

  EpisodeRecord rec;
  double lin_err_sum = 0.0;
  double ang_err_sum = 0.0;
  int exceed_steps = 0;

  for (int step = 0;; ++step) {
    const Eigen::Vector3d cmd = command(step);
    Vec obs = sim.observe(cmd);
    Vec action = controller(obs);
    auto res = sim.step(action, cmd);

    const env::EnvState& st = sim.state();
    rec.ret += res.reward;
    rec.steps += 1;
    rec.peak_roll = std::max(rec.peak_roll, std::abs(st.roll));
    rec.peak_pitch = std::max(rec.peak_pitch, std::abs(st.pitch));
    lin_err_sum += (st.twist.head<2>() - cmd.head<2>()).norm();
    ang_err_sum += std::abs(st.twist(2) - cmd(2));
    bool exceeded = false;
    for (int i = 0; i < cfg.joint_count; ++i) {
      if (std::abs(st.q(i) - cfg.q_nominal(i)) > cfg.q_soft_limit(i)) {
        exceeded = true;
        break;
      }
    }
    if (exceeded) ++exceed_steps;

    if (on_step) {
      StepInfo info;
      info.step = step;
      info.state = &st;
      info.obs = &obs;
      info.action = &action;
      info.command = cmd;
      info.reward_terms = res.reward_terms;
      info.done = res.done;
      on_step(info);
    }

    if (res.done) {
      rec.fell = res.fallen;
      break;
    }
  }

  rec.joint_exceed_fraction = static_cast<double>(exceed_steps) / rec.steps;
  rec.mean_lin_track_err = lin_err_sum / rec.steps;
  rec.mean_ang_track_err = ang_err_sum / rec.steps;
  return rec;
}

PolicyController::PolicyController(const io::Artifacts& artifacts)
    : artifacts_(artifacts),
      history_(artifacts.has_model ? artifacts.bundle.history : 1,
               artifacts.env.obs_dim()) {}

void PolicyController::reset() { history_.clear(); }

Vec PolicyController::operator()(const Vec& obs) {
  history_.push(obs);
  Vec input = artifacts_.has_model
                  ? wm::actor_input(artifacts_.bundle, obs, history_,
                                    artifacts_.velocity)
                  : obs;
  Vec mean = net::mlp_forward(artifacts_.expert.actor_mean, input);
  const double bound = artifacts_.env.action_bound;
  return mean.cwiseMax(-bound).cwiseMin(bound);
}

Eigen::Vector3d sample_command(Rng& rng, const env::EnvConfig& config,
                               double scale) {
  Eigen::Vector3d cmd;
  for (int i = 0; i < 3; ++i) {
    const double limit = scale * config.command_limit(i);
    cmd(i) = rng.uniform(-limit, limit);
  }
  return cmd;
}

std::uint64_t eval_reset_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, 0xe1150, static_cast<std::uint64_t>(episode));
}

Eigen::Vector3d eval_command(std::uint64_t seed, int episode,
                             const env::EnvConfig& config, double scale) {
  Rng cmd_rng(derive_seed(seed, 0xc0dec, static_cast<std::uint64_t>(episode)));
  return sample_command(cmd_rng, config, scale);
}

namespace {

EvalSummary evaluate_with(const env::EnvConfig& config, int episodes,
                          std::uint64_t seed, double command_scale,
                          const std::function<Vec(const Vec&)>& controller,
                          const std::function<void()>& on_episode_start) {
  env::SurrogateEnv sim(config, derive_seed(seed, 0xeba1));
  EvalSummary summary;
  summary.episodes.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    // Conditions depend only on (seed, episode index), never on the
    // controller, so two policies under the same seed are strictly paired.
    const Eigen::Vector3d cmd = eval_command(seed, e, config, command_scale);
    const std::uint64_t ep_seed = eval_reset_seed(seed, e);
    if (on_episode_start) on_episode_start();
    EpisodeRecord rec = run_episode(
        sim, ep_seed, [&](int) { return cmd; }, controller);
    summary.mean_return += rec.ret;
    summary.mean_exceed_fraction += rec.joint_exceed_fraction;
    summary.episodes.push_back(rec);
  }
  if (episodes > 0) {
    summary.mean_return /= episodes;
    summary.mean_exceed_fraction /= episodes;
  }
  return summary;
}

}  // namespace

EvalSummary evaluate_policy(const io::Artifacts& artifacts, int episodes,
                            std::uint64_t seed, double command_scale) {
  PolicyController controller(artifacts);
  return evaluate_with(
      artifacts.env, episodes, seed, command_scale,
      [&](const Vec& obs) { return controller(obs); },
      [&] { controller.reset(); });
}

EvalSummary evaluate_zero_action(const env::EnvConfig& config, int episodes,
                                 std::uint64_t seed, double command_scale) {
  const Vec zero = Vec::Zero(config.joint_count);
  return evaluate_with(
      config, episodes, seed, command_scale,
      [&](const Vec&) { return zero; }, nullptr);
}

}  // namespace dreamplan::train
