#include "dreamplan/eval/paired.hpp"

#include <cmath>

#include "dreamplan/error.hpp"

namespace dreamplan::eval {

PlannerEpisodeRecord run_planner_episode(
    env::SurrogateEnv& sim, std::uint64_t episode_seed,
    const std::function<Eigen::Vector3d(int step)>& target,
    mpc::MpcController& controller,
    const std::function<void(const PlanStepInfo&)>& on_step) {
  sim.reset(episode_seed);
  const env::EnvConfig& cfg = sim.config();

  PlannerEpisodeRecord out;
  train::EpisodeRecord& rec = out.record;
  double lin_err_sum = 0.0;
  double ang_err_sum = 0.0;
  int exceed_steps = 0;

  // The observation's command slice carries what the planner chose last
  // step; before the first plan that is the operator target itself.
  Eigen::Vector3d executed = target(0);

  for (int step = 0;; ++step) {
    const Eigen::Vector3d tgt = target(step);
    const Vec obs = sim.observe(executed);
    const mpc::PlanResult& plan = controller.step(obs, tgt);
    executed = plan.command;
    auto res = sim.step(plan.first_action, executed);

    const env::EnvState& st = sim.state();
    rec.ret += res.reward;
    rec.steps += 1;
    rec.peak_roll = std::max(rec.peak_roll, std::abs(st.roll));
    rec.peak_pitch = std::max(rec.peak_pitch, std::abs(st.pitch));
    lin_err_sum += (st.twist.head<2>() - tgt.head<2>()).norm();
    ang_err_sum += std::abs(st.twist(2) - tgt(2));
    bool exceeded = false;
    for (int i = 0; i < cfg.joint_count; ++i) {
      if (std::abs(st.q(i) - cfg.q_nominal(i)) > cfg.q_soft_limit(i)) {
        exceeded = true;
        break;
      }
    }
    if (exceeded) ++exceed_steps;
    if (executed != tgt) ++out.command_deviation_steps;
    if (!plan.feasible) ++out.infeasible_steps;

    if (on_step) {
      PlanStepInfo info;
      info.step = step;
      info.state = &st;
      info.target = tgt;
      info.optimized = executed;
      info.action = &plan.first_action;
      info.reward = res.reward;
      info.feasible = plan.feasible;
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
  return out;
}

PairedEpisodes evaluate_paired(
    const io::Artifacts& artifacts, const mpc::ConstraintSpec& constraints,
    const mpc::PlannerConfig& planner_config, int episodes, std::uint64_t seed,
    double command_scale,
    const std::function<Eigen::Vector3d(int episode, int step)>& profile,
    const std::function<void(int episode, const train::StepInfo&)>&
        on_policy_step,
    const std::function<void(int episode, const PlanStepInfo&)>&
        on_planner_step) {
  if (!artifacts.has_model) {
    throw ValueError("planner evaluation requires an internal model");
  }

  train::PolicyController policy(artifacts);
  env::SurrogateEnv sim(artifacts.env, derive_seed(seed, 0xeba1));
  mpc::MpcController planner(artifacts.bundle, constraints, planner_config,
                             derive_seed(seed, 0x914e));

  PairedEpisodes out;
  out.policy.reserve(episodes);
  out.planner.reserve(episodes);

  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t reset_seed = train::eval_reset_seed(seed, e);
    const Eigen::Vector3d constant =
        train::eval_command(seed, e, artifacts.env, command_scale);
    auto target = [&](int step) {
      return profile ? profile(e, step) : constant;
    };

    policy.reset();
    out.policy.push_back(train::run_episode(
        sim, reset_seed, target, [&](const Vec& obs) { return policy(obs); },
        on_policy_step
            ? std::function<void(const train::StepInfo&)>(
                  [&](const train::StepInfo& info) { on_policy_step(e, info); })
            : nullptr));

    planner.reset(static_cast<std::uint64_t>(e));
    out.planner.push_back(run_planner_episode(
        sim, reset_seed, target, planner,
        on_planner_step
            ? std::function<void(const PlanStepInfo&)>(
                  [&](const PlanStepInfo& info) { on_planner_step(e, info); })
            : nullptr));

    if (out.planner.back().record.joint_exceed_fraction <=
        out.policy.back().joint_exceed_fraction) {
      ++out.planner_no_worse;
    }
  }
  return out;
}

}  // namespace dreamplan::eval
