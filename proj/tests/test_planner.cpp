#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <limits>

#include "dreamplan/env/config.hpp"
#include "dreamplan/error.hpp"
#include "dreamplan/mpc/planner.hpp"
#include "dreamplan/mpc/score.hpp"
#include "dreamplan/wm/rollout.hpp"
#include "oracles.hpp"

using namespace dreamplan;
using mpc::BatchScorer;
using mpc::Candidate;
using mpc::CandidateSource;
using mpc::ConstraintChannel;
using mpc::ConstraintSpec;
using mpc::GaussianPlan;
using mpc::PlannerConfig;
using mpc::PlanResult;
using wm::DreamerBundle;
using wm::Variant;
using net::Mat;
using net::Vec;

namespace {

constexpr int kJoints = 4;
constexpr int kObs = 3 * kJoints + 6;
constexpr double kInf = std::numeric_limits<double>::infinity();

DreamerBundle random_bundle(int horizon, std::uint64_t seed = 17,
                            int joints = kJoints) {
  Rng rng(seed);
  return wm::make_bundle(Variant::kNlm, 3 * joints + 6, joints, horizon, 1,
                         0, {16, 16}, net::Activation::kTanh, 1.0, rng);
}

net::MlpParams constant_net(int in, double c) {
  net::MlpParams p;
  p.activation = net::Activation::kTanh;
  p.layers.push_back({Mat::Zero(1, in), Vec::Constant(1, c)});
  return p;
}

net::MlpParams zero_net(int in, int out) {
  net::MlpParams p;
  p.activation = net::Activation::kTanh;
  p.layers.push_back({Mat::Zero(out, in), Vec::Zero(out)});
  return p;
}

// Frozen dream: dynamics never move, the policy proposes zeros, reward and
// value are constants. Scores then collapse to a geometric series.
DreamerBundle constant_bundle(double reward_c, double value_c,
                              int joints = kJoints) {
  DreamerBundle b;
  b.variant = Variant::kNlm;
  b.obs_dim = 3 * joints + 6;
  b.action_dim = joints;
  b.horizon = 1;
  b.history = 1;
  b.latent_dim = 0;
  b.action_bound = 1.0;
  b.dynamics = zero_net(b.obs_dim + joints, b.obs_dim);
  b.policy = zero_net(b.obs_dim, joints);
  b.reward = constant_net(b.obs_dim + joints, reward_c);
  b.value = constant_net(b.obs_dim, value_c);
  b.validate();
  return b;
}

Vec random_obs(Rng& rng, int dim = kObs, double scale = 0.4) {
  Vec o(dim);
  for (int i = 0; i < dim; ++i) o(i) = scale * rng.gaussian();
  return o;
}

double geometric_sum(double gamma, int horizon) {
  double total = 0.0;
  double g = 1.0;
  for (int k = 0; k < horizon; ++k) {
    total += g;
    g *= gamma;
  }
  return total;
}

PlannerConfig small_config() {
  PlannerConfig c;
  c.horizon = 5;
  c.iterations = 3;
  c.gaussian_samples = 40;
  c.policy_samples = 4;
  c.elite_count = 8;
  return c;
}

ConstraintSpec default_spec(const PlannerConfig& config, int joints = kJoints) {
  return mpc::default_constraints(env::EnvConfig::make_default(joints),
                                  config);
}

}  // namespace

TEST_CASE("planner config validation rejects broken settings") {
  PlannerConfig ok;
  CHECK_NOTHROW(ok.validate());

  PlannerConfig c = ok;
  c.elite_count = c.gaussian_samples + c.policy_samples + 1;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.discount = 1.0;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.momentum = 1.2;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.stddev_floor = 0.0;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.policy_samples = 0;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ok;
  c.roll_limit = 1.6;
  CHECK_THROWS_AS(c.validate(), ValueError);
}

TEST_CASE("constant-model score matches the geometric series") {
  const DreamerBundle bundle = constant_bundle(1.0, 2.0);
  Rng rng(3);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.3, 0.0, 0.1);

  const double gammas[] = {0.5, 0.9, 0.95, 0.99};
  const int horizons[] = {1, 2, 5, 10, 20};
  for (double gamma : gammas) {
    for (int horizon : horizons) {
      const Mat actions = Mat::Zero(kJoints, horizon);
      const auto scored = mpc::score_trajectory(
          bundle, obs, target, actions, ConstraintSpec{}, target, gamma, 1.0);
      const double expected =
          geometric_sum(gamma, horizon) + std::pow(gamma, horizon) * 2.0;
      CHECK(scored.ret == doctest::Approx(expected).epsilon(1e-10));
      CHECK(scored.feasible);
      CHECK(scored.finite);
      CHECK(scored.constraints.size() == 0);
    }
  }

  // The headline configuration, pinned numerically.
  const Mat actions = Mat::Zero(kJoints, 10);
  const auto scored = mpc::score_trajectory(
      bundle, obs, target, actions, ConstraintSpec{}, target, 0.99, 1.0);
  CHECK(scored.ret == doctest::Approx(11.370557).epsilon(1e-6));
}

TEST_CASE("violation penalty scales linearly and leaves the dream alone") {
  const DreamerBundle bundle = constant_bundle(1.0, 2.0);
  Rng rng(4);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.0, 0.0, 0.0);
  const Mat actions = Mat::Zero(kJoints, 10);

  ConstraintChannel unit;
  unit.name = "unit";
  unit.step = [](const Vec&, const Vec&, const Eigen::Vector3d&,
                 const Eigen::Vector3d&) { return 1.0; };
  unit.bound = 1e18;
  ConstraintSpec spec{unit};

  const auto lam0 = mpc::score_trajectory(bundle, obs, target, actions, spec,
                                          target, 0.99, 0.0);
  const auto lam2 = mpc::score_trajectory(bundle, obs, target, actions, spec,
                                          target, 0.99, 2.0);
  const double geom = geometric_sum(0.99, 10);
  CHECK(lam0.constraints(0) == doctest::Approx(geom).epsilon(1e-12));
  CHECK(lam0.ret - lam2.ret == doctest::Approx(2.0 * geom).epsilon(1e-12));
  CHECK(lam0.feasible);
  CHECK(lam2.feasible);
}

TEST_CASE("scoring dreams the exact deterministic rollout trajectory") {
  for (int horizon : {1, 3, 5}) {
    const DreamerBundle bundle = random_bundle(horizon, 11 + horizon);
    Rng rng(23 + horizon);
    const Vec obs = random_obs(rng);
    const env::ObsLayout layout(kJoints);
    const Eigen::Vector3d command = obs.segment<3>(layout.command);

    const wm::DreamTrajectory traj = wm::nlm_rollout(bundle, obs, horizon);
    Mat actions(kJoints, horizon);
    for (int k = 0; k < horizon; ++k) actions.col(k) = traj.actions[k];

    const auto scored = mpc::score_trajectory(
        bundle, obs, command, actions, ConstraintSpec{}, command, 0.99, 1.0);
    REQUIRE(scored.dream.observations.size() == traj.observations.size());
    for (std::size_t i = 0; i < traj.observations.size(); ++i) {
      // Bit-for-bit: the scorer must share the rollout's operation order.
      CHECK(scored.dream.observations[i] == traj.observations[i]);
    }
  }
}

TEST_CASE("constraint channels measure what they claim") {
  const env::ObsLayout layout(kJoints);
  Vec obs = Vec::Zero(kObs);

  SUBCASE("joint overshoot sums per-joint excess") {
    obs(layout.joint_pos + 0) = 0.3;
    obs(layout.joint_pos + 1) = -0.6;
    obs(layout.joint_pos + 2) = 0.1;
    const Vec limit = Vec::Constant(kJoints, 0.25);
    CHECK(mpc::joint_overshoot(layout, obs, limit) ==
          doctest::Approx(0.05 + 0.35).epsilon(1e-12));
  }

  SUBCASE("orientation overshoot uses roll and pitch from gravity") {
    obs(layout.gravity + 2) = -1.0;  // level
    CHECK(mpc::orientation_overshoot(layout, obs, 0.4, 0.4) == 0.0);

    obs(layout.gravity + 0) = 0.0;
    obs(layout.gravity + 1) = std::sin(0.5);
    obs(layout.gravity + 2) = -std::cos(0.5);
    CHECK(mpc::orientation_overshoot(layout, obs, 0.4, 0.4) ==
          doctest::Approx(0.1).epsilon(1e-12));

    obs(layout.gravity + 0) = -std::sin(0.6);
    obs(layout.gravity + 1) = 0.0;
    obs(layout.gravity + 2) = -std::cos(0.6);
    CHECK(mpc::orientation_overshoot(layout, obs, 0.4, 0.4) ==
          doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("command deviation is the worst per-axis excess") {
    const Eigen::Vector3d target(0.1, -0.2, 0.0);
    const Eigen::Vector3d command(0.6, -0.4, 0.0);
    const Eigen::Vector3d allowed(0.3, 0.3, 0.1);
    CHECK(mpc::command_deviation(command, target, allowed) ==
          doctest::Approx(0.2).epsilon(1e-12));
    // Inside the box the worst excess is negative, not clipped.
    CHECK(mpc::command_deviation(target, target, allowed) ==
          doctest::Approx(-0.1).epsilon(1e-12));
  }
}

TEST_CASE("command deviation accumulates in closed form in both scorers") {
  PlannerConfig config = small_config();
  config.horizon = 10;
  const ConstraintSpec spec = default_spec(config);
  const DreamerBundle bundle = constant_bundle(0.5, 1.0);
  Rng rng(6);
  Vec obs = random_obs(rng, kObs, 0.01);
  const Eigen::Vector3d target(0.2, 0.0, 0.0);
  Eigen::Vector3d command = target;
  command.x() += config.command_deviation.x() + 0.3;

  const Mat actions = Mat::Zero(kJoints, config.horizon);
  const auto ref = mpc::score_trajectory(bundle, obs, command, actions, spec,
                                         target, config.discount, 1.0);
  const double geom = geometric_sum(config.discount, config.horizon);
  const double step = (config.command_deviation.x() + 0.3) -
                      config.command_deviation.x();
  CHECK(ref.constraints(2) == doctest::Approx(step * geom).epsilon(1e-12));
  CHECK_FALSE(ref.feasible);

  const BatchScorer scorer(bundle, spec, config, target);
  Mat commands(3, 1);
  commands.col(0) = command;
  Mat action_cols(kJoints * config.horizon, 1);
  action_cols.setZero();
  const auto batch = scorer.score(obs, commands, action_cols);
  CHECK(batch.constraint_values(2, 0) ==
        doctest::Approx(step * geom).epsilon(1e-12));
  CHECK(batch.feasible[0] == 0);
}

TEST_CASE("batched scoring matches the reference within float precision") {
  PlannerConfig config = small_config();
  config.horizon = 10;
  const DreamerBundle bundle = random_bundle(config.horizon, 31);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(7);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.4, 0.1, -0.2);

  const int n = 200;
  Mat commands(3, n);
  Mat actions(kJoints * config.horizon, n);
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < 3; ++r) {
      commands(r, j) = target(r) + 0.5 * rng.uniform(-1.0, 1.0);
    }
    for (int r = 0; r < actions.rows(); ++r) {
      actions(r, j) = rng.uniform(-1.0, 1.0);
    }
  }

  const BatchScorer scorer(bundle, spec, config, target);
  const auto batch = scorer.score(obs, commands, actions);

  for (int j = 0; j < n; ++j) {
    Eigen::Map<const Mat> acts(actions.col(j).data(), kJoints, config.horizon);
    const auto ref = mpc::score_trajectory(
        bundle, obs, commands.col(j), acts, spec, target, config.discount,
        config.constraint_penalty);
    CHECK(std::abs(batch.returns(j) - ref.ret) <=
          1e-3 * (1.0 + std::abs(ref.ret)));
    for (int ch = 0; ch < 3; ++ch) {
      CHECK(std::abs(batch.constraint_values(ch, j) - ref.constraints(ch)) <=
            1e-3 * (1.0 + std::abs(ref.constraints(ch))));
      // Flags may only disagree when a channel sits within float noise of
      // its bound.
      const double margin = std::abs(ref.constraints(ch) - spec[ch].bound);
      if ((batch.feasible[j] != 0) != ref.feasible) {
        CHECK(margin <= 1e-3);
      }
    }
  }
}

TEST_CASE("batched policy dreams match the reference within float precision") {
  PlannerConfig config = small_config();
  config.horizon = 8;
  const DreamerBundle bundle = random_bundle(config.horizon, 41);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(8);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.1, -0.1, 0.2);
  const env::ObsLayout layout(kJoints);

  const int n = 9;
  Mat commands(3, n);
  Mat noise(kJoints * config.horizon, n);
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < 3; ++r) commands(r, j) = 0.3 * rng.gaussian();
    for (int r = 0; r < noise.rows(); ++r) noise(r, j) = 0.1 * rng.gaussian();
  }
  noise.col(0).setZero();

  const BatchScorer scorer(bundle, spec, config, target);
  const Mat dreamed = scorer.dream_policy_actions(obs, commands, noise);
  REQUIRE(dreamed.rows() == noise.rows());
  REQUIRE(dreamed.cols() == n);

  // Column 0: zero noise must reproduce the bundle's own rollout.
  const wm::DreamTrajectory traj = wm::nlm_rollout(
      bundle, wm::replace_command(layout, obs, commands.col(0)),
      config.horizon);
  for (int k = 0; k < config.horizon; ++k) {
    CHECK((dreamed.col(0).segment(k * kJoints, kJoints) - traj.actions[k])
              .cwiseAbs()
              .maxCoeff() < 1e-4);
  }
  CHECK((dreamed.array() <= bundle.action_bound + 1e-12).all());
  CHECK((dreamed.array() >= -bundle.action_bound - 1e-12).all());
}

TEST_CASE("refit collapses onto identical elites at the stddev floor") {
  PlannerConfig config;
  config.momentum = 1.0;
  config.stddev_floor = 0.05;
  const int dim = 7;
  Vec column(dim);
  column << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6, -0.7;
  Mat decisions = column.replicate(1, 5);
  Vec returns(5);
  returns << 1.0, 2.0, 3.0, 4.0, 5.0;

  GaussianPlan g;
  g.mean = Vec::Zero(dim);
  g.stddev = Vec::Constant(dim, 0.4);
  mpc::refit_distribution(config, decisions, returns, g);
  CHECK((g.mean - column).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.stddev.array() == config.stddev_floor).all());
}

TEST_CASE("refit weights are invariant to a uniform return shift") {
  PlannerConfig config;
  config.momentum = 0.8;
  config.temperature = 0.7;
  Rng rng(12);
  const int dim = 5;
  const int e = 6;
  Mat decisions(dim, e);
  for (int j = 0; j < e; ++j) decisions.col(j) = random_obs(rng, dim, 1.0);
  Vec returns(e);
  returns << 1.0, 5.0, 2.0, -3.0, 0.0, 4.0;  // exact binary values

  GaussianPlan a;
  a.mean = Vec::Zero(dim);
  a.stddev = Vec::Constant(dim, 0.3);
  GaussianPlan b = a;
  mpc::refit_distribution(config, decisions, returns, a);
  mpc::refit_distribution(config, decisions,
                          (returns.array() + 1024.0).matrix(), b);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
}

TEST_CASE("refit temperature sweeps between averaging and argmax") {
  PlannerConfig config;
  config.momentum = 1.0;
  config.stddev_floor = 1e-9;
  Rng rng(13);
  const int dim = 4;
  const int e = 5;
  Mat decisions(dim, e);
  for (int j = 0; j < e; ++j) decisions.col(j) = random_obs(rng, dim, 1.0);
  Vec returns(e);
  returns << -1.0, 2.0, 0.5, 1.9, -0.3;

  GaussianPlan hot;
  hot.mean = Vec::Zero(dim);
  hot.stddev = Vec::Constant(dim, 0.3);
  GaussianPlan cold = hot;

  config.temperature = 1e9;
  mpc::refit_distribution(config, decisions, returns, hot);
  CHECK((hot.mean - decisions.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-6);

  config.temperature = 1e-3;
  mpc::refit_distribution(config, decisions, returns, cold);
  CHECK((cold.mean - decisions.col(1)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("refit falls back to uniform weights when every elite blew up") {
  PlannerConfig config;
  config.momentum = 1.0;
  Rng rng(14);
  const int dim = 4;
  Mat decisions(dim, 3);
  for (int j = 0; j < 3; ++j) decisions.col(j) = random_obs(rng, dim, 1.0);
  const Vec returns = Vec::Constant(3, -kInf);

  GaussianPlan g;
  g.mean = Vec::Zero(dim);
  g.stddev = Vec::Constant(dim, 0.3);
  mpc::refit_distribution(config, decisions, returns, g);
  CHECK(g.mean.allFinite());
  CHECK(g.stddev.allFinite());
  CHECK((g.mean - decisions.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("refit rejects mismatched shapes") {
  PlannerConfig config;
  GaussianPlan g;
  g.mean = Vec::Zero(4);
  g.stddev = Vec::Constant(4, 0.1);
  CHECK_THROWS_AS(
      mpc::refit_distribution(config, Mat::Zero(3, 2), Vec::Zero(2), g),
      ShapeError);
  CHECK_THROWS_AS(
      mpc::refit_distribution(config, Mat::Zero(4, 2), Vec::Zero(3), g),
      ShapeError);
}

TEST_CASE("sampled candidates respect the command box and action bounds") {
  PlannerConfig config = small_config();
  config.record_candidates = true;
  config.command_deviation = Eigen::Vector3d(0.4, 0.3, 0.2);
  const DreamerBundle bundle = random_bundle(config.horizon, 51);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(15);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.5, -0.2, 0.3);

  const PlanResult result =
      mpc::plan(bundle, spec, config, obs, target, 99);
  REQUIRE(!result.recorded.empty());
  const std::int64_t expected =
      static_cast<std::int64_t>(config.iterations) *
          (config.gaussian_samples + config.policy_samples) +
      (config.iterations - 1) +  // carryover joins from round 1 on
      1;                         // the extraction mean
  CHECK(result.diagnostics.candidates_scored == expected);
  CHECK(static_cast<std::int64_t>(result.recorded.size()) == expected);

  bool saw_gaussian = false, saw_policy = false, saw_carry = false,
       saw_mean = false;
  for (const Candidate& c : result.recorded) {
    for (int r = 0; r < 3; ++r) {
      CHECK(c.command(r) >= target(r) - config.command_deviation(r) - 1e-12);
      CHECK(c.command(r) <= target(r) + config.command_deviation(r) + 1e-12);
    }
    CHECK(c.actions.cwiseAbs().maxCoeff() <= bundle.action_bound + 1e-12);
    switch (c.source) {
      case CandidateSource::kGaussian: saw_gaussian = true; break;
      case CandidateSource::kPolicy: saw_policy = true; break;
      case CandidateSource::kCarryover: saw_carry = true; break;
      case CandidateSource::kMean: saw_mean = true; break;
    }
  }
  CHECK(saw_gaussian);
  CHECK(saw_policy);
  CHECK(saw_carry);
  CHECK(saw_mean);
  CHECK(result.recorded.back().source == CandidateSource::kMean);
}

TEST_CASE("plans are deterministic in the seed") {
  PlannerConfig config = small_config();
  const DreamerBundle bundle = random_bundle(config.horizon, 61);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(16);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.2, 0.1, 0.0);

  const PlanResult a = mpc::plan(bundle, spec, config, obs, target, 1234);
  const PlanResult b = mpc::plan(bundle, spec, config, obs, target, 1234);
  CHECK(a.command == b.command);
  CHECK(a.first_action == b.first_action);
  CHECK(a.plan_actions == b.plan_actions);
  CHECK(a.feasible == b.feasible);
  CHECK(a.diagnostics.chosen_return == b.diagnostics.chosen_return);
  CHECK(a.diagnostics.best_return == b.diagnostics.best_return);
  CHECK(a.next_warm.mean == b.next_warm.mean);
  CHECK(a.next_warm.stddev == b.next_warm.stddev);

  const PlanResult c = mpc::plan(bundle, spec, config, obs, target, 1235);
  CHECK(a.plan_actions != c.plan_actions);
}

TEST_CASE("degenerate config reduces to the deterministic policy plan") {
  PlannerConfig config;
  config.horizon = 6;
  config.iterations = 1;
  config.gaussian_samples = 0;
  config.policy_samples = 1;
  config.elite_count = 1;
  config.momentum = 1.0;
  config.single_precision = false;
  const DreamerBundle bundle = random_bundle(config.horizon, 71);
  Rng rng(17);
  const Vec obs = random_obs(rng);
  const env::ObsLayout layout(kJoints);
  const Eigen::Vector3d target(0.3, -0.1, 0.2);

  const PlanResult result =
      mpc::plan(bundle, ConstraintSpec{}, config, obs, target, 7);
  const wm::DreamTrajectory traj = wm::nlm_rollout(
      bundle, wm::replace_command(layout, obs, target), config.horizon);

  CHECK(result.feasible);
  CHECK((result.command - target).cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 0; k < config.horizon; ++k) {
    CHECK((result.plan_actions.col(k) - traj.actions[k])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("chunked scoring is bitwise identical across thread counts") {
  PlannerConfig config = small_config();
  config.horizon = 7;
  const DreamerBundle bundle = random_bundle(config.horizon, 81);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(18);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.0, 0.2, -0.1);

  const int n = 300;
  Mat commands(3, n);
  Mat actions(kJoints * config.horizon, n);
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < 3; ++r) commands(r, j) = 0.4 * rng.gaussian();
    for (int r = 0; r < actions.rows(); ++r) {
      actions(r, j) = rng.uniform(-1.0, 1.0);
    }
  }

  const BatchScorer scorer(bundle, spec, config, target);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto serial = scorer.score(obs, commands, actions);
  omp_set_num_threads(4);
  const auto parallel = scorer.score(obs, commands, actions);

  CHECK(serial.returns == parallel.returns);
  CHECK(serial.constraint_values == parallel.constraint_values);
  CHECK(serial.feasible == parallel.feasible);

  // The whole planning call must agree as well.
  omp_set_num_threads(1);
  const PlanResult one = mpc::plan(bundle, spec, config, obs, target, 5);
  omp_set_num_threads(4);
  const PlanResult four = mpc::plan(bundle, spec, config, obs, target, 5);
  omp_set_num_threads(saved);
  CHECK(one.command == four.command);
  CHECK(one.plan_actions == four.plan_actions);
  CHECK(one.next_warm.mean == four.next_warm.mean);
  CHECK(one.diagnostics.best_return == four.diagnostics.best_return);
}

TEST_CASE("warm start shifts the emitted plan forward one step") {
  PlannerConfig config = small_config();
  config.record_candidates = true;
  const DreamerBundle bundle = random_bundle(config.horizon, 91);
  Rng rng(19);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.2, 0.0, 0.1);

  // No constraints: the extraction mean is always feasible and chosen.
  const PlanResult result =
      mpc::plan(bundle, ConstraintSpec{}, config, obs, target, 21);
  REQUIRE(result.recorded.back().source == CandidateSource::kMean);
  const Candidate& mean = result.recorded.back();
  CHECK(result.feasible);
  CHECK(result.command == mean.command);

  const int ka = kJoints;
  const int hk = ka * config.horizon;
  CHECK(result.next_warm.mean.head<3>() == mean.command);
  CHECK(result.next_warm.mean.segment(3, hk - ka) ==
        mean.actions.segment(ka, hk - ka));

  // The fresh tail is the policy's proposal at the dreamed terminal state.
  Eigen::Map<const Mat> acts(mean.actions.data(), ka, config.horizon);
  const auto ref = mpc::score_trajectory(
      bundle, obs, mean.command, acts, ConstraintSpec{}, target,
      config.discount, config.constraint_penalty);
  const Vec tail = net::mlp_forward(bundle.policy,
                                    ref.dream.observations.back())
                       .cwiseMax(-bundle.action_bound)
                       .cwiseMin(bundle.action_bound);
  CHECK(result.next_warm.mean.tail(ka) == tail);

  CHECK((result.next_warm.stddev.array() >= config.stddev_floor).all());
  CHECK((result.next_warm.stddev.tail(ka).array() ==
         std::max(config.init_action_stddev, config.stddev_floor))
            .all());

  // Feeding the warm start back in is accepted and deterministic.
  const PlanResult next = mpc::plan(bundle, ConstraintSpec{}, config, obs,
                                    target, 22, &result.next_warm);
  const PlanResult next2 = mpc::plan(bundle, ConstraintSpec{}, config, obs,
                                     target, 22, &result.next_warm);
  CHECK(next.plan_actions == next2.plan_actions);

  GaussianPlan bad = result.next_warm;
  bad.mean.conservativeResize(bad.mean.size() - 1);
  CHECK_THROWS_AS(mpc::plan(bundle, ConstraintSpec{}, config, obs, target, 23,
                            &bad),
                  ShapeError);
}

TEST_CASE("feasibility dominance and flag soundness on random plans") {
  PlannerConfig config = small_config();
  config.record_candidates = true;
  const DreamerBundle bundle = random_bundle(config.horizon, 101);
  env::EnvConfig env = env::EnvConfig::make_default(kJoints);
  env.q_soft_limit = Vec::Constant(kJoints, 2.0);  // rarely binding here
  ConstraintSpec spec = mpc::default_constraints(env, config);

  // An action-dependent channel guarantees each pool mixes feasible and
  // infeasible candidates (and exercises the scorer's custom-channel path).
  ConstraintChannel effort;
  effort.name = "action_effort";
  effort.bound = 0.35;
  effort.step = [](const Vec&, const Vec& action, const Eigen::Vector3d&,
                   const Eigen::Vector3d&) {
    return std::max(0.0, action.cwiseAbs().maxCoeff() - 0.5);
  };
  spec.push_back(effort);

  Rng rng(20);
  const env::ObsLayout layout(kJoints);
  int plans_with_mixed_pools = 0;
  for (int trial = 0; trial < 25; ++trial) {
    Vec obs = random_obs(rng, kObs, 0.1);
    obs(layout.gravity + 0) *= 0.3;
    obs(layout.gravity + 1) *= 0.3;
    obs(layout.gravity + 2) = -1.0;  // close to level
    const Eigen::Vector3d target(0.3 * rng.gaussian(), 0.3 * rng.gaussian(),
                                 0.2 * rng.gaussian());
    const PlanResult result =
        mpc::plan(bundle, spec, config, obs, target, 300 + trial);

    bool any_feasible = false;
    int feasible_count = 0;
    for (const Candidate& c : result.recorded) {
      // Soundness: the flag must agree with the reported channel values.
      bool ok = c.ret > -kInf && c.constraint_values.allFinite();
      if (ok) {
        for (int ch = 0; ch < static_cast<int>(spec.size()); ++ch) {
          if (c.constraint_values(ch) > spec[ch].bound) ok = false;
        }
      }
      CHECK(c.feasible == ok);
      any_feasible = any_feasible || c.feasible;
      feasible_count += c.feasible ? 1 : 0;
    }
    if (feasible_count > 0 &&
        feasible_count < static_cast<int>(result.recorded.size())) {
      ++plans_with_mixed_pools;
    }

    // Dominance: a feasible pool must yield a feasible plan whose reported
    // channels sit within bounds.
    if (any_feasible) {
      CHECK(result.feasible);
      for (int ch = 0; ch < static_cast<int>(spec.size()); ++ch) {
        CHECK(result.diagnostics.chosen_constraints(ch) <= spec[ch].bound);
      }
    }

    // Monotone progress of the running best return.
    const auto& series = result.diagnostics.best_return;
    for (std::size_t i = 1; i < series.size(); ++i) {
      CHECK(series[i] >= series[i - 1]);
    }
  }
  // The harness only means something if both kinds of candidates appeared.
  CHECK(plans_with_mixed_pools > 0);
}

TEST_CASE("controller derives fresh streams per step and episode") {
  PlannerConfig config = small_config();
  config.iterations = 2;
  config.gaussian_samples = 20;
  const DreamerBundle bundle = random_bundle(config.horizon, 111);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(21);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.2, 0.1, 0.0);

  mpc::MpcController a(bundle, spec, config, 42);
  mpc::MpcController b(bundle, spec, config, 42);
  a.reset(0);
  b.reset(0);
  const PlanResult a0 = a.step(obs, target);
  const PlanResult a1 = a.step(obs, target);
  CHECK(a0.plan_actions != a1.plan_actions);  // warm start + new stream

  const PlanResult b0 = b.step(obs, target);
  CHECK(a0.plan_actions == b0.plan_actions);  // reproducible across instances

  mpc::MpcController c(bundle, spec, config, 42);
  c.reset(1);  // different episode: different streams
  const PlanResult c0 = c.step(obs, target);
  CHECK(a0.plan_actions != c0.plan_actions);
}

TEST_CASE("plan input validation") {
  PlannerConfig config = small_config();
  const DreamerBundle bundle = random_bundle(config.horizon, 121);
  const ConstraintSpec spec = default_spec(config);
  Rng rng(22);
  const Vec obs = random_obs(rng);
  const Eigen::Vector3d target(0.1, 0.0, 0.0);

  CHECK_THROWS_AS(mpc::plan(bundle, spec, config, Vec::Zero(kObs + 1), target,
                            1),
                  ShapeError);
  Vec bad = obs;
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mpc::plan(bundle, spec, config, bad, target, 1), ValueError);

  Rng brng(23);
  const DreamerBundle plm = wm::make_bundle(
      Variant::kPlm, kObs, kJoints, config.horizon, 4, 8, {16, 16},
      net::Activation::kTanh, 1.0, brng);
  CHECK_THROWS_AS(mpc::plan(plm, spec, config, obs, target, 1), ValueError);

  BatchScorer scorer(bundle, spec, config, target);
  CHECK_THROWS_AS(scorer.score(obs, Mat::Zero(2, 4),
                               Mat::Zero(kJoints * config.horizon, 4)),
                  ShapeError);
  CHECK_THROWS_AS(scorer.score(obs, Mat::Zero(3, 4),
                               Mat::Zero(kJoints * config.horizon + 1, 4)),
                  ShapeError);
}

TEST_CASE("planner reaches the enumerated grid optimum on a small problem") {
  // Small enough to enumerate: 2 joints, horizon 3, 3-level action grid.
  const int joints = 2;
  PlannerConfig config;
  config.horizon = 3;
  config.iterations = 4;
  config.gaussian_samples = 150;
  config.policy_samples = 2;
  config.elite_count = 15;
  config.init_action_stddev = 0.6;
  config.command_deviation.setZero();  // plan over actions only
  config.single_precision = false;

  int hits = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(500 + trial);
    DreamerBundle bundle = wm::make_bundle(
        Variant::kNlm, 3 * joints + 6, joints, config.horizon, 1, 0, {8},
        net::Activation::kTanh, 1.0, rng);
    // Shift rewards positive so a relative tolerance is meaningful.
    bundle.reward.layers.back().b(0) += 2.5;
    const Vec obs = random_obs(rng, 3 * joints + 6, 0.3);
    const Eigen::Vector3d target(0.2, 0.0, 0.0);

    // Exhaustive search over the 3^(k*H) = 729 grid plans.
    const double levels[] = {-1.0, 0.0, 1.0};
    const int entries = joints * config.horizon;
    double grid_best = -kInf;
    Mat actions(joints, config.horizon);
    for (int code = 0; code < 729; ++code) {
      int c = code;
      for (int e = 0; e < entries; ++e) {
        actions(e % joints, e / joints) = levels[c % 3];
        c /= 3;
      }
      const auto scored = mpc::score_trajectory(
          bundle, obs, target, actions, ConstraintSpec{}, target,
          config.discount, config.constraint_penalty);
      grid_best = std::max(grid_best, scored.ret);
    }

    const PlanResult result = mpc::plan(bundle, ConstraintSpec{}, config, obs,
                                        target, 9000 + trial);
    const double planner_best = result.diagnostics.best_return.back();
    if (planner_best >= grid_best - 0.05 * std::abs(grid_best)) ++hits;
  }
  // The continuous planner may beat the grid; it must rarely trail it.
  CHECK(hits >= 19);
}
