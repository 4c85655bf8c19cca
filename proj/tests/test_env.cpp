#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dreamplan/env/surrogate.hpp"
#include "dreamplan/error.hpp"
#include "oracles.hpp"

using namespace dreamplan;
using env::EnvConfig;
using env::EnvState;
using env::Vec;

namespace {

EnvState random_state(const EnvConfig& cfg, Rng& rng, double scale = 0.3) {
  EnvState s;
  s.q = cfg.q_nominal;
  s.qd = Vec::Zero(cfg.joint_count);
  s.prev_action = Vec::Zero(cfg.joint_count);
  for (int i = 0; i < cfg.joint_count; ++i) {
    s.q(i) += scale * rng.gaussian();
    s.qd(i) = scale * rng.gaussian();
    s.prev_action(i) = 0.5 * rng.uniform(-1, 1);
  }
  s.twist = Eigen::Vector3d(scale * rng.gaussian(), scale * rng.gaussian(),
                            scale * rng.gaussian());
  s.roll = 0.2 * rng.gaussian();
  s.pitch = 0.2 * rng.gaussian();
  s.roll_rate = scale * rng.gaussian();
  s.pitch_rate = scale * rng.gaussian();
  return s;
}

Vec random_action(const EnvConfig& cfg, Rng& rng) {
  Vec a(cfg.joint_count);
  for (int i = 0; i < cfg.joint_count; ++i) {
    a(i) = cfg.action_bound * rng.uniform(-1, 1);
  }
  return a;
}

}  // namespace

TEST_CASE("integrator matches the independent scalar oracle step by step") {
  EnvConfig cfg = EnvConfig::make_default(4);
  Rng rng(11);
  EnvState state = random_state(cfg, rng);
  oracles::ScalarEnvState ref = oracles::from_env_state(state);

  for (int step = 0; step < 200; ++step) {
    Vec a = random_action(cfg, rng);
    state = env::step_dynamics(cfg, state, a);
    ref = oracles::step_dynamics_scalar(
        cfg, ref, std::vector<double>(a.data(), a.data() + a.size()));

    for (int i = 0; i < cfg.joint_count; ++i) {
      CHECK(std::abs(state.q(i) - ref.q[i]) < 1e-12);
      CHECK(std::abs(state.qd(i) - ref.qd[i]) < 1e-12);
    }
    CHECK(std::abs(state.twist.x() - ref.vx) < 1e-12);
    CHECK(std::abs(state.twist.y() - ref.vy) < 1e-12);
    CHECK(std::abs(state.twist.z() - ref.wz) < 1e-12);
    CHECK(std::abs(state.roll - ref.roll) < 1e-12);
    CHECK(std::abs(state.pitch - ref.pitch) < 1e-12);
    CHECK(std::abs(state.roll_rate - ref.roll_rate) < 1e-12);
    CHECK(std::abs(state.pitch_rate - ref.pitch_rate) < 1e-12);
    CHECK(state.step_index == step + 1);
  }
}

TEST_CASE("gravity vector has the documented convention and unit norm") {
  Eigen::Vector3d level = env::gravity_vector(0.0, 0.0);
  CHECK(level.x() == 0.0);
  CHECK(level.y() == 0.0);
  CHECK(level.z() == -1.0);

  const double half_pi = 1.5707963267948966;
  Eigen::Vector3d rolled = env::gravity_vector(half_pi, 0.0);
  CHECK(rolled.y() == doctest::Approx(1.0));
  Eigen::Vector3d pitched = env::gravity_vector(0.0, half_pi);
  CHECK(pitched.x() == doctest::Approx(-1.0));

  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    double r = rng.uniform(-1.5, 1.5), p = rng.uniform(-1.5, 1.5);
    Eigen::Vector3d g = env::gravity_vector(r, p);
    CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.x() == doctest::Approx(-std::sin(p)).epsilon(1e-12));
    CHECK(g.y() == doctest::Approx(std::sin(r) * std::cos(p)).epsilon(1e-12));
    CHECK(g.z() == doctest::Approx(-std::cos(r) * std::cos(p)).epsilon(1e-12));
  }
}

TEST_CASE("relaxed log barrier is C1-continuous at the switch point") {
  const double delta = 0.05;
  // Value continuity at x = delta: both branches give 0.
  CHECK(env::relaxed_log_barrier(delta, delta) == doctest::Approx(0.0));
  double below = env::relaxed_log_barrier(delta - 1e-9, delta);
  CHECK(std::abs(below) < 1e-7);

  // Slope continuity: finite differences straddling the switch point.
  double h = 1e-7;
  double slope_log =
      (env::relaxed_log_barrier(delta + 2 * h, delta) -
       env::relaxed_log_barrier(delta + h, delta)) / h;
  double slope_quad =
      (env::relaxed_log_barrier(delta - h, delta) -
       env::relaxed_log_barrier(delta - 2 * h, delta)) / h;
  CHECK(oracles::relative_error(slope_log, 1.0 / delta) < 1e-4);
  CHECK(oracles::relative_error(slope_quad, 1.0 / delta) < 1e-4);

  // Known values: log branch at x = 1, quadratic branch at x = 0.
  CHECK(env::relaxed_log_barrier(1.0, delta) ==
        doctest::Approx(std::log(1.0 / delta)).epsilon(1e-14));
  CHECK(env::relaxed_log_barrier(0.0, delta) ==
        doctest::Approx(0.5 * (1.0 - 4.0)).epsilon(1e-14));

  // Monotone increasing across the domain.
  double prev = env::relaxed_log_barrier(-0.5, delta);
  for (double x = -0.45; x < 1.0; x += 0.05) {
    double cur = env::relaxed_log_barrier(x, delta);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(env::relaxed_log_barrier(0.1, 0.0), ValueError);
}

TEST_CASE("reward at nominal rest with zero command hits the closed form") {
  EnvConfig cfg = EnvConfig::make_default(4);
  EnvState s;
  s.q = cfg.q_nominal;
  s.qd = Vec::Zero(4);
  s.prev_action = Vec::Zero(4);

  Vec zero_action = Vec::Zero(4);
  auto terms = env::compute_reward(cfg, s, zero_action, zero_action,
                                   Eigen::Vector3d::Zero());
  const auto& rp = cfg.reward;
  CHECK(terms.track_lin == doctest::Approx(rp.w_track_lin).epsilon(1e-14));
  CHECK(terms.track_ang == doctest::Approx(rp.w_track_ang).epsilon(1e-14));
  CHECK(terms.orientation == 0.0);
  CHECK(terms.action_rate == 0.0);
  CHECK(terms.joint_vel == 0.0);
  double expected_barrier =
      rp.w_barrier * 4.0 * std::log(1.0 / rp.barrier_delta);
  CHECK(terms.barrier == doctest::Approx(expected_barrier).epsilon(1e-14));
  CHECK(terms.total() ==
        doctest::Approx(rp.w_track_lin + rp.w_track_ang + expected_barrier)
            .epsilon(1e-14));
}

TEST_CASE("reward terms carry their documented signs") {
  EnvConfig cfg = EnvConfig::make_default(4);
  Rng rng(21);
  for (int i = 0; i < 30; ++i) {
    EnvState s = random_state(cfg, rng);
    Vec a = random_action(cfg, rng);
    Vec pa = random_action(cfg, rng);
    Eigen::Vector3d cmd(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                        rng.uniform(-0.5, 0.5));
    auto terms = env::compute_reward(cfg, s, a, pa, cmd);
    CHECK(terms.track_lin > 0.0);
    CHECK(terms.track_lin <= cfg.reward.w_track_lin);
    CHECK(terms.track_ang > 0.0);
    CHECK(terms.track_ang <= cfg.reward.w_track_ang);
    CHECK(terms.orientation <= 0.0);
    CHECK(terms.action_rate <= 0.0);
    CHECK(terms.joint_vel <= 0.0);
    CHECK(std::isfinite(terms.total()));
  }
}

TEST_CASE("step rejects invalid actions") {
  EnvConfig cfg = EnvConfig::make_default(4);
  env::SurrogateEnv sim(cfg, 9);
  sim.reset(1);

  Vec nan_action = Vec::Zero(4);
  nan_action(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sim.step(nan_action, Eigen::Vector3d::Zero()), ValueError);

  Vec big_action = Vec::Constant(4, cfg.action_bound + 0.5);
  CHECK_THROWS_AS(sim.step(big_action, Eigen::Vector3d::Zero()), ValueError);

  CHECK_THROWS_AS(sim.step(Vec::Zero(3), Eigen::Vector3d::Zero()), ShapeError);
}

TEST_CASE("episodes end on falls and on the step cap") {
  EnvConfig cfg = EnvConfig::make_default(4);
  cfg.noise_level = env::NoiseLevel::kOff;

  // Fall: start tipped past the threshold rate so attitude crosses it.
  env::SurrogateEnv sim(cfg, 3);
  sim.reset(3);
  EnvState tipped = sim.state();
  CHECK_FALSE(env::is_fallen(cfg, tipped));
  tipped.roll = cfg.fall_threshold + 0.01;
  CHECK(env::is_fallen(cfg, tipped));

  // Step cap: zero actions from rest never fall; done exactly at max_steps.
  cfg.max_steps = 50;
  env::SurrogateEnv capped(cfg, 4);
  capped.reset(4);
  Vec zero = Vec::Zero(4);
  for (int i = 0; i < 49; ++i) {
    auto r = capped.step(zero, Eigen::Vector3d::Zero());
    CHECK_FALSE(r.done);
  }
  auto last = capped.step(zero, Eigen::Vector3d::Zero());
  CHECK(last.done);
  CHECK_FALSE(last.fallen);
  CHECK(capped.state().step_index == 50);
}

TEST_CASE("observation layout carries state, command, and previous action") {
  EnvConfig cfg = EnvConfig::make_default(4);
  cfg.noise_level = env::NoiseLevel::kOff;
  Rng rng(31);
  EnvState s = random_state(cfg, rng);
  Eigen::Vector3d cmd(0.25, -0.1, 0.4);
  Vec obs = env::make_observation(cfg, s, cmd);

  env::ObsLayout layout(4);
  REQUIRE(obs.size() == layout.dim);
  CHECK((obs.segment(layout.joint_pos, 4) - (s.q - cfg.q_nominal)).norm() == 0.0);
  CHECK((obs.segment(layout.joint_vel, 4) - s.qd).norm() == 0.0);
  CHECK((obs.segment<3>(layout.gravity) -
         env::gravity_vector(s.roll, s.pitch)).norm() == 0.0);
  CHECK((obs.segment<3>(layout.command) - cmd).norm() == 0.0);
  CHECK((obs.segment(layout.prev_action, 4) - s.prev_action).norm() == 0.0);
}

TEST_CASE("observation noise is seeded and spares exact channels") {
  EnvConfig cfg = EnvConfig::make_default(4);
  cfg.noise_level = env::NoiseLevel::kHigh;
  Eigen::Vector3d cmd(0.1, 0.2, -0.3);

  env::SurrogateEnv a(cfg, 55), b(cfg, 55), c(cfg, 55);
  a.reset(5);
  b.reset(5);
  c.reset(6);  // episode seed drives the noise stream
  Vec obs_a = a.observe(cmd);
  Vec obs_b = b.observe(cmd);
  Vec obs_c = c.observe(cmd);
  CHECK((obs_a - obs_b).norm() == 0.0);  // same seed, same noise
  CHECK((obs_a - obs_c).norm() > 0.0);   // different stream

  // Command and previous-action slices stay exact even at high noise.
  env::ObsLayout layout(4);
  Vec clean = env::make_observation(cfg, a.state(), cmd);
  CHECK((obs_a.segment<3>(layout.command) -
         clean.segment<3>(layout.command)).norm() == 0.0);
  CHECK((obs_a.segment(layout.prev_action, 4) -
         clean.segment(layout.prev_action, 4)).norm() == 0.0);
  CHECK((obs_a.segment(layout.joint_pos, 4) -
         clean.segment(layout.joint_pos, 4)).norm() > 0.0);

  cfg.noise_level = env::NoiseLevel::kOff;
  env::SurrogateEnv quiet(cfg, 55);
  quiet.reset(5);
  Vec obs_q = quiet.observe(cmd);
  Vec clean_q = env::make_observation(cfg, quiet.state(), cmd);
  CHECK((obs_q - clean_q).norm() == 0.0);
}

TEST_CASE("reset is seed-deterministic with bounded perturbation") {
  EnvConfig cfg = EnvConfig::make_default(4);
  env::SurrogateEnv a(cfg, 1), b(cfg, 2);
  a.reset(42);
  b.reset(42);
  CHECK((a.state().q - b.state().q).norm() == 0.0);
  CHECK(a.state().qd.norm() == 0.0);
  CHECK(a.state().twist.norm() == 0.0);
  CHECK(a.state().step_index == 0);

  a.reset(43);
  CHECK((a.state().q - b.state().q).norm() > 0.0);
}

TEST_CASE("disturbances hit the twist and appear for exactly one step") {
  EnvConfig cfg = EnvConfig::make_default(4);
  env::SurrogateEnv sim(cfg, 8);
  sim.reset(8);
  Eigen::Vector3d before = sim.state().twist;

  Eigen::Vector3d impulse(0.4, -0.2, 0.1);
  sim.apply_disturbance(impulse);
  CHECK((sim.state().twist - (before + impulse)).norm() == 0.0);

  Vec priv = env::privileged_observation(sim.state());
  REQUIRE(priv.size() == env::kPrivilegedDim);
  CHECK((priv.segment<3>(3) - impulse).norm() == 0.0);

  auto r = sim.step(Vec::Zero(4), Eigen::Vector3d::Zero());
  CHECK(r.privileged.segment<3>(3).norm() == 0.0);  // cleared after the step

  Eigen::Vector3d bad(std::numeric_limits<double>::quiet_NaN(), 0, 0);
  CHECK_THROWS_AS(sim.apply_disturbance(bad), ValueError);
}

TEST_CASE("config json round-trips and validation rejects bad configs") {
  EnvConfig cfg = EnvConfig::make_default(6, 321);
  cfg.noise_level = env::NoiseLevel::kMedium;
  nlohmann::json j = cfg;
  EnvConfig back = j.get<EnvConfig>();
  CHECK(back.joint_count == 6);
  CHECK(back.noise_level == env::NoiseLevel::kMedium);
  CHECK((back.twist_from_q - cfg.twist_from_q).norm() == 0.0);
  CHECK((back.tilt_from_qd - cfg.tilt_from_qd).norm() == 0.0);
  CHECK(back.reward.w_track_lin == cfg.reward.w_track_lin);

  EnvConfig bad = cfg;
  bad.q_nominal = Vec::Zero(3);
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  bad = cfg;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = cfg;
  bad.q_soft_limit(0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);

  CHECK(env::noise_level_from_name("high") == env::NoiseLevel::kHigh);
  CHECK_THROWS_AS(env::noise_level_from_name("loud"), ValueError);
  CHECK(env::noise_level_sigma(env::NoiseLevel::kOff) == 0.0);
  CHECK(env::noise_level_sigma(env::NoiseLevel::kHigh) ==
        doctest::Approx(0.05));
}

TEST_CASE("default coupling matrices are seed-stable and row-normalized") {
  EnvConfig a = EnvConfig::make_default(4, 99);
  EnvConfig b = EnvConfig::make_default(4, 99);
  EnvConfig c = EnvConfig::make_default(4, 100);
  CHECK((a.twist_from_q - b.twist_from_q).norm() == 0.0);
  CHECK((a.twist_from_q - c.twist_from_q).norm() > 0.0);
  for (int r = 0; r < 3; ++r) {
    CHECK(a.twist_from_q.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.twist_from_qd.row(r).norm() == doctest::Approx(0.1).epsilon(1e-12));
  }
  for (int r = 0; r < 2; ++r) {
    CHECK(a.tilt_from_qd.row(r).norm() == doctest::Approx(0.3).epsilon(1e-12));
  }
}
