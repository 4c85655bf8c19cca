#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dreamplan/error.hpp"
#include "dreamplan/wm/rollout.hpp"
#include "oracles.hpp"

using namespace dreamplan;
using wm::DreamerBundle;
using wm::ObservationHistory;
using wm::Variant;
using wm::Vec;

namespace {

constexpr int kJoints = 4;
constexpr int kObs = 3 * kJoints + 6;

DreamerBundle test_bundle(Variant variant, int horizon, int history,
                          std::uint64_t seed = 17) {
  Rng rng(seed);
  return wm::make_bundle(variant, kObs, kJoints, horizon, history,
                         /*latent_dim=*/variant == Variant::kNlm ? 0 : 8,
                         {16, 16}, net::Activation::kTanh, 1.0, rng);
}

Vec random_obs(Rng& rng) {
  Vec o(kObs);
  for (int i = 0; i < kObs; ++i) o(i) = 0.4 * rng.gaussian();
  return o;
}

net::MlpParams velocity_net(int history, std::uint64_t seed = 5) {
  Rng rng(seed);
  return net::make_mlp(history * kObs, {16}, 3, net::Activation::kTanh, rng);
}

}  // namespace

TEST_CASE("observation history pads with the earliest observation") {
  ObservationHistory hist(4, 2);
  CHECK_THROWS_AS(hist.latest(), ValueError);

  Vec o1(2), o2(2), o3(2);
  o1 << 1, 1;
  o2 << 2, 2;
  o3 << 3, 3;

  hist.push(o1);
  CHECK(hist.count() == 1);
  CHECK_FALSE(hist.filled());
  // All four window columns are the single stored observation.
  auto w = hist.window();
  for (int c = 0; c < 4; ++c) CHECK(w(0, c) == 1.0);
  CHECK(hist.at_offset(-3)(0) == 1.0);

  hist.push(o2);
  hist.push(o3);
  w = hist.window();
  // Oldest-first with padding: [1, 1, 2, 3].
  CHECK(w(0, 0) == 1.0);
  CHECK(w(0, 1) == 1.0);
  CHECK(w(0, 2) == 2.0);
  CHECK(w(0, 3) == 3.0);
  CHECK(hist.latest()(0) == 3.0);
  CHECK(hist.at_offset(-1)(0) == 2.0);

  Vec flat = hist.window_flat();
  REQUIRE(flat.size() == 8);
  CHECK(flat(0) == 1.0);
  CHECK(flat(6) == 3.0);

  // Ring behavior once filled.
  Vec o4(2), o5(2);
  o4 << 4, 4;
  o5 << 5, 5;
  hist.push(o4);
  hist.push(o5);
  w = hist.window();
  CHECK(w(0, 0) == 2.0);
  CHECK(w(0, 3) == 5.0);
  CHECK(hist.filled());

  CHECK_THROWS_AS(hist.push(Vec::Zero(3)), ShapeError);
  CHECK_THROWS_AS(hist.at_offset(1), ValueError);
}

TEST_CASE("nlm rollout matches a hand-rolled dream loop exactly") {
  auto bundle = test_bundle(Variant::kNlm, 6, 1);
  Rng rng(23);
  Vec obs = random_obs(rng);

  auto traj = wm::nlm_rollout(bundle, obs, 6);
  REQUIRE(traj.observations.size() == 7);
  REQUIRE(traj.actions.size() == 6);
  CHECK((traj.observations[0] - obs).norm() == 0.0);
  CHECK(traj.latent.size() == 0);

  env::ObsLayout layout(kJoints);
  Vec cur = obs;
  for (int j = 0; j < 6; ++j) {
    Vec a = net::mlp_forward(bundle.policy, cur);
    a = a.cwiseMax(-1.0).cwiseMin(1.0);
    CHECK((traj.actions[j] - a).norm() == 0.0);

    Vec in(kObs + kJoints);
    in << cur, a;
    Vec next = cur + net::mlp_forward(bundle.dynamics, in);
    next.segment<3>(layout.command) = obs.segment<3>(layout.command);
    CHECK((traj.observations[j + 1] - next).norm() == 0.0);
    cur = next;
  }
}

TEST_CASE("dreamed commands never drift from the seed command") {
  auto bundle = test_bundle(Variant::kNlm, 10, 1);
  env::ObsLayout layout(kJoints);
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Vec obs = random_obs(rng);
    Eigen::Vector3d cmd(rng.uniform(-1, 1), rng.uniform(-1, 1),
                        rng.uniform(-1, 1));
    obs = wm::replace_command(layout, obs, cmd);
    auto traj = wm::nlm_rollout(bundle, obs, 10);
    for (const Vec& o : traj.observations) {
      CHECK((o.segment<3>(layout.command) - cmd).norm() == 0.0);
    }
  }
}

TEST_CASE("dream actions saturate at the action bound") {
  auto bundle = test_bundle(Variant::kNlm, 3, 1);
  // Blow up the policy output layer so raw outputs far exceed the bound.
  bundle.policy.layers.back().W *= 1e3;
  bundle.policy.layers.back().b.array() += 10.0;
  Rng rng(37);
  auto traj = wm::nlm_rollout(bundle, random_obs(rng), 3);
  for (const Vec& a : traj.actions) {
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
  }
}

TEST_CASE("rollouts enforce variant and history preconditions") {
  auto nlm = test_bundle(Variant::kNlm, 4, 1);
  auto plm = test_bundle(Variant::kPlm, 4, 6);
  auto vel1 = velocity_net(1);
  auto vel6 = velocity_net(6);
  Rng rng(41);
  Vec obs = random_obs(rng);

  CHECK_THROWS_AS(wm::nlm_rollout(plm, obs, 4), ValueError);
  CHECK_THROWS_AS(wm::nlm_rollout(nlm, Vec::Zero(kObs + 1), 4), ShapeError);

  ObservationHistory hist(6, kObs);
  hist.push(obs);  // not filled yet
  CHECK_THROWS_AS(wm::plm_rollout(plm, hist, vel6), ValueError);

  ObservationHistory nlm_hist(1, kObs);
  CHECK_THROWS_AS(wm::estimate_velocity(vel1, nlm_hist), ValueError);
  nlm_hist.push(obs);
  CHECK_THROWS_AS(wm::plm_rollout(nlm, nlm_hist, vel1), ValueError);
  CHECK(wm::estimate_velocity(vel1, nlm_hist).size() == 3);
}

TEST_CASE("plm rollout conditions every step on a fixed latent and twist") {
  auto bundle = test_bundle(Variant::kPlm, 5, 6);
  auto vel = velocity_net(6);
  Rng rng(43);
  ObservationHistory hist(6, kObs);
  for (int i = 0; i < 6; ++i) hist.push(random_obs(rng));

  auto traj = wm::plm_rollout(bundle, hist, vel);
  REQUIRE(traj.observations.size() == 6);  // bundle horizon 5
  REQUIRE(traj.actions.size() == 5);
  REQUIRE(traj.latent.size() == 8);
  REQUIRE(traj.velocity.size() == 3);
  CHECK((traj.observations[0] - hist.latest()).norm() == 0.0);

  // Reproduce by hand: z and v_hat from the real window, then dream.
  Vec z = net::mlp_forward(bundle.encoder, hist.window_flat());
  Vec v = net::mlp_forward(vel, hist.window_flat());
  CHECK((traj.latent - z).norm() == 0.0);
  CHECK((traj.velocity - v).norm() == 0.0);

  env::ObsLayout layout(kJoints);
  Vec cur = hist.latest();
  for (int j = 0; j < 5; ++j) {
    Vec pin(kObs + 8 + 3);
    pin << cur, z, v;
    Vec a = net::mlp_forward(bundle.policy, pin).cwiseMax(-1.0).cwiseMin(1.0);
    CHECK((traj.actions[j] - a).norm() == 0.0);
    Vec din(kObs + 8 + 3 + kJoints);
    din << cur, z, v, a;
    Vec next = cur + net::mlp_forward(bundle.dynamics, din);
    next.segment<3>(layout.command) = cur.segment<3>(layout.command);
    CHECK((traj.observations[j + 1] - next).norm() == 0.0);
    cur = next;
  }
}

TEST_CASE("dream window mixes real and dreamed observations by recency") {
  const int window = 6;
  ObservationHistory hist(window, 1);
  // Real observations valued -5..0 (0 is "now"); dreamed valued 1..8.
  for (int v = -5; v <= 0; ++v) hist.push(Vec::Constant(1, v));
  std::vector<Vec> dreamed;
  for (int v = 0; v <= 8; ++v) dreamed.push_back(Vec::Constant(1, v));

  for (int j = 0; j <= 8; ++j) {
    auto w = wm::dream_window(hist, dreamed, j, window);
    REQUIRE(w.cols() == window);
    int real = 0, dreamt = 0;
    for (int s = 0; s < window; ++s) {
      double value = w(0, s);
      // Columns are consecutive time stamps ending at step j.
      CHECK(value == doctest::Approx(j - (window - 1) + s));
      if (value >= 1) {
        ++dreamt;
      } else {
        ++real;
      }
    }
    CHECK(real == std::max(0, window - j));
    CHECK(dreamt == std::min(j, window));
  }

  CHECK_THROWS_AS(wm::dream_window(hist, dreamed, 9, window), ValueError);
  CHECK_THROWS_AS(wm::dream_window(hist, dreamed, -1, window), ValueError);
}

TEST_CASE("flm encode summarizes the dreamed and real windows") {
  auto bundle = test_bundle(Variant::kFlm, 6, 6);
  auto vel = velocity_net(6);
  Rng rng(47);
  ObservationHistory hist(6, kObs);
  for (int i = 0; i < 6; ++i) hist.push(random_obs(rng));

  auto [y_future, y_past] = wm::flm_encode(bundle, hist, vel);
  REQUIRE(y_future.size() == 8);
  REQUIRE(y_past.size() == 8);

  // y_past is the encoder applied to the real window.
  Vec expect_past = net::mlp_forward(bundle.encoder, hist.window_flat());
  CHECK((y_past - expect_past).norm() == 0.0);

  // y_future is the encoder applied to the dreamed window (steps 1..H).
  auto traj = wm::plm_rollout(bundle, hist, vel);
  Vec future_flat(6 * kObs);
  for (int i = 0; i < 6; ++i) {
    future_flat.segment(i * kObs, kObs) = traj.observations[i + 1];
  }
  Vec expect_future = net::mlp_forward(bundle.encoder, future_flat);
  CHECK((y_future - expect_future).norm() == 0.0);

  auto plm = test_bundle(Variant::kPlm, 6, 6);
  CHECK_THROWS_AS(wm::flm_encode(plm, hist, vel), ValueError);
}

TEST_CASE("actor input has the variant-specific width and layout") {
  Rng rng(53);
  Vec obs = random_obs(rng);

  SUBCASE("nlm") {
    auto bundle = test_bundle(Variant::kNlm, 4, 1);
    auto vel = velocity_net(1);
    ObservationHistory hist(1, kObs);
    hist.push(obs);
    Vec in = wm::actor_input(bundle, obs, hist, vel);
    REQUIRE(in.size() == wm::actor_input_dim(Variant::kNlm, kObs, 4, 0));
    REQUIRE(in.size() == kObs + 3 + 4 * kObs);

    CHECK((in.head(kObs) - obs).norm() == 0.0);
    Vec v = net::mlp_forward(vel, obs);
    CHECK((in.segment<3>(kObs) - v).norm() == 0.0);
    auto traj = wm::nlm_rollout(bundle, obs, 4);
    for (int i = 0; i < 4; ++i) {
      CHECK((in.segment(kObs + 3 + i * kObs, kObs) - traj.observations[i + 1])
                .norm() == 0.0);
    }
  }

  SUBCASE("plm") {
    auto bundle = test_bundle(Variant::kPlm, 4, 3);
    auto vel = velocity_net(3);
    ObservationHistory hist(3, kObs);
    for (int i = 0; i < 3; ++i) hist.push(random_obs(rng));
    Vec in = wm::actor_input(bundle, hist.latest(), hist, vel);
    CHECK(in.size() == wm::actor_input_dim(Variant::kPlm, kObs, 4, 8));
    CHECK(in.size() == kObs + 3 + 4 * kObs + 8);
  }

  SUBCASE("flm") {
    auto bundle = test_bundle(Variant::kFlm, 3, 3);
    auto vel = velocity_net(3);
    ObservationHistory hist(3, kObs);
    for (int i = 0; i < 3; ++i) hist.push(random_obs(rng));
    Vec in = wm::actor_input(bundle, hist.latest(), hist, vel);
    CHECK(in.size() == wm::actor_input_dim(Variant::kFlm, kObs, 3, 8));
    CHECK(in.size() == kObs + 3 + 16);
  }
}

TEST_CASE("bundle validation names the offending head") {
  auto bundle = test_bundle(Variant::kPlm, 5, 6);
  CHECK_NOTHROW(bundle.validate());

  auto bad = bundle;
  bad.dynamics.layers.back().W.resize(kObs + 1, 16);
  bad.dynamics.layers.back().b.resize(kObs + 1);
  bad.dynamics.layers.back().b.setZero();
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("dynamics"),
                       ShapeError);

  bad = bundle;
  bad.policy.layers.front().W.resize(16, 3);
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("policy"), ShapeError);

  bad = bundle;
  bad.history = 4;  // encoder no longer matches history * obs_dim
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("encoder"),
                       ShapeError);

  auto nlm = test_bundle(Variant::kNlm, 5, 1);
  nlm.history = 2;
  CHECK_THROWS_AS(nlm.validate(), ShapeError);

  auto flm = test_bundle(Variant::kFlm, 4, 4);
  flm.history = 5;
  CHECK_THROWS_AS(flm.validate(), ShapeError);

  Rng rng(3);
  CHECK_THROWS_AS(wm::make_bundle(Variant::kNlm, kObs + 1, kJoints, 4, 1, 0,
                                  {8}, net::Activation::kTanh, 1.0, rng),
                  ShapeError);
}

TEST_CASE("bundle construction is seed-deterministic") {
  auto a = test_bundle(Variant::kFlm, 5, 5, 88);
  auto b = test_bundle(Variant::kFlm, 5, 5, 88);
  auto c = test_bundle(Variant::kFlm, 5, 5, 89);
  CHECK((a.dynamics.layers[0].W - b.dynamics.layers[0].W).norm() == 0.0);
  CHECK((a.encoder.layers[0].W - b.encoder.layers[0].W).norm() == 0.0);
  CHECK((a.dynamics.layers[0].W - c.dynamics.layers[0].W).norm() > 0.0);
  CHECK(wm::variant_from_name("flm") == Variant::kFlm);
  CHECK_THROWS_AS(wm::variant_from_name("xlm"), ValueError);
}
