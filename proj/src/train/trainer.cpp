#include "dreamplan/train/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include "dreamplan/error.hpp"
#include "dreamplan/train/evaluate.hpp"
#include "dreamplan/train/gae.hpp"
#include "dreamplan/wm/rollout.hpp"

namespace dreamplan::train {

int TrainerConfig::resolved_history() const {
  if (!use_internal_model) return 1;
  if (variant == wm::Variant::kNlm) return 1;
  if (variant == wm::Variant::kFlm) return horizon;
  return history > 0 ? history : 6;
}

void TrainerConfig::validate() const {
  if (iterations < 0) throw ValueError("iterations must be >= 0");
  if (env_count <= 0) throw ValueError("env_count must be positive");
  if (horizon < 1) throw ValueError("horizon must be >= 1");
  if (use_internal_model && variant != wm::Variant::kNlm && latent_dim <= 0) {
    throw ValueError("latent_dim must be positive for PLM/FLM");
  }
  if (ppo.rollout_steps <= 0) throw ValueError("rollout_steps must be positive");
  env.validate();
}

nlohmann::json trainer_config_json(const TrainerConfig& c) {
  return nlohmann::json{
      {"schema", "dreamplan/train-config/1"},
      {"variant", c.use_internal_model ? wm::variant_name(c.variant) : "none"},
      {"horizon", c.horizon},
      {"history", c.resolved_history()},
      {"latent_dim", c.use_internal_model ? c.latent_dim : 0},
      {"env_count", c.env_count},
      {"iterations", c.iterations},
      {"seed", c.seed},
      {"hidden", c.hidden},
      {"activation", net::activation_name(c.activation)},
      {"env", c.env},
      {"ppo",
       {{"clip_ratio", c.ppo.clip_ratio},
        {"discount", c.ppo.discount},
        {"gae_lambda", c.ppo.gae_lambda},
        {"lr", c.ppo.lr},
        {"epochs", c.ppo.epochs},
        {"minibatch", c.ppo.minibatch},
        {"rollout_steps", c.ppo.rollout_steps},
        {"entropy_coef", c.ppo.entropy_coef},
        {"value_coef", c.ppo.value_coef},
        {"value_clip", c.ppo.value_clip},
        {"init_log_std", c.ppo.init_log_std}}},
      {"supervised",
       {{"lr", c.supervised.lr},
        {"epochs", c.supervised.epochs},
        {"minibatch", c.supervised.minibatch}}},
      {"checkpoint_every", c.checkpoint_every}};
}

void apply_trainer_config_json(const nlohmann::json& j, TrainerConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "schema") {
      if (value != "dreamplan/train-config/1") {
        throw ValueError("unsupported train config schema");
      }
    } else if (key == "variant") {
      const std::string name = value.get<std::string>();
      c.use_internal_model = name != "none";
      if (c.use_internal_model) c.variant = wm::variant_from_name(name);
    } else if (key == "horizon") {
      c.horizon = value.get<int>();
    } else if (key == "history") {
      c.history = value.get<int>();
    } else if (key == "latent_dim") {
      c.latent_dim = value.get<int>();
    } else if (key == "env_count") {
      c.env_count = value.get<int>();
    } else if (key == "iterations") {
      c.iterations = value.get<int>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "hidden") {
      c.hidden = value.get<std::vector<int>>();
    } else if (key == "activation") {
      c.activation = net::activation_from_name(value.get<std::string>());
    } else if (key == "env") {
      c.env = value.get<env::EnvConfig>();
    } else if (key == "ppo") {
      for (const auto& [pk, pv] : value.items()) {
        if (pk == "clip_ratio") c.ppo.clip_ratio = pv.get<double>();
        else if (pk == "discount") c.ppo.discount = pv.get<double>();
        else if (pk == "gae_lambda") c.ppo.gae_lambda = pv.get<double>();
        else if (pk == "lr") c.ppo.lr = pv.get<double>();
        else if (pk == "epochs") c.ppo.epochs = pv.get<int>();
        else if (pk == "minibatch") c.ppo.minibatch = pv.get<int>();
        else if (pk == "rollout_steps") c.ppo.rollout_steps = pv.get<int>();
        else if (pk == "entropy_coef") c.ppo.entropy_coef = pv.get<double>();
        else if (pk == "value_coef") c.ppo.value_coef = pv.get<double>();
        else if (pk == "value_clip") c.ppo.value_clip = pv.get<double>();
        else if (pk == "init_log_std") c.ppo.init_log_std = pv.get<double>();
        else throw ValueError("unknown ppo config key: " + pk);
      }
    } else if (key == "supervised") {
      for (const auto& [sk, sv] : value.items()) {
        if (sk == "lr") c.supervised.lr = sv.get<double>();
        else if (sk == "epochs") c.supervised.epochs = sv.get<int>();
        else if (sk == "minibatch") c.supervised.minibatch = sv.get<int>();
        else throw ValueError("unknown supervised config key: " + sk);
      }
    } else if (key == "checkpoint_every") {
      c.checkpoint_every = value.get<int>();
    } else if (key == "out_dir") {
      c.out_dir = value.get<std::string>();
    } else {
      throw ValueError("unknown train config key: " + key);
    }
  }
}

namespace {

// One environment instance plus the per-lane streams that make collection
// order-independent of every other lane.
struct Lane {
  env::SurrogateEnv sim;
  wm::ObservationHistory history;
  Eigen::Vector3d command = Eigen::Vector3d::Zero();
  net::Vec obs;
  Rng action_rng;
  Rng command_rng;
  std::uint64_t episode = 0;
  double ep_return = 0.0;
  int ep_len = 0;

  Lane(const env::EnvConfig& cfg, int hist, std::uint64_t lane_seed)
      : sim(cfg, lane_seed),
        history(hist, cfg.obs_dim()),
        action_rng(derive_seed(lane_seed, 0xac10)),
        command_rng(derive_seed(lane_seed, 0xc0de)) {}
};

Vec compose_actor_input(const io::Artifacts& art, const Vec& obs,
                        const wm::ObservationHistory& history) {
  if (!art.has_model) return obs;
  return wm::actor_input(art.bundle, obs, history, art.velocity);
}

}  // namespace

TrainResult train(const TrainerConfig& config) {
  config.validate();

  const int p = config.env.obs_dim();
  const int k = config.env.joint_count;
  const int hist_len = config.resolved_history();
  const bool has_model = config.use_internal_model;

  // Seeded initialization of every net from one stream.
  Rng init_rng(derive_seed(config.seed, 0x1a17));

  io::Artifacts art;
  art.has_model = has_model;
  art.env = config.env;
  art.train_seed = config.seed;
  if (has_model) {
    art.bundle = wm::make_bundle(config.variant, p, k, config.horizon, hist_len,
                                 config.latent_dim, config.hidden,
                                 config.activation, config.env.action_bound,
                                 init_rng);
    art.velocity = net::make_mlp(hist_len * p, config.hidden, 3,
                                 config.activation, init_rng);
  }
  const int actor_in_dim =
      has_model ? wm::actor_input_dim(art.bundle.variant, p, config.horizon,
                                      art.bundle.latent_dim)
                : p;
  art.expert.actor_mean =
      net::make_mlp(actor_in_dim, config.hidden, k, config.activation, init_rng);
  art.expert.log_std = Vec::Constant(k, config.ppo.init_log_std);
  art.expert.critic = net::make_mlp(p + env::kPrivilegedDim, config.hidden, 1,
                                    config.activation, init_rng);

  PpoAdam ppo_adam = make_ppo_adam(art.expert, config.ppo);
  SupervisedAdam sup_adam;
  if (has_model) {
    sup_adam = make_supervised_adam(art.bundle, art.velocity, config.supervised);
  }
  Rng ppo_shuffle(derive_seed(config.seed, 0x5421));
  Rng sup_shuffle(derive_seed(config.seed, 0x5422));

  // Lanes: fixed creation and stepping order keeps runs reproducible.
  std::vector<Lane> lanes;
  lanes.reserve(config.env_count);
  for (int l = 0; l < config.env_count; ++l) {
    lanes.emplace_back(config.env, hist_len, derive_seed(config.seed, 0x1a2e, l));
  }
  auto reset_lane = [&](Lane& lane, int lane_idx) {
    std::uint64_t ep_seed =
        derive_seed(config.seed, 0xe915, lane_idx, lane.episode);
    lane.sim.reset(ep_seed);
    lane.command = sample_command(lane.command_rng, config.env);
    lane.history.clear();
    lane.obs = lane.sim.observe(lane.command);
    lane.history.push(lane.obs);
    lane.ep_return = 0.0;
    lane.ep_len = 0;
  };
  for (int l = 0; l < config.env_count; ++l) reset_lane(lanes[l], l);

  // Output files.
  std::optional<std::ofstream> metrics_file;
  std::filesystem::path out_dir;
  if (!config.out_dir.empty()) {
    out_dir = config.out_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream cfg_file(out_dir / "config.resolved.json");
    if (!cfg_file) throw IoError("cannot write resolved config");
    cfg_file << trainer_config_json(config).dump(2) << "\n";
    metrics_file.emplace(out_dir / "metrics.jsonl", std::ios::trunc);
    if (!*metrics_file) throw IoError("cannot write metrics.jsonl");
  }

  const int T = config.ppo.rollout_steps;
  const int L = config.env_count;
  const Eigen::Index N = static_cast<Eigen::Index>(T) * L;

  RolloutBuffer buf;
  buf.obs.resize(p, N);
  buf.next_obs.resize(p, N);
  buf.windows.resize(static_cast<Eigen::Index>(hist_len) * p, N);
  buf.actions.resize(k, N);
  buf.executed.resize(k, N);
  buf.expert_means.resize(k, N);
  buf.actor_inputs.resize(actor_in_dim, N);
  buf.critic_inputs.resize(p + env::kPrivilegedDim, N);
  buf.true_twist.resize(3, N);
  buf.rewards.resize(N);
  buf.values.resize(N);
  buf.log_probs.resize(N);
  buf.dones.assign(N, 0);

  Vec advantages(N);
  Vec returns(N);

  TrainResult result;

  for (int iter = 0; iter < config.iterations; ++iter) {
    std::vector<double> finished_returns;
    std::vector<int> finished_lengths;
    int fall_count = 0;
    const Vec stddev = art.expert.log_std.array().exp();

    for (int t = 0; t < T; ++t) {
      for (int l = 0; l < L; ++l) {
        Lane& lane = lanes[l];
        const Eigen::Index col = static_cast<Eigen::Index>(t) * L + l;

        Vec actor_in = compose_actor_input(art, lane.obs, lane.history);
        Vec mean = net::mlp_forward(art.expert.actor_mean, actor_in);
        Vec noise(k);
        for (int i = 0; i < k; ++i) noise(i) = lane.action_rng.gaussian();
        Vec action = mean + stddev.cwiseProduct(noise);
        Vec executed = action.cwiseMax(-config.env.action_bound)
                           .cwiseMin(config.env.action_bound);

        Vec critic_in(p + env::kPrivilegedDim);
        critic_in << lane.obs, env::privileged_observation(lane.sim.state());
        double value = net::mlp_forward(art.expert.critic, critic_in)(0);

        buf.obs.col(col) = lane.obs;
        buf.windows.col(col) = lane.history.window_flat();
        buf.actions.col(col) = action;
        buf.executed.col(col) = executed;
        buf.expert_means.col(col) = mean;
        buf.actor_inputs.col(col) = actor_in;
        buf.critic_inputs.col(col) = critic_in;
        buf.true_twist.col(col) = lane.sim.state().twist;
        buf.values(col) = value;
        buf.log_probs(col) =
            gaussian_log_prob(mean, art.expert.log_std, action);

        auto step = lane.sim.step(executed, lane.command);
        buf.next_obs.col(col) = step.obs;
        buf.rewards(col) = step.reward;
        buf.dones[col] = step.done ? 1 : 0;
        lane.ep_return += step.reward;
        lane.ep_len += 1;

        if (step.done) {
          finished_returns.push_back(lane.ep_return);
          finished_lengths.push_back(lane.ep_len);
          if (step.fallen) ++fall_count;
          lane.episode += 1;
          reset_lane(lane, l);
        } else {
          lane.obs = step.obs;
          lane.history.push(lane.obs);
        }
      }
    }

    // Per-lane GAE with a bootstrap value from each lane's current state.
    for (int l = 0; l < L; ++l) {
      Lane& lane = lanes[l];
      Vec rewards(T);
      Vec values(T + 1);
      std::vector<std::uint8_t> dones(T);
      for (int t = 0; t < T; ++t) {
        const Eigen::Index col = static_cast<Eigen::Index>(t) * L + l;
        rewards(t) = buf.rewards(col);
        values(t) = buf.values(col);
        dones[t] = buf.dones[col];
      }
      Vec critic_in(p + env::kPrivilegedDim);
      critic_in << lane.obs, env::privileged_observation(lane.sim.state());
      values(T) = net::mlp_forward(art.expert.critic, critic_in)(0);

      GaeResult g = gae(rewards, values, dones, config.ppo.discount,
                        config.ppo.gae_lambda);
      for (int t = 0; t < T; ++t) {
        const Eigen::Index col = static_cast<Eigen::Index>(t) * L + l;
        advantages(col) = g.advantages(t);
        returns(col) = g.returns(t);
      }
    }

    PpoBatch batch;
    batch.actor_inputs = buf.actor_inputs;
    batch.critic_inputs = buf.critic_inputs;
    batch.actions = buf.actions;
    batch.log_probs_old = buf.log_probs;
    batch.advantages = advantages;
    batch.returns = returns;
    batch.values_old = buf.values;
    PpoStats ppo_stats =
        ppo_update(art.expert, ppo_adam, batch, config.ppo, ppo_shuffle);

    SupervisedLosses sup;
    if (has_model) {
      sup = supervised_update(art.bundle, art.velocity, art.expert, buf,
                              sup_adam, config.supervised, sup_shuffle);
    }

    nlohmann::json m{
        {"schema", "dreamplan/train-metrics/1"},
        {"iter", iter},
        {"env_steps", static_cast<long>(N) * (iter + 1)},
        {"episodes", finished_returns.size()},
        {"falls", fall_count},
        {"policy_loss", ppo_stats.policy_loss},
        {"value_loss", ppo_stats.value_loss},
        {"entropy", ppo_stats.entropy},
        {"approx_kl", ppo_stats.approx_kl},
        {"clip_fraction", ppo_stats.clip_fraction},
        {"log_std_mean", art.expert.log_std.mean()},
    };
    if (finished_returns.empty()) {
      m["mean_return"] = nullptr;
      m["mean_length"] = nullptr;
    } else {
      double sum = 0.0;
      for (double r : finished_returns) sum += r;
      double len = 0.0;
      for (int x : finished_lengths) len += x;
      m["mean_return"] = sum / finished_returns.size();
      m["mean_length"] = len / finished_lengths.size();
    }
    if (has_model) {
      m["sup"] = {{"dynamics", sup.dynamics},
                  {"reward", sup.reward},
                  {"velocity", sup.velocity},
                  {"behavior_cloning", sup.behavior_cloning},
                  {"value_distill", sup.value_distill}};
    }
    if (metrics_file) *metrics_file << m.dump() << "\n";
    result.metrics.push_back(std::move(m));

    if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
        (iter + 1) % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06d.bin", iter + 1);
      art.iterations = iter + 1;
      io::save_artifacts((out_dir / name).string(), art);
    }
  }

  art.iterations = config.iterations;
  if (!config.out_dir.empty()) {
    result.checkpoint_path = (out_dir / "final.bin").string();
    io::save_artifacts(result.checkpoint_path, art);
    if (metrics_file) metrics_file->flush();
  }
  result.artifacts = std::move(art);
  return result;
}

}  // namespace dreamplan::train
