#include "dreamplan/io/bundle_io.hpp"

#include "dreamplan/env/surrogate.hpp"
#include "dreamplan/error.hpp"
#include "dreamplan/net/checkpoint.hpp"
#include "dreamplan/wm/rollout.hpp"

namespace dreamplan::io {

namespace {
constexpr const char* kSchema = "dreamplan/checkpoint/1";
}

void Artifacts::validate() const {
  env.validate();
  const int p = env.obs_dim();
  const int k = env.joint_count;
  if (has_model) {
    bundle.validate();
    if (bundle.obs_dim != p || bundle.action_dim != k) {
      throw ShapeError("bundle does not match environment dimensions");
    }
    velocity.validate();
    if (velocity.in_dim() != bundle.history * p || velocity.out_dim() != 3) {
      throw ShapeError("velocity estimator does not match bundle history");
    }
    const int actor_in = wm::actor_input_dim(bundle.variant, p, bundle.horizon,
                                             bundle.latent_dim);
    if (expert.actor_mean.in_dim() != actor_in) {
      throw ShapeError("expert actor does not match the actor input width");
    }
  } else if (expert.actor_mean.in_dim() != p) {
    throw ShapeError("model-free expert actor must consume raw observations");
  }
  expert.actor_mean.validate();
  expert.critic.validate();
  if (expert.actor_mean.out_dim() != k || expert.log_std.size() != k) {
    throw ShapeError("expert actor output does not match action width");
  }
  if (expert.critic.in_dim() != p + env::kPrivilegedDim ||
      expert.critic.out_dim() != 1) {
    throw ShapeError("privileged critic wiring is wrong");
  }
}

void save_artifacts(const std::string& path, const Artifacts& artifacts) {
  artifacts.validate();

  net::Checkpoint ckpt;
  if (artifacts.has_model) {
    ckpt.add("dynamics", artifacts.bundle.dynamics);
    ckpt.add("policy_clone", artifacts.bundle.policy);
    ckpt.add("reward_model", artifacts.bundle.reward);
    ckpt.add("value_model", artifacts.bundle.value);
    if (artifacts.bundle.has_encoder()) {
      ckpt.add("encoder", artifacts.bundle.encoder);
    }
    ckpt.add("velocity_estimator", artifacts.velocity);
  }
  ckpt.add("expert_actor", artifacts.expert.actor_mean);
  ckpt.add("expert_log_std", artifacts.expert.log_std);
  ckpt.add("privileged_critic", artifacts.expert.critic);

  nlohmann::json meta{
      {"schema", kSchema},
      {"has_model", artifacts.has_model},
      {"env", artifacts.env},
      {"train_seed", artifacts.train_seed},
      {"iterations", artifacts.iterations},
  };
  if (artifacts.has_model) {
    meta["variant"] = wm::variant_name(artifacts.bundle.variant);
    meta["horizon"] = artifacts.bundle.horizon;
    meta["history"] = artifacts.bundle.history;
    meta["latent_dim"] = artifacts.bundle.latent_dim;
    meta["action_bound"] = artifacts.bundle.action_bound;
  }
  if (!artifacts.extra.is_null()) {
    for (auto it = artifacts.extra.begin(); it != artifacts.extra.end(); ++it) {
      meta[it.key()] = it.value();
    }
  }
  ckpt.meta = std::move(meta);
  net::save_checkpoint(path, ckpt);
}

Artifacts load_artifacts(const std::string& path) {
  net::Checkpoint ckpt = net::load_checkpoint(path);
  if (!ckpt.meta.contains("schema") || ckpt.meta["schema"] != kSchema) {
    throw IoError("checkpoint sidecar missing or wrong schema: " + path);
  }

  Artifacts out;
  out.has_model = ckpt.meta.at("has_model").get<bool>();
  out.env = ckpt.meta.at("env").get<env::EnvConfig>();
  out.train_seed = ckpt.meta.at("train_seed").get<std::uint64_t>();
  out.iterations = ckpt.meta.at("iterations").get<int>();
  out.extra = ckpt.meta;

  if (out.has_model) {
    wm::DreamerBundle& b = out.bundle;
    b.variant = wm::variant_from_name(ckpt.meta.at("variant"));
    b.obs_dim = out.env.obs_dim();
    b.action_dim = out.env.joint_count;
    b.horizon = ckpt.meta.at("horizon").get<int>();
    b.history = ckpt.meta.at("history").get<int>();
    b.latent_dim = ckpt.meta.at("latent_dim").get<int>();
    b.action_bound = ckpt.meta.at("action_bound").get<double>();
    b.dynamics = ckpt.mlp("dynamics");
    b.policy = ckpt.mlp("policy_clone");
    b.reward = ckpt.mlp("reward_model");
    b.value = ckpt.mlp("value_model");
    if (b.has_encoder()) b.encoder = ckpt.mlp("encoder");
    out.velocity = ckpt.mlp("velocity_estimator");
  }
  out.expert.actor_mean = ckpt.mlp("expert_actor");
  out.expert.log_std = ckpt.vector("expert_log_std");
  out.expert.critic = ckpt.mlp("privileged_critic");

  out.validate();
  return out;
}

}  // namespace dreamplan::io
