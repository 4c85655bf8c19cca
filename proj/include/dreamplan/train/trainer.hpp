#ifndef DREAMPLAN_TRAIN_TRAINER_HPP_
#define DREAMPLAN_TRAIN_TRAINER_HPP_

#include <json.hpp>
#include <string>
#include <vector>

#include "dreamplan/io/bundle_io.hpp"
#include "dreamplan/train/supervised.hpp"

namespace dreamplan::train {

struct TrainerConfig {
  // Internal-model variant; use_internal_model = false trains a bare
  // observation-fed actor (the ablation baseline) and ignores `variant`.
  wm::Variant variant = wm::Variant::kNlm;
  bool use_internal_model = true;
  int horizon = 1;
  int history = 0;  // 0 picks the variant default (NLM 1, PLM 6, FLM horizon)
  int latent_dim = 16;

  int env_count = 16;
  int iterations = 300;
  std::uint64_t seed = 0;

  std::vector<int> hidden = {64, 64};
  net::Activation activation = net::Activation::kTanh;

  env::EnvConfig env = env::EnvConfig::make_default();
  PpoConfig ppo;
  SupervisedConfig supervised;

  // Empty disables file output; otherwise metrics.jsonl, checkpoints, and
  // the resolved config are written below this directory.
  std::string out_dir;
  int checkpoint_every = 0;  // extra periodic checkpoints; 0 = final only

  int resolved_history() const;
  void validate() const;
};

nlohmann::json trainer_config_json(const TrainerConfig& config);

// Applies the keys trainer_config_json emits (all optional) on top of the
// given config; unknown keys throw ValueError so typos surface instead of
// silently training with defaults.
void apply_trainer_config_json(const nlohmann::json& j, TrainerConfig& config);

struct TrainResult {
  io::Artifacts artifacts;
  std::vector<nlohmann::json> metrics;  // one object per iteration
  std::string checkpoint_path;          // empty when out_dir is empty
};

// Co-dependent single-phase training: every iteration collects one
// on-policy batch with the current expert, runs the PPO update, then fits
// the internal model on the same batch (collect -> ppo -> supervised).
TrainResult train(const TrainerConfig& config);

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_TRAINER_HPP_
