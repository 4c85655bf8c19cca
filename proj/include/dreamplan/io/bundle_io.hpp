#ifndef DREAMPLAN_IO_BUNDLE_IO_HPP_
#define DREAMPLAN_IO_BUNDLE_IO_HPP_

#include <cstdint>
#include <string>

#include "dreamplan/env/config.hpp"
#include "dreamplan/net/mlp.hpp"
#include "dreamplan/train/ppo.hpp"
#include "dreamplan/wm/bundle.hpp"

namespace dreamplan::io {

// Everything a training run produces: the expert pair, and (unless trained
// without an internal model) the dreamer bundle plus velocity estimator.
// Saved as one binary checkpoint with a JSON sidecar describing wiring and
// the environment configuration.
struct Artifacts {
  bool has_model = true;
  wm::DreamerBundle bundle;        // valid when has_model
  net::MlpParams velocity;         // valid when has_model
  train::ExpertPair expert;
  env::EnvConfig env;
  std::uint64_t train_seed = 0;
  int iterations = 0;
  nlohmann::json extra;            // merged into the sidecar

  // Cross-checks bundle wiring against the environment dimensions.
  void validate() const;
};

void save_artifacts(const std::string& path, const Artifacts& artifacts);

// Throws IoError on malformed files, ShapeError when the stored nets do not
// match the recorded architecture metadata.
Artifacts load_artifacts(const std::string& path);

}  // namespace dreamplan::io

#endif  // DREAMPLAN_IO_BUNDLE_IO_HPP_
