#ifndef DREAMPLAN_TRAIN_GAE_HPP_
#define DREAMPLAN_TRAIN_GAE_HPP_

#include <cstdint>
#include <vector>

#include "dreamplan/net/mlp.hpp"

namespace dreamplan::train {

using net::Vec;

struct GaeResult {
  Vec advantages;
  Vec returns;  // advantages + values, the critic regression target
};

// Generalized advantage estimation over one trajectory chunk.
// `values` holds T+1 entries: per-step values plus the bootstrap value of
// the state after the chunk. A set done flag ends the episode at that step:
// no bootstrap across it.
GaeResult gae(const Vec& rewards, const Vec& values,
              const std::vector<std::uint8_t>& dones, double gamma,
              double lambda);

}  // namespace dreamplan::train

#endif  // DREAMPLAN_TRAIN_GAE_HPP_
