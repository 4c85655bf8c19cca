#ifndef DREAMPLAN_WM_BUNDLE_HPP_
#define DREAMPLAN_WM_BUNDLE_HPP_

#include <string>
#include <vector>

#include "dreamplan/env/config.hpp"
#include "dreamplan/net/mlp.hpp"
#include "dreamplan/rng.hpp"

namespace dreamplan::wm {

using net::Mat;
using net::Vec;

// Internal-model flavors. They differ in what conditions the dream:
//   kNlm  - dreams directly in observation space;
//   kPlm  - additionally conditions dynamics/policy on a latent encoding of
//           the recent observation history and the estimated body twist;
//   kFlm  - like kPlm, and summarizes dreamed/real windows into two latents
//           for the expert actor (requires history == horizon).
enum class Variant { kNlm, kPlm, kFlm };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Learned model bundle used for dreaming, planning, and distillation:
// dynamics d (predicts observation deltas), a cloned policy pi, a reward
// head r, a value head V, and (PLM/FLM) a history encoder.
struct DreamerBundle {
  Variant variant = Variant::kNlm;
  int obs_dim = 0;
  int action_dim = 0;
  int horizon = 1;      // dream length H
  int history = 1;      // observation history window M
  int latent_dim = 0;   // latent width q (0 for NLM)
  double action_bound = 1.0;

  net::MlpParams dynamics;
  net::MlpParams policy;
  net::MlpParams reward;
  net::MlpParams value;
  net::MlpParams encoder;  // unused (empty) for NLM

  bool has_encoder() const { return variant != Variant::kNlm; }

  // Width of the conditioning block appended to observations for the
  // dynamics/policy/reward/value heads: latent + twist estimate (PLM/FLM),
  // nothing for NLM.
  int context_dim() const {
    return variant == Variant::kNlm ? 0 : latent_dim + 3;
  }

  // Verifies every head's wiring against the variant's contract. Throws
  // ShapeError with the offending head named.
  void validate() const;
};

// Fresh bundle with seeded initialization. `hidden` applies to every head.
DreamerBundle make_bundle(Variant variant, int obs_dim, int action_dim,
                          int horizon, int history, int latent_dim,
                          const std::vector<int>& hidden,
                          net::Activation activation, double action_bound,
                          Rng& rng);

// Ring buffer of the M most recent observations. Until M observations have
// been pushed, reads pad with the earliest available one.
class ObservationHistory {
 public:
  ObservationHistory(int capacity, int obs_dim);

  void push(const Vec& obs);
  void clear();

  int capacity() const { return capacity_; }
  int count() const { return count_; }
  bool filled() const { return count_ >= capacity_; }
  int obs_dim() const { return obs_dim_; }

  // offset 0 is the newest observation, -1 the one before, etc. Offsets
  // older than the oldest stored observation return the earliest available
  // (padding). Throws ValueError when empty.
  const Vec& at_offset(int offset) const;
  const Vec& latest() const { return at_offset(0); }

  // Columns oldest to newest, always `capacity` of them (padded while
  // filling).
  Mat window() const;

  // The window stacked into one vector, oldest first.
  Vec window_flat() const;

 private:
  int capacity_;
  int obs_dim_;
  int count_ = 0;
  int next_ = 0;
  std::vector<Vec> slots_;
};

}  // namespace dreamplan::wm

#endif  // DREAMPLAN_WM_BUNDLE_HPP_
