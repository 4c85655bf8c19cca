#include "dreamplan/wm/bundle.hpp"

#include <sstream>

#include "dreamplan/error.hpp"

namespace dreamplan::wm {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kNlm:
      return "nlm";
    case Variant::kPlm:
      return "plm";
    case Variant::kFlm:
      return "flm";
  }
  return "nlm";
}

Variant variant_from_name(const std::string& name) {
  if (name == "nlm") return Variant::kNlm;
  if (name == "plm") return Variant::kPlm;
  if (name == "flm") return Variant::kFlm;
  throw ValueError("unknown internal-model variant: " + name);
}

namespace {

void check_head(const char* name, const net::MlpParams& params, int in,
                int out) {
  params.validate();
  if (params.in_dim() != in || params.out_dim() != out) {
    std::ostringstream msg;
    msg << name << " head expects " << in << " -> " << out << ", got "
        << params.in_dim() << " -> " << params.out_dim();
    throw ShapeError(msg.str());
  }
}

}  // namespace

void DreamerBundle::validate() const {
  if (obs_dim <= 0 || action_dim <= 0) {
    throw ShapeError("bundle dimensions must be positive");
  }
  if (obs_dim != 3 * action_dim + 6) {
    throw ShapeError("obs_dim must equal 3 * action_dim + 6");
  }
  if (horizon < 1) throw ShapeError("bundle horizon must be >= 1");
  if (history < 1) throw ShapeError("bundle history must be >= 1");
  if (action_bound <= 0.0) throw ValueError("action_bound must be positive");

  if (variant == Variant::kNlm) {
    if (history != 1) throw ShapeError("NLM requires history == 1");
    if (latent_dim != 0) throw ShapeError("NLM has no latent");
  } else {
    if (latent_dim <= 0) throw ShapeError("PLM/FLM require latent_dim > 0");
    if (variant == Variant::kFlm && history != horizon) {
      throw ShapeError("FLM requires history == horizon");
    }
  }

  const int ctx = context_dim();
  check_head("dynamics", dynamics, obs_dim + ctx + action_dim, obs_dim);
  check_head("policy", policy, obs_dim + ctx, action_dim);
  check_head("reward", reward, obs_dim + ctx + action_dim, 1);
  check_head("value", value, obs_dim + ctx, 1);
  if (has_encoder()) {
    check_head("encoder", encoder, history * obs_dim, latent_dim);
  } else if (!encoder.layers.empty()) {
    throw ShapeError("NLM bundle must not carry an encoder");
  }
}

DreamerBundle make_bundle(Variant variant, int obs_dim, int action_dim,
                          int horizon, int history, int latent_dim,
                          const std::vector<int>& hidden,
                          net::Activation activation, double action_bound,
                          Rng& rng) {
  DreamerBundle bundle;
  bundle.variant = variant;
  bundle.obs_dim = obs_dim;
  bundle.action_dim = action_dim;
  bundle.horizon = horizon;
  bundle.history = variant == Variant::kNlm ? 1 : history;
  bundle.latent_dim = variant == Variant::kNlm ? 0 : latent_dim;
  bundle.action_bound = action_bound;

  const int ctx = bundle.context_dim();
  bundle.dynamics =
      net::make_mlp(obs_dim + ctx + action_dim, hidden, obs_dim, activation,
                    rng);
  bundle.policy =
      net::make_mlp(obs_dim + ctx, hidden, action_dim, activation, rng);
  bundle.reward =
      net::make_mlp(obs_dim + ctx + action_dim, hidden, 1, activation, rng);
  bundle.value = net::make_mlp(obs_dim + ctx, hidden, 1, activation, rng);
  if (bundle.has_encoder()) {
    bundle.encoder = net::make_mlp(bundle.history * obs_dim, hidden,
                                   bundle.latent_dim, activation, rng);
  }
  bundle.validate();
  return bundle;
}

ObservationHistory::ObservationHistory(int capacity, int obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim) {
  if (capacity <= 0) throw ShapeError("history capacity must be positive");
  if (obs_dim <= 0) throw ShapeError("history obs_dim must be positive");
  slots_.resize(capacity_);
}

void ObservationHistory::push(const Vec& obs) {
  if (obs.size() != obs_dim_) {
    throw ShapeError("pushed observation does not match history obs_dim");
  }
  slots_[next_] = obs;
  next_ = (next_ + 1) % capacity_;
  if (count_ < capacity_) ++count_;
}

void ObservationHistory::clear() {
  count_ = 0;
  next_ = 0;
}

const Vec& ObservationHistory::at_offset(int offset) const {
  if (count_ == 0) throw ValueError("observation history is empty");
  if (offset > 0) throw ValueError("history offsets are <= 0");
  // Clamp to the oldest stored observation: earlier requests pad.
  if (offset < -(count_ - 1)) offset = -(count_ - 1);
  int idx = (next_ - 1 + offset) % capacity_;
  if (idx < 0) idx += capacity_;
  return slots_[idx];
}

Mat ObservationHistory::window() const {
  Mat out(obs_dim_, capacity_);
  for (int i = 0; i < capacity_; ++i) {
    out.col(i) = at_offset(i - (capacity_ - 1));
  }
  return out;
}

Vec ObservationHistory::window_flat() const {
  Vec out(static_cast<Eigen::Index>(obs_dim_) * capacity_);
  for (int i = 0; i < capacity_; ++i) {
    out.segment(static_cast<Eigen::Index>(i) * obs_dim_, obs_dim_) =
        at_offset(i - (capacity_ - 1));
  }
  return out;
}

}  // namespace dreamplan::wm
