#include "dreamplan/train/gae.hpp"

#include "dreamplan/error.hpp"

namespace dreamplan::train {

GaeResult gae(const Vec& rewards, const Vec& values,
              const std::vector<std::uint8_t>& dones, double gamma,
              double lambda) {
  const Eigen::Index t_max = rewards.size();
  if (t_max == 0) throw ShapeError("gae needs at least one step");
  if (values.size() != t_max + 1) {
    throw ShapeError("gae values must hold T+1 entries (bootstrap appended)");
  }
  if (static_cast<Eigen::Index>(dones.size()) != t_max) {
    throw ShapeError("gae dones must hold T entries");
  }
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) {
    throw ValueError("gae gamma/lambda must lie in [0, 1]");
  }

  GaeResult out;
  out.advantages.resize(t_max);
  out.returns.resize(t_max);
  double running = 0.0;
  for (Eigen::Index t = t_max - 1; t >= 0; --t) {
    double not_done = dones[t] ? 0.0 : 1.0;
    double delta = rewards(t) + gamma * values(t + 1) * not_done - values(t);
    running = delta + gamma * lambda * not_done * running;
    out.advantages(t) = running;
    out.returns(t) = running + values(t);
  }
  return out;
}

}  // namespace dreamplan::train
