// Independent reference implementations used as test oracles. Everything in
// this file is written with plain scalar loops (no Eigen expressions, no
// shared helpers from the library) so that agreement with the library is
// evidence, not tautology.
#ifndef DREAMPLAN_TESTS_ORACLES_HPP_
#define DREAMPLAN_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "dreamplan/env/config.hpp"
#include "dreamplan/env/surrogate.hpp"
#include "dreamplan/net/mlp.hpp"

namespace oracles {

inline double relative_error(double got, double want) {
  double denom = std::max(std::abs(want), 1e-12);
  return std::abs(got - want) / denom;
}

// Max relative error between two vectors, guarded for small magnitudes.
inline double max_relative_error(const Eigen::VectorXd& got,
                                 const Eigen::VectorXd& want,
                                 double floor = 1e-9) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    double denom = std::max(std::abs(want(i)), floor);
    worst = std::max(worst, std::abs(got(i) - want(i)) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Scalar MLP forward pass: nested loops, accumulation in declaration order.
// ---------------------------------------------------------------------------
inline std::vector<double> mlp_forward_scalar(
    const dreamplan::net::MlpParams& params, const std::vector<double>& input) {
  using dreamplan::net::Activation;
  std::vector<double> x = input;
  const int layer_count = static_cast<int>(params.layers.size());
  for (int l = 0; l < layer_count; ++l) {
    const auto& W = params.layers[l].W;
    const auto& b = params.layers[l].b;
    std::vector<double> y(W.rows());
    for (int r = 0; r < W.rows(); ++r) {
      double acc = 0.0;
      for (int c = 0; c < W.cols(); ++c) acc += W(r, c) * x[c];
      acc += b(r);
      if (l + 1 < layer_count) {
        if (params.activation == Activation::kTanh) {
          acc = std::tanh(acc);
        } else {
          acc = acc > 0.0 ? acc : std::expm1(acc);
        }
      }
      y[r] = acc;
    }
    x = std::move(y);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Central finite differences of a scalar function of the MLP parameters.
// ---------------------------------------------------------------------------
inline dreamplan::net::Gradients finite_difference_gradients(
    dreamplan::net::MlpParams params,
    const std::function<double(const dreamplan::net::MlpParams&)>& loss,
    double h = 1e-6) {
  dreamplan::net::Gradients grads = dreamplan::net::zero_gradients(params);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& W = params.layers[l].W;
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        double saved = W(r, c);
        W(r, c) = saved + h;
        double up = loss(params);
        W(r, c) = saved - h;
        double down = loss(params);
        W(r, c) = saved;
        grads.layers[l].W(r, c) = (up - down) / (2.0 * h);
      }
    }
    auto& b = params.layers[l].b;
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      double saved = b(r);
      b(r) = saved + h;
      double up = loss(params);
      b(r) = saved - h;
      double down = loss(params);
      b(r) = saved;
      grads.layers[l].b(r) = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

inline Eigen::VectorXd finite_difference_input_gradient(
    const dreamplan::net::MlpParams& params, Eigen::VectorXd input,
    const std::function<double(const Eigen::VectorXd&)>& loss_of_output,
    double h = 1e-6) {
  Eigen::VectorXd grad(input.size());
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    double saved = input(i);
    input(i) = saved + h;
    double up = loss_of_output(
        dreamplan::net::mlp_forward(params, input));
    input(i) = saved - h;
    double down = loss_of_output(
        dreamplan::net::mlp_forward(params, input));
    input(i) = saved;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Duplicate semi-implicit Euler integrator for the surrogate platform,
// written against the documented update equations with plain arrays.
// ---------------------------------------------------------------------------
struct ScalarEnvState {
  std::vector<double> q, qd;
  double vx = 0, vy = 0, wz = 0;
  double roll = 0, pitch = 0, roll_rate = 0, pitch_rate = 0;
};

inline ScalarEnvState from_env_state(const dreamplan::env::EnvState& s) {
  ScalarEnvState out;
  out.q.assign(s.q.data(), s.q.data() + s.q.size());
  out.qd.assign(s.qd.data(), s.qd.data() + s.qd.size());
  out.vx = s.twist.x();
  out.vy = s.twist.y();
  out.wz = s.twist.z();
  out.roll = s.roll;
  out.pitch = s.pitch;
  out.roll_rate = s.roll_rate;
  out.pitch_rate = s.pitch_rate;
  return out;
}

inline ScalarEnvState step_dynamics_scalar(const dreamplan::env::EnvConfig& cfg,
                                           const ScalarEnvState& s,
                                           const std::vector<double>& action) {
  const int k = cfg.joint_count;
  const double dt = cfg.dt;

  // Accelerations from the incoming state.
  std::vector<double> qdd(k), q_err(k);
  for (int i = 0; i < k; ++i) {
    q_err[i] = s.q[i] - cfg.q_nominal(i);
    qdd[i] = cfg.kp * (action[i] - q_err[i]) - cfg.kd * s.qd[i];
  }
  double twist_dot[3];
  const double twist[3] = {s.vx, s.vy, s.wz};
  for (int r = 0; r < 3; ++r) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += cfg.twist_from_q(r, i) * q_err[i] + cfg.twist_from_qd(r, i) * s.qd[i];
    }
    twist_dot[r] = acc - cfg.base_damping * twist[r];
  }
  double tilt_acc[2];
  const double tilt[2] = {s.roll, s.pitch};
  const double tilt_rate[2] = {s.roll_rate, s.pitch_rate};
  for (int r = 0; r < 2; ++r) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += cfg.tilt_from_qd(r, i) * s.qd[i];
    tilt_acc[r] = acc - cfg.tilt_stiffness * tilt[r] - cfg.tilt_damping * tilt_rate[r];
  }

  // Velocity updates first, then positions with the new velocities.
  ScalarEnvState n = s;
  for (int i = 0; i < k; ++i) {
    n.qd[i] = s.qd[i] + dt * qdd[i];
    n.q[i] = s.q[i] + dt * n.qd[i];
  }
  n.vx = s.vx + dt * twist_dot[0];
  n.vy = s.vy + dt * twist_dot[1];
  n.wz = s.wz + dt * twist_dot[2];
  n.roll_rate = s.roll_rate + dt * tilt_acc[0];
  n.pitch_rate = s.pitch_rate + dt * tilt_acc[1];
  n.roll = s.roll + dt * n.roll_rate;
  n.pitch = s.pitch + dt * n.pitch_rate;
  return n;
}

// ---------------------------------------------------------------------------
// Direct-definition discounted objective: sum_k gamma^k r_k + gamma^H v_tail.
// ---------------------------------------------------------------------------
inline double discounted_fold_scalar(const std::vector<double>& rewards,
                                     double tail_value, double gamma) {
  double total = 0.0;
  double g = 1.0;
  for (double r : rewards) {
    total += g * r;
    g *= gamma;
  }
  return total + g * tail_value;
}

// ---------------------------------------------------------------------------
// Brute-force generalized advantage estimation straight from the definition:
// A_t = sum_{l>=0} (gamma lambda)^l delta_{t+l}, cut at episode boundaries.
// ---------------------------------------------------------------------------
inline std::vector<double> gae_scalar(const std::vector<double>& rewards,
                                      const std::vector<double>& values,
                                      const std::vector<bool>& dones,
                                      double gamma, double lambda) {
  const int t_max = static_cast<int>(rewards.size());
  std::vector<double> adv(t_max, 0.0);
  for (int t = 0; t < t_max; ++t) {
    double coeff = 1.0;
    for (int l = 0; t + l < t_max; ++l) {
      int i = t + l;
      double next_value = dones[i] ? 0.0 : values[i + 1];
      double delta = rewards[i] + gamma * next_value - values[i];
      adv[t] += coeff * delta;
      if (dones[i]) break;
      coeff *= gamma * lambda;
    }
  }
  return adv;
}

}  // namespace oracles

#endif  // DREAMPLAN_TESTS_ORACLES_HPP_
