#include "dreamplan/train/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dreamplan/error.hpp"

namespace dreamplan::train {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

double gaussian_log_prob(const Vec& mean, const Vec& log_std,
                         const Vec& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ShapeError("gaussian_log_prob operands must have equal length");
  }
  double logp = -0.5 * static_cast<double>(mean.size()) * kLog2Pi;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    double z = (action(i) - mean(i)) * std::exp(-log_std(i));
    logp += -0.5 * z * z - log_std(i);
  }
  return logp;
}

Vec gaussian_log_prob_batch(const Mat& means, const Vec& log_std,
                            const Mat& actions) {
  if (means.rows() != log_std.size() || means.rows() != actions.rows() ||
      means.cols() != actions.cols()) {
    throw ShapeError("gaussian_log_prob_batch shapes do not match");
  }
  const double base = -0.5 * static_cast<double>(means.rows()) * kLog2Pi -
                      log_std.sum();
  Vec inv_std = (-log_std).array().exp();
  Vec out(means.cols());
  for (Eigen::Index c = 0; c < means.cols(); ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < means.rows(); ++r) {
      double z = (actions(r, c) - means(r, c)) * inv_std(r);
      acc += z * z;
    }
    out(c) = base - 0.5 * acc;
  }
  return out;
}

Vec normalize_advantages(const Vec& advantages) {
  if (advantages.size() == 0) throw ShapeError("empty advantage batch");
  const double mean = advantages.mean();
  const double var =
      (advantages.array() - mean).square().sum() /
      static_cast<double>(advantages.size());
  return (advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

PolicyLossGrads policy_loss_and_grads(const ExpertPair& expert,
                                      const Mat& actor_inputs,
                                      const Mat& actions, const Vec& logp_old,
                                      const Vec& advantages,
                                      const PpoConfig& config) {
  const Eigen::Index n = actor_inputs.cols();
  if (actions.cols() != n || logp_old.size() != n || advantages.size() != n) {
    throw ShapeError("ppo minibatch shapes do not match");
  }
  const Eigen::Index k = expert.actor_mean.out_dim();
  if (actions.rows() != k || expert.log_std.size() != k) {
    throw ShapeError("action width does not match the actor");
  }

  net::BatchCache cache;
  Mat means = net::mlp_forward_batch(expert.actor_mean, actor_inputs, cache);
  Vec logp_new = gaussian_log_prob_batch(means, expert.log_std, actions);

  const double eps = config.clip_ratio;
  const double inv_n = 1.0 / static_cast<double>(n);
  Vec inv_var = (-2.0 * expert.log_std).array().exp();  // 1 / sigma^2

  PolicyLossGrads out;
  out.actor_grads = net::zero_gradients(expert.actor_mean);
  out.log_std_grad = Vec::Zero(k);

  Mat upstream = Mat::Zero(k, n);  // d(loss)/d(mean) per column
  double surrogate = 0.0, kl = 0.0;
  int clipped = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    double ratio = std::exp(logp_new(c) - logp_old(c));
    double a = advantages(c);
    double unclipped = ratio * a;
    double clipped_obj = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * a;
    surrogate -= std::min(unclipped, clipped_obj) * inv_n;
    kl += (logp_old(c) - logp_new(c)) * inv_n;
    if (std::abs(ratio - 1.0) > eps) ++clipped;

    // Gradient flows only where the unclipped branch attains the min.
    if (unclipped <= clipped_obj) {
      double dlogp = -ratio * a * inv_n;  // d(surrogate)/d(logp_new)
      for (Eigen::Index r = 0; r < k; ++r) {
        double diff = actions(r, c) - means(r, c);
        upstream(r, c) = dlogp * diff * inv_var(r);
        double z2 = diff * diff * inv_var(r);
        out.log_std_grad(r) += dlogp * (z2 - 1.0);
      }
    }
  }

  net::mlp_backward_batch(expert.actor_mean, cache, upstream, out.actor_grads);

  // Gaussian entropy is state independent: sum_i log sigma_i + const.
  out.entropy = expert.log_std.sum() +
                0.5 * static_cast<double>(k) * (1.0 + kLog2Pi);
  out.log_std_grad.array() -= config.entropy_coef;  // d(-coef*entropy)/dlogstd

  out.surrogate = surrogate;
  out.approx_kl = kl;
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return out;
}

ValueLossGrads value_loss_and_grads(const ExpertPair& expert,
                                    const Mat& critic_inputs,
                                    const Vec& returns, const Vec& values_old,
                                    const PpoConfig& config) {
  const Eigen::Index n = critic_inputs.cols();
  if (returns.size() != n || values_old.size() != n) {
    throw ShapeError("value minibatch shapes do not match");
  }

  net::BatchCache cache;
  Mat values = net::mlp_forward_batch(expert.critic, critic_inputs, cache);

  const double eps = config.value_clip;
  const double inv_n = 1.0 / static_cast<double>(n);
  ValueLossGrads out;
  out.critic_grads = net::zero_gradients(expert.critic);

  Mat upstream = Mat::Zero(1, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double v = values(0, c);
    double v_clip = values_old(c) + std::clamp(v - values_old(c), -eps, eps);
    double err = v - returns(c);
    double err_clip = v_clip - returns(c);
    if (err * err >= err_clip * err_clip) {
      out.loss += err * err * inv_n;
      upstream(0, c) = config.value_coef * 2.0 * err * inv_n;
    } else {
      out.loss += err_clip * err_clip * inv_n;
      // v_clip passes gradient only while the clamp is inactive.
      if (std::abs(v - values_old(c)) < eps) {
        upstream(0, c) = config.value_coef * 2.0 * err_clip * inv_n;
      }
    }
  }
  net::mlp_backward_batch(expert.critic, cache, upstream, out.critic_grads);
  return out;
}

PpoAdam make_ppo_adam(const ExpertPair& expert, const PpoConfig& config) {
  net::AdamConfig adam;
  adam.lr = config.lr;
  PpoAdam out{net::make_adam(expert.actor_mean, adam),
              net::make_adam_vec(expert.log_std, adam),
              net::make_adam(expert.critic, adam)};
  return out;
}

PpoStats ppo_update(ExpertPair& expert, PpoAdam& adam, const PpoBatch& batch,
                    const PpoConfig& config, Rng& shuffle_rng) {
  const Eigen::Index n = batch.actor_inputs.cols();
  if (n == 0) throw ShapeError("empty ppo batch");
  if (batch.critic_inputs.cols() != n || batch.actions.cols() != n ||
      batch.log_probs_old.size() != n || batch.advantages.size() != n ||
      batch.returns.size() != n || batch.values_old.size() != n) {
    throw ShapeError("ppo batch columns do not match");
  }

  Vec norm_adv = normalize_advantages(batch.advantages);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index mb =
      std::min<Eigen::Index>(std::max(config.minibatch, 1), n);

  PpoStats stats;
  int updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the caller's stream keeps runs reproducible.
    for (Eigen::Index i = n - 1; i > 0; --i) {
      Eigen::Index j = static_cast<Eigen::Index>(shuffle_rng.below(i + 1));
      std::swap(order[i], order[j]);
    }
    for (Eigen::Index start = 0; start < n; start += mb) {
      Eigen::Index count = std::min(mb, n - start);
      Mat actor_in(batch.actor_inputs.rows(), count);
      Mat critic_in(batch.critic_inputs.rows(), count);
      Mat actions(batch.actions.rows(), count);
      Vec logp_old(count), adv(count), rets(count), v_old(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        Eigen::Index src = order[start + i];
        actor_in.col(i) = batch.actor_inputs.col(src);
        critic_in.col(i) = batch.critic_inputs.col(src);
        actions.col(i) = batch.actions.col(src);
        logp_old(i) = batch.log_probs_old(src);
        adv(i) = norm_adv(src);
        rets(i) = batch.returns(src);
        v_old(i) = batch.values_old(src);
      }

      PolicyLossGrads pol = policy_loss_and_grads(expert, actor_in, actions,
                                                  logp_old, adv, config);
      ValueLossGrads val = value_loss_and_grads(expert, critic_in, rets, v_old,
                                                config);

      net::adam_step(adam.actor, expert.actor_mean, pol.actor_grads);
      net::adam_step_vec(adam.log_std, expert.log_std, pol.log_std_grad);
      expert.log_std = expert.log_std.cwiseMax(config.log_std_min)
                           .cwiseMin(config.log_std_max);
      net::adam_step(adam.critic, expert.critic, val.critic_grads);

      stats.policy_loss += pol.surrogate;
      stats.value_loss += val.loss;
      stats.entropy += pol.entropy;
      stats.approx_kl += pol.approx_kl;
      stats.clip_fraction += pol.clip_fraction;
      ++updates;
    }
  }

  const double inv = 1.0 / std::max(updates, 1);
  stats.policy_loss *= inv;
  stats.value_loss *= inv;
  stats.entropy *= inv;
  stats.approx_kl *= inv;
  stats.clip_fraction *= inv;
  return stats;
}

}  // namespace dreamplan::train
