#include "dreamplan/train/supervised.hpp"

#include <algorithm>
#include <numeric>

#include "dreamplan/error.hpp"
#include "dreamplan/net/losses.hpp"

namespace dreamplan::train {

SupervisedAdam make_supervised_adam(const wm::DreamerBundle& bundle,
                                    const net::MlpParams& velocity_net,
                                    const SupervisedConfig& config) {
  net::AdamConfig adam;
  adam.lr = config.lr;
  SupervisedAdam out{net::make_adam(bundle.dynamics, adam),
                     net::make_adam(bundle.policy, adam),
                     net::make_adam(bundle.reward, adam),
                     net::make_adam(bundle.value, adam),
                     bundle.has_encoder() ? net::make_adam(bundle.encoder, adam)
                                          : net::AdamState{},
                     net::make_adam(velocity_net, adam)};
  return out;
}

SupervisedLosses supervised_update(wm::DreamerBundle& bundle,
                                   net::MlpParams& velocity_net,
                                   const ExpertPair& expert,
                                   const RolloutBuffer& buffer,
                                   SupervisedAdam& adam,
                                   const SupervisedConfig& config,
                                   Rng& shuffle_rng) {
  const Eigen::Index n = buffer.size();
  if (n == 0) throw ShapeError("empty supervised buffer");
  const int p = bundle.obs_dim;
  const int k = bundle.action_dim;
  const int ctx = bundle.context_dim();
  if (buffer.obs.rows() != p || buffer.executed.rows() != k) {
    throw ShapeError("buffer does not match bundle dimensions");
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index mb =
      std::min<Eigen::Index>(std::max(config.minibatch, 1), n);

  SupervisedLosses losses;
  int updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      Eigen::Index j = static_cast<Eigen::Index>(shuffle_rng.below(i + 1));
      std::swap(order[i], order[j]);
    }
    for (Eigen::Index start = 0; start < n; start += mb) {
      const Eigen::Index c = std::min(mb, n - start);

      Mat obs(p, c), next_obs(p, c), act(k, c), expert_mean(k, c);
      Mat window(buffer.windows.rows(), c);
      Mat critic_in(buffer.critic_inputs.rows(), c);
      Mat twist(3, c);
      Vec rewards(c);
      for (Eigen::Index i = 0; i < c; ++i) {
        Eigen::Index src = order[start + i];
        obs.col(i) = buffer.obs.col(src);
        next_obs.col(i) = buffer.next_obs.col(src);
        act.col(i) = buffer.executed.col(src);
        expert_mean.col(i) = buffer.expert_means.col(src);
        window.col(i) = buffer.windows.col(src);
        critic_in.col(i) = buffer.critic_inputs.col(src);
        twist.col(i) = buffer.true_twist.col(src);
        rewards(i) = buffer.rewards(src);
      }

      // Conditioning block: latent from the encoder (trained end-to-end)
      // plus the twist estimate (held constant for the heads).
      net::BatchCache enc_cache;
      Mat latent, v_hat;
      if (bundle.has_encoder()) {
        latent = net::mlp_forward_batch(bundle.encoder, window, enc_cache);
        v_hat = net::mlp_forward_batch(velocity_net, window);
      }
      Mat latent_grad;
      if (bundle.has_encoder()) {
        latent_grad = Mat::Zero(bundle.latent_dim, c);
      }

      auto with_context = [&](const Mat& front) {
        if (!bundle.has_encoder()) return front;
        Mat out(front.rows() + ctx, c);
        out.topRows(front.rows()) = front;
        out.middleRows(front.rows(), bundle.latent_dim) = latent;
        out.bottomRows(3) = v_hat;
        return out;
      };
      // Rows of the latent slice inside a [obs, latent, v_hat, ...] input.
      const int latent_row = p;

      Mat obs_ctx = with_context(obs);
      Mat dyn_in(obs_ctx.rows() + k, c);
      dyn_in.topRows(obs_ctx.rows()) = obs_ctx;
      dyn_in.bottomRows(k) = act;

      // Dynamics head: predict the observation delta.
      {
        net::BatchCache cache;
        Mat pred = net::mlp_forward_batch(bundle.dynamics, dyn_in, cache);
        Mat target = next_obs - obs;
        losses.dynamics += net::mse(pred, target);
        auto grads = net::zero_gradients(bundle.dynamics);
        Mat in_grad = net::mlp_backward_batch(bundle.dynamics, cache,
                                              net::mse_grad(pred, target),
                                              grads);
        if (bundle.has_encoder()) {
          latent_grad += in_grad.middleRows(latent_row, bundle.latent_dim);
        }
        net::adam_step(adam.dynamics, bundle.dynamics, grads);
      }

      // Reward head: regress achieved rewards.
      {
        net::BatchCache cache;
        Mat pred = net::mlp_forward_batch(bundle.reward, dyn_in, cache);
        Mat target = rewards.transpose();
        losses.reward += net::mse(pred, target);
        auto grads = net::zero_gradients(bundle.reward);
        Mat in_grad = net::mlp_backward_batch(bundle.reward, cache,
                                              net::mse_grad(pred, target),
                                              grads);
        if (bundle.has_encoder()) {
          latent_grad += in_grad.middleRows(latent_row, bundle.latent_dim);
        }
        net::adam_step(adam.reward, bundle.reward, grads);
      }

      // Cloned policy: imitate the expert mean action.
      {
        net::BatchCache cache;
        Mat pred = net::mlp_forward_batch(bundle.policy, obs_ctx, cache);
        losses.behavior_cloning += net::mse(pred, expert_mean);
        auto grads = net::zero_gradients(bundle.policy);
        Mat in_grad = net::mlp_backward_batch(bundle.policy, cache,
                                              net::mse_grad(pred, expert_mean),
                                              grads);
        if (bundle.has_encoder()) {
          latent_grad += in_grad.middleRows(latent_row, bundle.latent_dim);
        }
        net::adam_step(adam.policy, bundle.policy, grads);
      }

      // Value head: distill the privileged critic.
      {
        Mat target = net::mlp_forward_batch(expert.critic, critic_in);
        net::BatchCache cache;
        Mat pred = net::mlp_forward_batch(bundle.value, obs_ctx, cache);
        losses.value_distill += net::mse(pred, target);
        auto grads = net::zero_gradients(bundle.value);
        Mat in_grad = net::mlp_backward_batch(bundle.value, cache,
                                              net::mse_grad(pred, target),
                                              grads);
        if (bundle.has_encoder()) {
          latent_grad += in_grad.middleRows(latent_row, bundle.latent_dim);
        }
        net::adam_step(adam.value, bundle.value, grads);
      }

      // Velocity estimator: regress the privileged twist.
      {
        net::BatchCache cache;
        Mat pred = net::mlp_forward_batch(velocity_net, window, cache);
        losses.velocity += net::mse(pred, twist);
        auto grads = net::zero_gradients(velocity_net);
        net::mlp_backward_batch(velocity_net, cache,
                                net::mse_grad(pred, twist), grads);
        net::adam_step(adam.velocity, velocity_net, grads);
      }

      // Encoder: one step on the summed latent gradients from all heads.
      if (bundle.has_encoder()) {
        auto grads = net::zero_gradients(bundle.encoder);
        net::mlp_backward_batch(bundle.encoder, enc_cache, latent_grad, grads);
        net::adam_step(adam.encoder, bundle.encoder, grads);
      }

      ++updates;
    }
  }

  const double inv = 1.0 / std::max(updates, 1);
  losses.dynamics *= inv;
  losses.reward *= inv;
  losses.velocity *= inv;
  losses.behavior_cloning *= inv;
  losses.value_distill *= inv;
  return losses;
}

}  // namespace dreamplan::train
