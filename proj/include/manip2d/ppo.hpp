#pragma once

#include <vector>

#include "manip2d/mlp.hpp"
#include "manip2d/policy.hpp"

namespace manip2d {

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 3;
  int minibatch = 2048;
  double lr = 3e-4;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double max_grad_norm = 1.0;
};

/// delta_t = r_t + gamma v_{t+1} (1 - done_t) - v_t
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; returns = A + v.
/// bootstrap_value stands in for v_T when the tail is truncated mid-episode.
void gae(const VecX& rewards, const VecX& values, const std::vector<uint8_t>& dones,
         double bootstrap_value, double gamma, double lambda, VecX& advantages,
         VecX& returns);

/// In-place batch normalization to mean 0, std 1.
void normalize_advantages(VecX& advantages);

struct PostBatch {
  MatX obs;      // obs_dim x N
  MatX z;        // 9 x N, pre-squash latents at sample time
  VecX logp_old; // base log-probs at sample time
  VecX advantages;
  VecX returns;  // value targets (already scaled by the trainer)
  Eigen::Index size() const { return logp_old.size(); }
};

struct PreBatch {
  MatX obs;  // 8 x N
  std::vector<int> finger;
  MatX z;    // 3 x N
  VecX logp_old;
  VecX advantages;
  VecX returns;
  Eigen::Index size() const { return logp_old.size(); }
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
  bool aborted = false;
};

PpoStats ppo_update_post(PostPolicy& policy, Mlp& value, AdamOpt& policy_opt,
                         AdamOpt& value_opt, PostBatch& batch, const PpoConfig& cfg,
                         Rng& rng);

PpoStats ppo_update_pre(PrePolicy& policy, Mlp& value, AdamOpt& policy_opt,
                        AdamOpt& value_opt, PreBatch& batch, const PpoConfig& cfg,
                        Rng& rng);

}  // namespace manip2d
