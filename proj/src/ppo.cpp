#include "manip2d/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "manip2d/distributions.hpp"

namespace manip2d {

void gae(const VecX& rewards, const VecX& values, const std::vector<uint8_t>& dones,
         double bootstrap_value, double gamma, double lambda, VecX& advantages,
         VecX& returns) {
  const Eigen::Index n = rewards.size();
  advantages.resize(n);
  returns.resize(n);
  double acc = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double v_next = (t + 1 < n) ? values[t + 1] : bootstrap_value;
    const double delta = rewards[t] + gamma * v_next * not_done - values[t];
    acc = delta + gamma * lambda * not_done * acc;
    advantages[t] = acc;
  }
  returns = advantages + values;
}

void normalize_advantages(VecX& advantages) {
  const Eigen::Index n = advantages.size();
  if (n == 0) return;
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double std = std::sqrt(advantages.squaredNorm() / n);
  if (std > 1e-12) advantages /= std;
}

namespace {

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(static_cast<int>(i + 1))]);
  }
  return idx;
}

template <typename M>
MatX gather_cols(const M& src, const std::vector<Eigen::Index>& idx, Eigen::Index lo,
                 Eigen::Index hi) {
  MatX out(src.rows(), hi - lo);
  for (Eigen::Index k = lo; k < hi; ++k) out.col(k - lo) = src.col(idx[k]);
  return out;
}

VecX gather(const VecX& src, const std::vector<Eigen::Index>& idx, Eigen::Index lo,
            Eigen::Index hi) {
  VecX out(hi - lo);
  for (Eigen::Index k = lo; k < hi; ++k) out[k - lo] = src[idx[k]];
  return out;
}

struct ValueUpdater {
  Mlp& net;
  AdamOpt& opt;
  Mlp grad;
  explicit ValueUpdater(Mlp& v, AdamOpt& o) : net(v), opt(o), grad(Mlp::zeros_like(v)) {}

  double update(const MatX& obs, const VecX& targets, const PpoConfig& cfg) {
    MlpCache cache;
    const MatX v = net.forward(obs, &cache);
    const Eigen::Index b = obs.cols();
    Eigen::RowVectorXd err = v.row(0) - targets.transpose();
    const double loss = 0.5 * cfg.value_coef * err.squaredNorm() / b;
    if (!std::isfinite(loss)) return loss;
    grad.set_zero();
    MatX dy = (cfg.value_coef / b) * err;
    net.backward(cache, dy, grad);
    ParamRefs g, p;
    g.add(grad);
    p.add(net);
    clip_global_norm(g, cfg.max_grad_norm);
    opt.step(p, g, cfg.lr);
    return loss;
  }
};

}  // namespace

PpoStats ppo_update_post(PostPolicy& policy, Mlp& value, AdamOpt& policy_opt,
                         AdamOpt& value_opt, PostBatch& batch, const PpoConfig& cfg,
                         Rng& rng) {
  PpoStats stats;
  const Eigen::Index n = batch.size();
  if (n == 0) return stats;
  normalize_advantages(batch.advantages);

  Mlp grad = Mlp::zeros_like(policy.net);
  VecX grad_log_std = VecX::Zero(PostPolicy::kActionDim);
  ValueUpdater vup(value, value_opt);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto idx = shuffled_indices(n, rng);
    for (Eigen::Index lo = 0; lo < n; lo += cfg.minibatch) {
      const Eigen::Index hi = std::min(n, lo + cfg.minibatch);
      const Eigen::Index b = hi - lo;
      const MatX obs = gather_cols(batch.obs, idx, lo, hi);
      const MatX z = gather_cols(batch.z, idx, lo, hi);
      const VecX logp_old = gather(batch.logp_old, idx, lo, hi);
      const VecX adv = gather(batch.advantages, idx, lo, hi);
      const VecX ret = gather(batch.returns, idx, lo, hi);

      MlpCache cache;
      const MatX mean = policy.net.forward(obs, &cache);
      const VecX sig = policy.log_std.array().exp();

      VecX logp_new(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        double lp = 0.0;
        for (int j = 0; j < PostPolicy::kActionDim; ++j) {
          lp += normal_logpdf(z(j, i), mean(j, i), sig[j]);
        }
        logp_new[i] = lp;
      }

      double surrogate = 0.0, kl = 0.0;
      int clipped = 0;
      MatX dmean = MatX::Zero(PostPolicy::kActionDim, b);
      VecX dlogstd = VecX::Zero(PostPolicy::kActionDim);
      for (Eigen::Index i = 0; i < b; ++i) {
        const double ratio = std::exp(logp_new[i] - logp_old[i]);
        const double clip_ratio = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double s1 = ratio * adv[i];
        const double s2 = clip_ratio * adv[i];
        surrogate += std::min(s1, s2);
        kl += logp_old[i] - logp_new[i];
        if (ratio != clip_ratio) ++clipped;
        if (s1 <= s2) {
          const double g = ratio * adv[i] / b;
          for (int j = 0; j < PostPolicy::kActionDim; ++j) {
            const double u = (z(j, i) - mean(j, i)) / sig[j];
            dmean(j, i) = -g * u / sig[j];
            dlogstd[j] += -g * (u * u - 1.0);
          }
        }
      }
      surrogate /= b;
      const double entropy = policy.entropy();
      const double loss = -surrogate - cfg.entropy_coef * entropy;
      if (!std::isfinite(loss)) {
        stats.aborted = true;
        continue;
      }
      dlogstd.array() -= cfg.entropy_coef;  // dH/dlogstd = 1

      grad.set_zero();
      grad_log_std.setZero();
      policy.net.backward(cache, dmean, grad);
      grad_log_std = dlogstd;

      ParamRefs g, p;
      g.add(grad);
      g.add(grad_log_std);
      p.add(policy.net);
      p.add(policy.log_std);
      clip_global_norm(g, cfg.max_grad_norm);
      policy_opt.step(p, g, cfg.lr);

      const double vloss = vup.update(obs, ret, cfg);
      if (!std::isfinite(vloss)) stats.aborted = true;

      stats.policy_loss += loss;
      stats.value_loss += vloss;
      stats.entropy += entropy;
      stats.clip_fraction += static_cast<double>(clipped) / b;
      stats.approx_kl += kl / b;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    stats.policy_loss /= stats.minibatches;
    stats.value_loss /= stats.minibatches;
    stats.entropy /= stats.minibatches;
    stats.clip_fraction /= stats.minibatches;
    stats.approx_kl /= stats.minibatches;
  }
  return stats;
}

PpoStats ppo_update_pre(PrePolicy& policy, Mlp& value, AdamOpt& policy_opt,
                        AdamOpt& value_opt, PreBatch& batch, const PpoConfig& cfg,
                        Rng& rng) {
  PpoStats stats;
  const Eigen::Index n = batch.size();
  if (n == 0) return stats;
  normalize_advantages(batch.advantages);

  constexpr int kf = kNumFingerPoints;
  constexpr int kd = PrePolicy::kLatentDim;
  Mlp grad = Mlp::zeros_like(policy.net);
  VecX grad_log_std = VecX::Zero(kd);
  ValueUpdater vup(value, value_opt);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto idx = shuffled_indices(n, rng);
    for (Eigen::Index lo = 0; lo < n; lo += cfg.minibatch) {
      const Eigen::Index hi = std::min(n, lo + cfg.minibatch);
      const Eigen::Index b = hi - lo;
      const MatX obs = gather_cols(batch.obs, idx, lo, hi);
      const MatX z = gather_cols(batch.z, idx, lo, hi);
      const VecX logp_old = gather(batch.logp_old, idx, lo, hi);
      const VecX adv = gather(batch.advantages, idx, lo, hi);
      const VecX ret = gather(batch.returns, idx, lo, hi);

      MlpCache cache;
      const MatX out = policy.net.forward(obs, &cache);
      const VecX sig = policy.log_std.array().exp();

      double surrogate = 0.0, kl = 0.0, entropy_sum = 0.0;
      int clipped = 0;
      MatX dout = MatX::Zero(PrePolicy::kNetOut, b);
      VecX dlogstd = VecX::Zero(kd);
      for (Eigen::Index i = 0; i < b; ++i) {
        const int f = batch.finger[static_cast<size_t>(idx[lo + i])];
        const VecX logits = out.col(i).head(kf);
        const VecX probs = softmax(logits);
        double lp = log_softmax_at(logits, f);
        for (int j = 0; j < kd; ++j) {
          lp += normal_logpdf(z(j, i), out(kf + j, i), sig[j]);
        }
        const double ratio = std::exp(lp - logp_old[i]);
        const double clip_ratio = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double s1 = ratio * adv[i];
        const double s2 = clip_ratio * adv[i];
        surrogate += std::min(s1, s2);
        kl += logp_old[i] - lp;
        if (ratio != clip_ratio) ++clipped;

        double h_cat = 0.0;
        for (int k = 0; k < kf; ++k) {
          if (probs[k] > 0.0) h_cat -= probs[k] * std::log(probs[k]);
        }
        entropy_sum += h_cat;

        if (s1 <= s2) {
          const double g = ratio * adv[i] / b;
          for (int k = 0; k < kf; ++k) {
            dout(k, i) = -g * ((k == f ? 1.0 : 0.0) - probs[k]);
          }
          for (int j = 0; j < kd; ++j) {
            const double u = (z(j, i) - out(kf + j, i)) / sig[j];
            dout(kf + j, i) = -g * u / sig[j];
            dlogstd[j] += -g * (u * u - 1.0);
          }
        }
        // Entropy bonus gradient through the categorical head.
        for (int k = 0; k < kf; ++k) {
          if (probs[k] > 0.0) {
            dout(k, i) += cfg.entropy_coef * probs[k] * (std::log(probs[k]) + h_cat) / b;
          }
        }
      }
      surrogate /= b;
      const double entropy =
          entropy_sum / b + policy.log_std.sum() + 0.5 * kd * std::log(2.0 * M_PI * M_E);
      const double loss = -surrogate - cfg.entropy_coef * entropy;
      if (!std::isfinite(loss)) {
        stats.aborted = true;
        continue;
      }
      dlogstd.array() -= cfg.entropy_coef;

      grad.set_zero();
      policy.net.backward(cache, dout, grad);
      grad_log_std = dlogstd;

      ParamRefs g, p;
      g.add(grad);
      g.add(grad_log_std);
      p.add(policy.net);
      p.add(policy.log_std);
      clip_global_norm(g, cfg.max_grad_norm);
      policy_opt.step(p, g, cfg.lr);

      const double vloss = vup.update(obs, ret, cfg);
      if (!std::isfinite(vloss)) stats.aborted = true;

      stats.policy_loss += loss;
      stats.value_loss += vloss;
      stats.entropy += entropy;
      stats.clip_fraction += static_cast<double>(clipped) / b;
      stats.approx_kl += kl / b;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    stats.policy_loss /= stats.minibatches;
    stats.value_loss /= stats.minibatches;
    stats.entropy /= stats.minibatches;
    stats.clip_fraction /= stats.minibatches;
    stats.approx_kl /= stats.minibatches;
  }
  return stats;
}

}  // namespace manip2d
