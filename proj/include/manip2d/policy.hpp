#pragma once

#include "manip2d/env.hpp"
#include "manip2d/mlp.hpp"

namespace manip2d {

/// Post-contact actor: Gaussian over a 9-dim latent with state-independent
/// log-std, squashed into the action set. Layout of the latent:
///   0,1 -> EE position residual (radial tanh onto the zeta_pos disk)
///   2   -> rotation residual (tanh onto [-zeta_rot, zeta_rot])
///   3-5 -> per-joint kp (scaled softplus)
///   6-8 -> per-joint rho (0.5 + softplus)
struct PostPolicy {
  static constexpr int kActionDim = 9;

  Mlp net;       // obs -> 9 means
  VecX log_std;  // 9
  double kp_scale = 100.0;

  static PostPolicy make(int obs_dim, const std::vector<int>& hidden, Rng& rng);

  static PostContactAction decode(const VecX& z, const ResidualLimit& zeta,
                                  double kp_scale);

  struct Sample {
    VecX z;
    PostContactAction action;
    double logp_base = 0.0;  // parameter-dependent part (squash terms cancel in ratios)
  };

  Sample sample(const Eigen::Ref<const VecX>& mean, const ResidualLimit& zeta,
                Rng& rng) const;
  PostContactAction mode(const Eigen::Ref<const VecX>& mean,
                         const ResidualLimit& zeta) const;
  double logp_base(const Eigen::Ref<const VecX>& z,
                   const Eigen::Ref<const VecX>& mean) const;
  /// Full density of the squashed action (base minus squash log-Jacobians).
  double logp_full(const Eigen::Ref<const VecX>& z,
                   const Eigen::Ref<const VecX>& mean,
                   const ResidualLimit& zeta) const;
  /// Base-distribution entropy (Gaussian, analytic).
  double entropy() const;
};

/// Pre-contact actor: categorical over the gripper pad plus a 3-dim Gaussian
/// latent squashed to (c_o, R_E, l). Net output layout: 3 pad logits then the
/// 3 continuous means.
struct PrePolicy {
  static constexpr int kLatentDim = 3;
  static constexpr int kNetOut = kNumFingerPoints + kLatentDim;

  Mlp net;
  VecX log_std;  // 3

  static PrePolicy make(int obs_dim, const std::vector<int>& hidden, Rng& rng);

  static PreContactAction decode(int finger, const VecX& z);

  struct Sample {
    int finger = 0;
    VecX z;
    PreContactAction action;
    double logp = 0.0;  // categorical + Gaussian latent
  };

  Sample sample(const Eigen::Ref<const VecX>& out, Rng& rng) const;
  PreContactAction mode(const Eigen::Ref<const VecX>& out) const;
  double logp(int finger, const Eigen::Ref<const VecX>& z,
              const Eigen::Ref<const VecX>& out) const;
  double entropy(const Eigen::Ref<const VecX>& out) const;
};

VecX softmax(const Eigen::Ref<const VecX>& logits);
double log_softmax_at(const Eigen::Ref<const VecX>& logits, int index);

}  // namespace manip2d
