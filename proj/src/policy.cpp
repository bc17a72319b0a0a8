#include "manip2d/policy.hpp"

#include <cmath>

#include "manip2d/distributions.hpp"

namespace manip2d {

VecX softmax(const Eigen::Ref<const VecX>& logits) {
  VecX p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double log_softmax_at(const Eigen::Ref<const VecX>& logits, int index) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits[index] - lse;
}

PostPolicy PostPolicy::make(int obs_dim, const std::vector<int>& hidden, Rng& rng) {
  PostPolicy p;
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(kActionDim);
  p.net = Mlp(sizes, rng, 0.01);
  p.log_std = VecX::Constant(kActionDim, -0.5);
  return p;
}

PostContactAction PostPolicy::decode(const VecX& z, const ResidualLimit& zeta,
                                     double kp_scale) {
  PostContactAction a;
  a.delta_pos = disk_squash(z.head<2>(), zeta.pos);
  a.delta_theta = zeta.rot * std::tanh(z[2]);
  for (int j = 0; j < 3; ++j) {
    a.kp[j] = kp_scale * softplus(z[3 + j]);
    a.rho[j] = 0.5 + softplus(z[6 + j]);
  }
  return a;
}

PostPolicy::Sample PostPolicy::sample(const Eigen::Ref<const VecX>& mean,
                                      const ResidualLimit& zeta, Rng& rng) const {
  Sample s;
  s.z = VecX(kActionDim);
  for (int i = 0; i < kActionDim; ++i) {
    s.z[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  }
  s.action = decode(s.z, zeta, kp_scale);
  s.logp_base = logp_base(s.z, mean);
  return s;
}

PostContactAction PostPolicy::mode(const Eigen::Ref<const VecX>& mean,
                                   const ResidualLimit& zeta) const {
  return decode(mean, zeta, kp_scale);
}

double PostPolicy::logp_base(const Eigen::Ref<const VecX>& z,
                             const Eigen::Ref<const VecX>& mean) const {
  double lp = 0.0;
  for (int i = 0; i < kActionDim; ++i) {
    lp += normal_logpdf(z[i], mean[i], std::exp(log_std[i]));
  }
  return lp;
}

double PostPolicy::logp_full(const Eigen::Ref<const VecX>& z,
                             const Eigen::Ref<const VecX>& mean,
                             const ResidualLimit& zeta) const {
  double lp = logp_base(z, mean);
  lp -= disk_squash_log_det(z.head<2>(), zeta.pos);
  lp -= std::log(zeta.rot) + log_tanh_deriv(z[2]);
  for (int j = 0; j < 3; ++j) {
    lp -= std::log(kp_scale) + log_sigmoid(z[3 + j]);
    lp -= log_sigmoid(z[6 + j]);
  }
  return lp;
}

double PostPolicy::entropy() const {
  return log_std.sum() + 0.5 * kActionDim * std::log(2.0 * M_PI * M_E);
}

PrePolicy PrePolicy::make(int obs_dim, const std::vector<int>& hidden, Rng& rng) {
  PrePolicy p;
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(kNetOut);
  p.net = Mlp(sizes, rng, 0.01);
  p.log_std = VecX::Constant(kLatentDim, -0.5);
  return p;
}

PreContactAction PrePolicy::decode(int finger, const VecX& z) {
  PreContactAction a;
  a.finger = static_cast<FingerPoint>(finger);
  // c_o lives on the wrapped perimeter; saturation at 1.0 folds back to 0.
  double s = sigmoid(z[0]);
  a.surface_param = s - std::floor(s);
  a.approach_angle = M_PI * std::tanh(z[1]);
  a.width = 0.04 * sigmoid(z[2]);
  return a;
}

PrePolicy::Sample PrePolicy::sample(const Eigen::Ref<const VecX>& out, Rng& rng) const {
  Sample s;
  const VecX probs = softmax(out.head<kNumFingerPoints>());
  const double u = rng.uniform();
  double acc = 0.0;
  s.finger = kNumFingerPoints - 1;
  for (int i = 0; i < kNumFingerPoints; ++i) {
    acc += probs[i];
    if (u < acc) {
      s.finger = i;
      break;
    }
  }
  s.z = VecX(kLatentDim);
  for (int i = 0; i < kLatentDim; ++i) {
    s.z[i] = out[kNumFingerPoints + i] + std::exp(log_std[i]) * rng.normal();
  }
  s.action = decode(s.finger, s.z);
  s.logp = logp(s.finger, s.z, out);
  return s;
}

PreContactAction PrePolicy::mode(const Eigen::Ref<const VecX>& out) const {
  int best = 0;
  out.head<kNumFingerPoints>().maxCoeff(&best);
  return decode(best, out.tail<kLatentDim>());
}

double PrePolicy::logp(int finger, const Eigen::Ref<const VecX>& z,
                       const Eigen::Ref<const VecX>& out) const {
  double lp = log_softmax_at(out.head<kNumFingerPoints>(), finger);
  for (int i = 0; i < kLatentDim; ++i) {
    lp += normal_logpdf(z[i], out[kNumFingerPoints + i], std::exp(log_std[i]));
  }
  return lp;
}

double PrePolicy::entropy(const Eigen::Ref<const VecX>& out) const {
  const VecX p = softmax(out.head<kNumFingerPoints>());
  double h_cat = 0.0;
  for (int i = 0; i < kNumFingerPoints; ++i) {
    if (p[i] > 0.0) h_cat -= p[i] * std::log(p[i]);
  }
  return h_cat + log_std.sum() + 0.5 * kLatentDim * std::log(2.0 * M_PI * M_E);
}

}  // namespace manip2d
