#include "manip2d/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace manip2d {

Mlp::Mlp(const std::vector<int>& layer_sizes, Rng& rng, double final_scale)
    : sizes(layer_sizes) {
  if (sizes.size() < 2) throw std::runtime_error("Mlp needs at least two layers");
  const size_t layers = sizes.size() - 1;
  w.resize(layers);
  b.resize(layers);
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    w[l].resize(out, in);
    const double scale = std::sqrt(1.0 / in) * (l + 1 == layers ? final_scale : 1.0);
    for (int j = 0; j < out; ++j) {
      for (int i = 0; i < in; ++i) w[l](j, i) = rng.normal(0.0, scale);
    }
    b[l] = VecX::Zero(out);
  }
}

MatX Mlp::forward(const MatX& x, MlpCache* cache) const {
  if (cache) {
    cache->act.clear();
    cache->act.push_back(x);
  }
  MatX a = x;
  for (size_t l = 0; l < w.size(); ++l) {
    MatX z = (w[l] * a).colwise() + b[l];
    if (l + 1 < w.size()) z = z.array().tanh();
    a = std::move(z);
    if (cache) cache->act.push_back(a);
  }
  return a;
}

VecX Mlp::forward1(const VecX& x) const {
  VecX a = x;
  for (size_t l = 0; l < w.size(); ++l) {
    VecX z = w[l] * a + b[l];
    if (l + 1 < w.size()) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

void Mlp::backward(const MlpCache& cache, const MatX& dy, Mlp& grad) const {
  MatX delta = dy;
  for (int l = static_cast<int>(w.size()) - 1; l >= 0; --l) {
    grad.w[l].noalias() += delta * cache.act[l].transpose();
    grad.b[l] += delta.rowwise().sum();
    if (l > 0) {
      // act[l] is tanh output for hidden layers.
      delta = (w[l].transpose() * delta).cwiseProduct(
          (1.0 - cache.act[l].array().square()).matrix());
    }
  }
}

Mlp Mlp::zeros_like(const Mlp& other) {
  Mlp g;
  g.sizes = other.sizes;
  g.w.resize(other.w.size());
  g.b.resize(other.b.size());
  for (size_t l = 0; l < other.w.size(); ++l) {
    g.w[l] = MatX::Zero(other.w[l].rows(), other.w[l].cols());
    g.b[l] = VecX::Zero(other.b[l].size());
  }
  return g;
}

void Mlp::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

int64_t Mlp::param_count() const {
  int64_t n = 0;
  for (const auto& m : w) n += m.size();
  for (const auto& v : b) n += v.size();
  return n;
}

double global_norm(const ParamRefs& grads) {
  double sq = 0.0;
  for (size_t i = 0; i < grads.data.size(); ++i) {
    sq += Eigen::Map<const VecX>(grads.data[i], grads.size[i]).squaredNorm();
  }
  return std::sqrt(sq);
}

void clip_global_norm(ParamRefs& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (size_t i = 0; i < grads.data.size(); ++i) {
    Eigen::Map<VecX>(grads.data[i], grads.size[i]) *= scale;
  }
}

void AdamOpt::init(const ParamRefs& params) {
  m_.clear();
  v_.clear();
  for (auto s : params.size) {
    m_.push_back(VecX::Zero(s));
    v_.push_back(VecX::Zero(s));
  }
  t_ = 0;
}

void AdamOpt::step(ParamRefs& params, const ParamRefs& grads, double lr) {
  if (m_.size() != params.data.size()) init(params);
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.data.size(); ++i) {
    Eigen::Map<VecX> p(params.data[i], params.size[i]);
    Eigen::Map<const VecX> g(grads.data[i], grads.size[i]);
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr * (m_[i].array() / bc1) /
                 ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

}  // namespace manip2d
