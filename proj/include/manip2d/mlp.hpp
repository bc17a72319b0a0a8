#pragma once

#include <vector>

#include "manip2d/pose.hpp"
#include "manip2d/rng.hpp"

namespace manip2d {

struct MlpCache {
  std::vector<MatX> act;  // act[0] is the input; act[L] the output
};

/// Fully-connected net, tanh hidden layers, linear output. Forward and
/// backward run column-batched so the heavy lifting is GEMM.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& layer_sizes, Rng& rng, double final_scale = 1.0);

  MatX forward(const MatX& x, MlpCache* cache = nullptr) const;
  VecX forward1(const VecX& x) const;

  /// Accumulates parameter gradients for dL/dy into grad (same shape net).
  void backward(const MlpCache& cache, const MatX& dy, Mlp& grad) const;

  static Mlp zeros_like(const Mlp& other);
  void set_zero();
  int64_t param_count() const;
  int in_dim() const { return sizes.empty() ? 0 : sizes.front(); }
  int out_dim() const { return sizes.empty() ? 0 : sizes.back(); }

  std::vector<int> sizes;
  std::vector<MatX> w;
  std::vector<VecX> b;
};

/// Flat view over a set of parameter tensors (for Adam, grad clipping, and
/// checkpointing).
struct ParamRefs {
  std::vector<double*> data;
  std::vector<Eigen::Index> size;

  void add(MatX& m) { data.push_back(m.data()); size.push_back(m.size()); }
  void add(VecX& v) { data.push_back(v.data()); size.push_back(v.size()); }
  void add(Mlp& net) {
    for (auto& m : net.w) add(m);
    for (auto& v : net.b) add(v);
  }
  int64_t total() const {
    int64_t t = 0;
    for (auto s : size) t += s;
    return t;
  }
};

double global_norm(const ParamRefs& grads);
/// Scales gradients in place so the global norm is at most max_norm.
void clip_global_norm(ParamRefs& grads, double max_norm);

class AdamOpt {
 public:
  AdamOpt() = default;
  AdamOpt(double beta1, double beta2, double eps)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void init(const ParamRefs& params);
  void step(ParamRefs& params, const ParamRefs& grads, double lr);

  int64_t t() const { return t_; }
  // Serialized state (moments and step counter).
  std::vector<VecX> m_, v_;
  int64_t t_ = 0;

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

}  // namespace manip2d
