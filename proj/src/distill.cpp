#include "manip2d/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace manip2d {

Vec2 rotation_to_continuous(double theta) {
  return Vec2(std::cos(theta), std::sin(theta));
}

double continuous_to_rotation(const Vec2& v) {
  const double n = v.norm();
  if (n <= 1e-8) {
    throw std::runtime_error("degenerate rotation representation");
  }
  const Vec2 u = v / n;
  return std::atan2(u.y(), u.x());
}

VecX student_input(const Keypoints& u_object, const Keypoints& u_goal) {
  VecX v(kStudentInDim);
  int i = 0;
  for (int c = 0; c < kNumKeypoints; ++c) {
    v[i++] = (u_object.u(0, c) - 0.5) * 2.0;
    v[i++] = (u_object.u(1, c) - 0.5) * 2.0;
  }
  for (int c = 0; c < kNumKeypoints; ++c) {
    v[i++] = (u_goal.u(0, c) - 0.5) * 2.0;
    v[i++] = (u_goal.u(1, c) - 0.5) * 2.0;
  }
  return v;
}

StudentPolicy::Prediction StudentPolicy::predict(const VecX& input) const {
  const VecX out = net.forward1(input);
  Prediction p;
  const Vec2 rep(out[2], out[3]);
  if (rep.norm() <= 1e-8) return p;
  p.pose = Pose2(out[0], out[1], continuous_to_rotation(rep));
  p.width = std::clamp(out[4], 0.0, 0.04);
  p.valid = true;
  return p;
}

DemoDataset collect_demos(const PrePolicy& teacher, const EnvConfig& env_config,
                          int count, uint64_t seed) {
  DemoDataset data;
  data.inputs.resize(kStudentInDim, count);
  data.labels.resize(kStudentOutDim, count);

  Environment env(env_config, Rng::derive_seed(seed, 1));
  Rng noise_rng(Rng::derive_seed(seed, 2));
  const double kp_noise = env_config.dr.keypoint_noise_std;

  int filled = 0;
  int attempts = 0;
  const int max_attempts = count * 200 + 1000;
  while (filled < count) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("teacher produced too few feasible placements");
    }
    env.begin_episode();
    const VecX pre_obs = env.observe_pre();
    const VecX out = teacher.net.forward1(pre_obs);
    const auto sample = teacher.sample(out, env.rng());
    const Pose2 target = pre_contact_target_pose(
        env_config.arm.gripper, sample.action, env.world().object().pose,
        env_config.scene.object_half_extents);
    if (!env.apply_pre_contact(sample.action)) continue;

    Keypoints u_o = normalize_keypoints(
        object_keypoints(env.task().object_init, env_config.scene.object_half_extents),
        env_config.scene.view_lo, env_config.scene.view_hi);
    Keypoints u_g = normalize_keypoints(
        object_keypoints(env.task().goal, env_config.scene.object_half_extents),
        env_config.scene.view_lo, env_config.scene.view_hi);
    for (int c = 0; c < kNumKeypoints; ++c) {
      for (int r = 0; r < 2; ++r) {
        u_o.u(r, c) += noise_rng.normal(0.0, kp_noise);
        u_g.u(r, c) += noise_rng.normal(0.0, kp_noise);
      }
    }

    data.inputs.col(filled) = student_input(u_o, u_g);
    const Vec2 rep = rotation_to_continuous(target.theta);
    data.labels.col(filled) << target.x, target.y, rep.x(), rep.y(),
        std::clamp(sample.action.width, 0.0, 0.04);
    ++filled;
  }
  return data;
}

TrainStudentResult train_student(const DemoDataset& dataset, const StudentConfig& cfg) {
  if (dataset.size() == 0) throw std::runtime_error("empty demo dataset");
  TrainStudentResult result;
  Rng rng(cfg.seed);

  std::vector<Eigen::Index> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = dataset.size() - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(static_cast<int>(i + 1))]);
  }
  const Eigen::Index val_n =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(dataset.size() * cfg.val_fraction));
  const Eigen::Index train_n = dataset.size() - val_n;

  MatX train_x(kStudentInDim, train_n), train_y(kStudentOutDim, train_n);
  MatX val_x(kStudentInDim, val_n), val_y(kStudentOutDim, val_n);
  for (Eigen::Index i = 0; i < train_n; ++i) {
    train_x.col(i) = dataset.inputs.col(idx[i]);
    train_y.col(i) = dataset.labels.col(idx[i]);
  }
  for (Eigen::Index i = 0; i < val_n; ++i) {
    val_x.col(i) = dataset.inputs.col(idx[train_n + i]);
    val_y.col(i) = dataset.labels.col(idx[train_n + i]);
  }

  std::vector<int> sizes{kStudentInDim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(kStudentOutDim);
  StudentPolicy student{Mlp(sizes, rng)};
  AdamOpt opt;

  const VecX w = cfg.loss_weights;
  auto weighted_loss = [&](const MatX& pred, const MatX& target) {
    const MatX err = pred - target;
    return (w.asDiagonal() * err.cwiseProduct(err)).sum() / err.cols();
  };

  Mlp best = student.net;
  std::vector<Eigen::Index> order(train_n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = train_n - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(static_cast<int>(i + 1))]);
    }
    double epoch_loss = 0.0;
    Eigen::Index batches = 0;
    for (Eigen::Index lo = 0; lo < train_n; lo += cfg.batch) {
      const Eigen::Index hi = std::min(train_n, lo + cfg.batch);
      const Eigen::Index b = hi - lo;
      MatX x(kStudentInDim, b), y(kStudentOutDim, b);
      for (Eigen::Index k = lo; k < hi; ++k) {
        x.col(k - lo) = train_x.col(order[k]);
        y.col(k - lo) = train_y.col(order[k]);
      }
      MlpCache cache;
      const MatX pred = student.net.forward(x, &cache);
      const double loss = weighted_loss(pred, y);
      if (!std::isfinite(loss)) {
        result.diverged = true;
        break;
      }
      epoch_loss += loss;
      ++batches;
      MatX dy = (2.0 / b) * (w.asDiagonal() * (pred - y));
      Mlp grad = Mlp::zeros_like(student.net);
      student.net.backward(cache, dy, grad);
      ParamRefs p, g;
      p.add(student.net);
      g.add(grad);
      opt.step(p, g, cfg.lr);
    }
    if (result.diverged) break;
    result.train_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);
    const double val = weighted_loss(student.net.forward(val_x), val_y);
    result.val_loss.push_back(val);
    if (val < result.best_val) {
      result.best_val = val;
      best = student.net;
    }
  }

  result.student.net = best;
  return result;
}

ClosedLoopReport eval_student_closed_loop(const StudentPolicy& student,
                                          const PostPolicy& post,
                                          const EnvConfig& env_config,
                                          const ResidualLimit& zeta, int episodes,
                                          uint64_t seed) {
  ClosedLoopReport report;
  report.episodes = episodes;
  for (int ep = 0; ep < episodes; ++ep) {
    Environment env(env_config, Rng::derive_seed(seed, ep));
    env.set_residual_limit(zeta);
    env.begin_episode();

    Keypoints u_o = normalize_keypoints(
        object_keypoints(env.task().object_init, env_config.scene.object_half_extents),
        env_config.scene.view_lo, env_config.scene.view_hi);
    Keypoints u_g = normalize_keypoints(
        object_keypoints(env.task().goal, env_config.scene.object_half_extents),
        env_config.scene.view_lo, env_config.scene.view_hi);
    const double kp_noise = env_config.dr.keypoint_noise_std;
    for (int c = 0; c < kNumKeypoints; ++c) {
      for (int r = 0; r < 2; ++r) {
        u_o.u(r, c) += env.rng().normal(0.0, kp_noise);
        u_g.u(r, c) += env.rng().normal(0.0, kp_noise);
      }
    }

    const auto pred = student.predict(student_input(u_o, u_g));
    if (!pred.valid || !env.place_ee(pred.pose, pred.width)) {
      ++report.infeasible_predictions;
      continue;
    }
    while (env.phase() == Environment::Phase::running) {
      const VecX obs = env.observe().to_vector({0.06, 0.1});
      const VecX mean = post.net.forward1(obs);
      const StepResult r = env.step(post.mode(mean, zeta));
      if (r.status == StepStatus::success) ++report.successes;
      if (r.status != StepStatus::running) break;
    }
  }
  report.success_rate = static_cast<double>(report.successes) / episodes;
  return report;
}

}  // namespace manip2d
