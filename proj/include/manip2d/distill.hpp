#pragma once

#include <vector>

#include "manip2d/env.hpp"
#include "manip2d/policy.hpp"

namespace manip2d {

/// Planar continuous rotation representation: the first column of the 2D
/// rotation matrix. Decode normalizes, so any nonzero scale maps back to the
/// same angle; the encoding is continuous across the +-pi wrap.
Vec2 rotation_to_continuous(double theta);
double continuous_to_rotation(const Vec2& v);  // throws for ||v|| <= 1e-8

/// Input: flattened noisy keypoints (current object then goal, view-centered
/// like the policy observation). Label: EE pose (x, y, rotation 2-vector)
/// and gripper width.
constexpr int kStudentInDim = 4 * kNumKeypoints;
constexpr int kStudentOutDim = 5;

VecX student_input(const Keypoints& u_object, const Keypoints& u_goal);

struct DemoDataset {
  MatX inputs;  // kStudentInDim x N
  MatX labels;  // kStudentOutDim x N
  Eigen::Index size() const { return inputs.cols(); }
};

struct StudentConfig {
  std::vector<int> hidden{128, 128};
  int epochs = 60;
  int batch = 256;
  double lr = 1e-3;
  double val_fraction = 0.1;
  // Per-component loss weights: x, y, rotation rep (2), width.
  VecX loss_weights = (VecX(5) << 1.0, 1.0, 0.1, 0.1, 10.0).finished();
  uint64_t seed = 0;
};

struct StudentPolicy {
  Mlp net;

  struct Prediction {
    Pose2 pose;
    double width = 0.0;
    bool valid = false;  // false when the rotation representation collapsed
  };
  Prediction predict(const VecX& input) const;
};

/// Runs the teacher in fresh episodes, keeps only feasible placements, and
/// labels each sample with the executed EE pose and width. Inputs carry the
/// keypoint noise from the environment's randomization config.
DemoDataset collect_demos(const PrePolicy& teacher, const EnvConfig& env_config,
                          int count, uint64_t seed);

struct TrainStudentResult {
  StudentPolicy student;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  double best_val = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

TrainStudentResult train_student(const DemoDataset& dataset, const StudentConfig& cfg);

struct ClosedLoopReport {
  int episodes = 0;
  int successes = 0;
  int infeasible_predictions = 0;
  double success_rate = 0.0;
};

/// Student places the arm from noisy keypoints; the post-contact policy
/// finishes the episode (mode actions). Infeasible predictions count as
/// failures.
ClosedLoopReport eval_student_closed_loop(const StudentPolicy& student,
                                          const PostPolicy& post,
                                          const EnvConfig& env_config,
                                          const ResidualLimit& zeta, int episodes,
                                          uint64_t seed);

}  // namespace manip2d
