#pragma once

#include <vector>

#include "manip2d/arm.hpp"
#include "manip2d/cmaes.hpp"
#include "manip2d/rng.hpp"

namespace manip2d {

/// Single-joint sinusoidal position-target excitation. The remaining joints
/// hold their (mid-range) positions.
struct ExcitationSpec {
  int joint = 0;
  double amplitude = 0.5;       // radians
  double angular_freq = 1.0;    // rad/s
  double duration = 4.0;        // seconds
  double sample_rate = 100.0;   // Hz

  int samples() const { return static_cast<int>(duration * sample_rate); }
};

struct TrajectoryRecord {
  ExcitationSpec spec;
  VecX q;  // sampled joint position, length duration * rate
  uint64_t seed = 0;
  std::string plant_label;
};

struct SysidConfig {
  int n_traj = 8;
  double duration = 4.0;
  double sample_rate = 100.0;
  double kp = 80.0;    // controller gains shared by plant and model
  double rho = 1.0;
  Vec2 amplitude_frac = Vec2(0.3, 1.0);  // of half the joint range
  Vec2 freq_frac = Vec2(0.2, 1.0);       // of velocity_limit / amplitude
  double physics_dt = 0.002;
  double gravity = 9.81;
  double inconsistency_warn = 0.01;  // objective floor that flags bad data
  CmaEsConfig cmaes{/*max_generations=*/300};
  double cmaes_sigma0 = 0.5;  // in log-parameter space
};

std::vector<ExcitationSpec> generate_excitations(const ArmModel& model, int joint,
                                                 int n_traj, const SysidConfig& cfg,
                                                 Rng& rng);

/// Closed-loop single-joint rollout under the given dynamics parameters.
VecX simulate_excitation(const ArmModel& model, const JointDynamicsParams& params,
                         const ExcitationSpec& spec, const SysidConfig& cfg);

TrajectoryRecord collect_trajectory(const ArmModel& model,
                                    const JointDynamicsParams& plant_params,
                                    const ExcitationSpec& spec, const SysidConfig& cfg);

/// Root-sum-of-squares trajectory discrepancy summed over records:
/// sum_i sqrt(sum_t (q_real - q_sim)^2).
double sysid_objective(const ArmModel& model, const JointDynamicsParams& alpha,
                       const std::vector<TrajectoryRecord>& records,
                       const SysidConfig& cfg);

struct JointFitResult {
  int joint = 0;
  Vec3 params = Vec3::Zero();  // coulomb, viscous, armature
  double objective = 0.0;
  bool inconsistent = false;
  CmaEsResult cmaes;
};

/// Independent 3-parameter CMA-ES fit per joint; positivity is guaranteed by
/// optimizing log parameters.
JointFitResult fit_joint(const ArmModel& model, int joint,
                         const std::vector<TrajectoryRecord>& records,
                         const JointDynamicsParams& initial_guess,
                         const SysidConfig& cfg);

JointDynamicsParams fit_all_joints(const ArmModel& model,
                                   const std::vector<std::vector<TrajectoryRecord>>& per_joint,
                                   const JointDynamicsParams& initial_guess,
                                   const SysidConfig& cfg,
                                   std::vector<JointFitResult>* details = nullptr);

}  // namespace manip2d
