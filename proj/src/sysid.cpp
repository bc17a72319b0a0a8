#include "manip2d/sysid.hpp"

#include <algorithm>
#include <cmath>

namespace manip2d {

std::vector<ExcitationSpec> generate_excitations(const ArmModel& model, int joint,
                                                 int n_traj, const SysidConfig& cfg,
                                                 Rng& rng) {
  std::vector<ExcitationSpec> specs;
  specs.reserve(n_traj);
  const double half_range = 0.5 * (model.joint_hi[joint] - model.joint_lo[joint]);
  for (int i = 0; i < n_traj; ++i) {
    ExcitationSpec s;
    s.joint = joint;
    s.amplitude = rng.uniform(cfg.amplitude_frac[0], cfg.amplitude_frac[1]) * half_range;
    // Frequency scaled so A * omega never exceeds the velocity limit.
    s.angular_freq = rng.uniform(cfg.freq_frac[0], cfg.freq_frac[1]) *
                     model.velocity_limits[joint] / s.amplitude;
    s.duration = cfg.duration;
    s.sample_rate = cfg.sample_rate;
    specs.push_back(s);
  }
  return specs;
}

VecX simulate_excitation(const ArmModel& model, const JointDynamicsParams& params,
                         const ExcitationSpec& spec, const SysidConfig& cfg) {
  const int j = spec.joint;
  const Vec3 q_hold = model.joint_mid();
  const double q0 = q_hold[j];
  Vec3 q = q_hold;
  double qd = 0.0;

  const int n = spec.samples();
  const int substeps = std::max(1, static_cast<int>(std::round(
                                       1.0 / (spec.sample_rate * cfg.physics_dt))));
  const double dt = cfg.physics_dt;
  const double kd = cfg.rho * std::sqrt(cfg.kp);

  VecX series(n);
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    const double target = q0 + spec.amplitude * std::sin(spec.angular_freq * t);
    for (int s = 0; s < substeps; ++s) {
      // PD evaluated at the physics rate against the held target, with
      // gravity feedforward, matching the runtime actuation path.
      double tau = cfg.kp * (target - q[j]) - kd * qd;
      tau += bias_forces(model, q, Vec3::Zero(), cfg.gravity)[j];
      tau = std::clamp(tau, -model.torque_limits[j], model.torque_limits[j]);
      const double qdd = single_joint_accel(model, params, q, qd, tau, j, cfg.gravity);
      qd = std::clamp(qd + qdd * dt, -model.velocity_limits[j],
                      model.velocity_limits[j]);
      q[j] += qd * dt;
    }
    series[k] = q[j];
  }
  return series;
}

TrajectoryRecord collect_trajectory(const ArmModel& model,
                                    const JointDynamicsParams& plant_params,
                                    const ExcitationSpec& spec, const SysidConfig& cfg) {
  TrajectoryRecord rec;
  rec.spec = spec;
  rec.q = simulate_excitation(model, plant_params, spec, cfg);
  rec.plant_label = "sim_plant";
  return rec;
}

double sysid_objective(const ArmModel& model, const JointDynamicsParams& alpha,
                       const std::vector<TrajectoryRecord>& records,
                       const SysidConfig& cfg) {
  double total = 0.0;
  for (const auto& rec : records) {
    const VecX sim = simulate_excitation(model, alpha, rec.spec, cfg);
    total += std::sqrt((rec.q - sim).squaredNorm());
  }
  return total;
}

JointFitResult fit_joint(const ArmModel& model, int joint,
                         const std::vector<TrajectoryRecord>& records,
                         const JointDynamicsParams& initial_guess,
                         const SysidConfig& cfg) {
  JointFitResult result;
  result.joint = joint;

  auto decode = [&](const VecX& x) {
    JointDynamicsParams p = initial_guess;
    p.coulomb_friction[joint] = std::exp(x[0]);
    p.viscous_damping[joint] = std::exp(x[1]);
    p.armature[joint] = std::exp(x[2]);
    return p;
  };

  const auto objective = [&](const VecX& x) {
    return sysid_objective(model, decode(x), records, cfg);
  };

  VecX x0(3);
  x0 << std::log(std::max(1e-4, initial_guess.coulomb_friction[joint])),
      std::log(std::max(1e-4, initial_guess.viscous_damping[joint])),
      std::log(std::max(1e-4, initial_guess.armature[joint]));

  result.cmaes = cmaes_minimize(objective, x0, cfg.cmaes_sigma0, cfg.cmaes);
  const JointDynamicsParams fitted = decode(result.cmaes.x_best);
  result.params = Vec3(fitted.coulomb_friction[joint], fitted.viscous_damping[joint],
                       fitted.armature[joint]);
  result.objective = result.cmaes.f_best;
  result.inconsistent = result.objective > cfg.inconsistency_warn;
  return result;
}

JointDynamicsParams fit_all_joints(
    const ArmModel& model, const std::vector<std::vector<TrajectoryRecord>>& per_joint,
    const JointDynamicsParams& initial_guess, const SysidConfig& cfg,
    std::vector<JointFitResult>* details) {
  JointDynamicsParams fitted = initial_guess;
  for (int j = 0; j < static_cast<int>(per_joint.size()); ++j) {
    if (per_joint[j].empty()) continue;
    JointFitResult r = fit_joint(model, j, per_joint[j], initial_guess, cfg);
    fitted.coulomb_friction[j] = r.params[0];
    fitted.viscous_damping[j] = r.params[1];
    fitted.armature[j] = r.params[2];
    if (details) details->push_back(std::move(r));
  }
  return fitted;
}

}  // namespace manip2d
