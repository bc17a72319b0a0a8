#include "manip2d/arm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manip2d {

Pose2 forward_kinematics(const ArmModel& model, const Vec3& q) {
  double angle = model.base_pose.theta;
  Vec2 p = model.base_pose.position();
  for (int i = 0; i < 3; ++i) {
    angle += q[i];
    p += rot2(angle).col(0) * model.link_lengths[i];
  }
  return Pose2(p.x(), p.y(), angle);
}

std::array<Vec2, 4> joint_positions(const ArmModel& model, const Vec3& q) {
  std::array<Vec2, 4> pts;
  double angle = model.base_pose.theta;
  Vec2 p = model.base_pose.position();
  pts[0] = p;
  for (int i = 0; i < 3; ++i) {
    angle += q[i];
    p += rot2(angle).col(0) * model.link_lengths[i];
    pts[i + 1] = p;
  }
  return pts;
}

Mat3 jacobian(const ArmModel& model, const Vec3& q) {
  const auto pts = joint_positions(model, q);
  Mat3 j;
  for (int i = 0; i < 3; ++i) {
    const Vec2 col = perp(pts[3] - pts[i]);
    j(0, i) = col.x();
    j(1, i) = col.y();
    j(2, i) = 1.0;
  }
  return j;
}

Eigen::Matrix<double, 2, 3> point_jacobian(const ArmModel& model, const Vec3& q,
                                           const Vec2& point_in_ee) {
  const auto pts = joint_positions(model, q);
  const Pose2 ee = forward_kinematics(model, q);
  const Vec2 world_point = ee.transform(point_in_ee);
  Eigen::Matrix<double, 2, 3> j;
  for (int i = 0; i < 3; ++i) {
    j.col(i) = perp(world_point - pts[i]);
  }
  return j;
}

namespace {

struct DlsOutcome {
  Vec3 q;
  double pos_res;
  double rot_res;
  int iters;
  bool converged;
};

DlsOutcome damped_least_squares(const ArmModel& model, const Pose2& target,
                                Vec3 q, const IkConfig& cfg) {
  const double lambda2 = cfg.damping * cfg.damping;
  DlsOutcome out{q, 0.0, 0.0, 0, false};
  for (int it = 0; it <= cfg.max_iterations; ++it) {
    const Pose2 ee = forward_kinematics(model, q);
    Vec3 err;
    err.head<2>() = target.position() - ee.position();
    err[2] = wrap_angle(target.theta - ee.theta);
    out.q = q;
    out.pos_res = err.head<2>().norm();
    out.rot_res = std::abs(err[2]);
    out.iters = it;
    if (out.pos_res <= cfg.position_tol && out.rot_res <= cfg.orientation_tol) {
      out.converged = true;
      return out;
    }
    if (it == cfg.max_iterations) break;
    const Mat3 j = jacobian(model, q);
    const Mat3 jjt = j * j.transpose() + lambda2 * Mat3::Identity();
    Vec3 dq = j.transpose() * jjt.ldlt().solve(err);
    dq = dq.cwiseMax(-cfg.step_clamp).cwiseMin(cfg.step_clamp);
    q += dq;
  }
  return out;
}

/// Fold q into [lo, hi] by 2*pi shifts where possible.
Vec3 fold_into_limits(Vec3 q, const Vec3& lo, const Vec3& hi) {
  for (int i = 0; i < 3; ++i) {
    while (q[i] > hi[i] && q[i] - 2.0 * M_PI >= lo[i]) q[i] -= 2.0 * M_PI;
    while (q[i] < lo[i] && q[i] + 2.0 * M_PI <= hi[i]) q[i] += 2.0 * M_PI;
  }
  return q;
}

bool inside(const Vec3& q, const Vec3& lo, const Vec3& hi, double tol = 1e-9) {
  for (int i = 0; i < 3; ++i) {
    if (q[i] < lo[i] - tol || q[i] > hi[i] + tol) return false;
  }
  return true;
}

}  // namespace

IkResult solve_ik(const ArmModel& model, const Pose2& target, const Vec3& q_seed,
                  const IkConfig& cfg, const Vec3* limit_lo, const Vec3* limit_hi) {
  const Vec3 lo = limit_lo ? *limit_lo : model.joint_lo;
  const Vec3 hi = limit_hi ? *limit_hi : model.joint_hi;

  // Candidate seeds: the caller's seed, then the two analytic elbow branches
  // of the decoupled problem (wrist position = target minus last link).
  std::vector<Vec3> seeds;
  seeds.push_back(q_seed);
  {
    const Vec2 wrist = target.position() -
                       rot2(target.theta).col(0) * model.link_lengths[2];
    const Vec2 rel = wrist - model.base_pose.position();
    const double l1 = model.link_lengths[0], l2 = model.link_lengths[1];
    const double d2 = rel.squaredNorm();
    const double c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if (c2 >= -1.0 && c2 <= 1.0) {
      for (double sign : {1.0, -1.0}) {
        const double q2 = sign * std::acos(std::clamp(c2, -1.0, 1.0));
        const double q1 = std::atan2(rel.y(), rel.x()) -
                          std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2)) -
                          model.base_pose.theta;
        const double q3 = target.theta - model.base_pose.theta - q1 - q2;
        seeds.emplace_back(wrap_angle(q1), wrap_angle(q2), wrap_angle(q3));
      }
    }
  }

  IkResult best;
  best.position_residual = std::numeric_limits<double>::infinity();
  best.orientation_residual = std::numeric_limits<double>::infinity();
  for (const Vec3& seed : seeds) {
    const DlsOutcome out = damped_least_squares(model, target, seed, cfg);
    if (out.converged) {
      const Vec3 folded = fold_into_limits(out.q, lo, hi);
      if (inside(folded, lo, hi)) {
        IkResult res;
        res.ok = true;
        res.q = folded;
        res.position_residual = out.pos_res;
        res.orientation_residual = out.rot_res;
        res.iterations = out.iters;
        return res;
      }
    }
    if (out.pos_res < best.position_residual) {
      best.q = out.q;
      best.position_residual = out.pos_res;
      best.orientation_residual = out.rot_res;
      best.iterations = out.iters;
    }
  }
  best.ok = false;
  return best;
}

Vec3 joint_position_controller(const ArmModel& model, const JointState& state,
                               const Vec3& q_target, const Vec3& kp, const Vec3& rho,
                               LimitCounters* counters) {
  Vec3 tau;
  for (int i = 0; i < 3; ++i) {
    const double kpi = std::max(0.0, kp[i]);
    const double rhoi = std::max(0.5, rho[i]);
    const double kdi = rhoi * std::sqrt(kpi);
    double t = kpi * (q_target[i] - state.q[i]) - kdi * state.qdot[i];
    const double lim = model.torque_limits[i];
    if (t > lim || t < -lim) {
      t = std::clamp(t, -lim, lim);
      if (counters) ++counters->torque_clamps;
    }
    tau[i] = t;
  }
  if (counters) counters->joint_ticks += 3;
  return tau;
}

Vec3 inverse_dynamics(const ArmModel& model, const Vec3& q, const Vec3& qdot,
                      const Vec3& qddot, double gravity) {
  const Vec3 inertias = model.link_inertias();

  // Forward pass: absolute angle, angular rate/accel, origin accel, COM accel.
  double angle = model.base_pose.theta;
  double w = 0.0, a = 0.0;
  Vec2 acc_origin(0.0, gravity);  // gravity folded in as base acceleration
  Vec2 com[3], acc_com[3], link_vec[3];
  double ang_acc[3];
  Vec2 origin = model.base_pose.position();
  Vec2 origins[3];
  for (int i = 0; i < 3; ++i) {
    angle += q[i];
    w += qdot[i];
    a += qddot[i];
    ang_acc[i] = a;
    const Vec2 dir = rot2(angle).col(0);
    link_vec[i] = dir * model.link_lengths[i];
    origins[i] = origin;
    const Vec2 rc = 0.5 * link_vec[i];
    com[i] = origin + rc;
    acc_com[i] = acc_origin + a * perp(rc) - w * w * rc;
    acc_origin += a * perp(link_vec[i]) - w * w * link_vec[i];
    origin += link_vec[i];
  }

  // Backward pass: forces and joint torques.
  Vec3 tau;
  Vec2 f_child = Vec2::Zero();
  double n_child = 0.0;
  for (int i = 2; i >= 0; --i) {
    const Vec2 f_com = model.link_masses[i] * acc_com[i];
    const double n_com = inertias[i] * ang_acc[i];
    const Vec2 rc = com[i] - origins[i];
    const double n = n_child + n_com + cross2(rc, f_com) + cross2(link_vec[i], f_child);
    tau[i] = n;
    f_child += f_com;
    n_child = n;
  }
  return tau;
}

Mat3 mass_matrix(const ArmModel& model, const Vec3& q) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = 1.0;
    m.col(i) = inverse_dynamics(model, q, Vec3::Zero(), e, 0.0);
  }
  // Symmetrize away the round-off.
  return 0.5 * (m + m.transpose());
}

Vec3 bias_forces(const ArmModel& model, const Vec3& q, const Vec3& qdot,
                 double gravity) {
  return inverse_dynamics(model, q, qdot, Vec3::Zero(), gravity);
}

Vec3 joint_accel(const ArmModel& model, const JointDynamicsParams& params,
                 const Vec3& q, const Vec3& qdot, const Vec3& tau, double gravity) {
  Mat3 m = mass_matrix(model, q);
  m.diagonal() += params.armature;
  Vec3 rhs = tau - bias_forces(model, q, qdot, gravity);
  for (int i = 0; i < 3; ++i) {
    rhs[i] -= params.viscous_damping[i] * qdot[i];
    rhs[i] -= params.coulomb_friction[i] * smooth_sign(qdot[i], kFrictionVelEps);
  }
  return m.ldlt().solve(rhs);
}

JointState arm_dynamics_step(const ArmModel& model, const JointDynamicsParams& params,
                             const JointState& state, const Vec3& tau,
                             double width_target, double dt, double gravity,
                             LimitCounters* counters) {
  JointState next = state;
  const Vec3 qdd = joint_accel(model, params, state.q, state.qdot, tau, gravity);
  next.qdot += qdd * dt;
  for (int i = 0; i < 3; ++i) {
    const double lim = model.velocity_limits[i];
    if (next.qdot[i] > lim || next.qdot[i] < -lim) {
      next.qdot[i] = std::clamp(next.qdot[i], -lim, lim);
      if (counters) ++counters->velocity_clamps;
    }
  }
  next.q += next.qdot * dt;

  // Width servo (critically damped position loop on the gripper width).
  const GripperModel& g = model.gripper;
  const double target = std::clamp(width_target, 0.0, g.max_width);
  const double wdd = g.servo_kp * (target - state.width) - g.servo_kd * state.width_dot;
  next.width_dot = std::clamp(state.width_dot + wdd * dt, -g.width_vel_limit,
                              g.width_vel_limit);
  next.width = std::clamp(state.width + next.width_dot * dt, 0.0, g.max_width);

  if (!next.q.allFinite() || !next.qdot.allFinite() || !std::isfinite(next.width)) {
    throw std::runtime_error("arm dynamics produced a non-finite joint state");
  }
  return next;
}

double single_joint_accel(const ArmModel& model, const JointDynamicsParams& params,
                          const Vec3& q, double qdot_j, double tau_j, int joint,
                          double gravity) {
  Mat3 m = mass_matrix(model, q);
  Vec3 qdot = Vec3::Zero();
  qdot[joint] = qdot_j;
  const Vec3 bias = bias_forces(model, q, qdot, gravity);
  double rhs = tau_j - bias[joint];
  rhs -= params.viscous_damping[joint] * qdot_j;
  rhs -= params.coulomb_friction[joint] * smooth_sign(qdot_j, kFrictionVelEps);
  return rhs / (m(joint, joint) + params.armature[joint]);
}

double arm_mechanical_energy(const ArmModel& model, const JointDynamicsParams& params,
                             const JointState& state, double gravity) {
  Mat3 m = mass_matrix(model, state.q);
  m.diagonal() += params.armature;
  double energy = 0.5 * state.qdot.dot(m * state.qdot);

  double angle = model.base_pose.theta;
  Vec2 origin = model.base_pose.position();
  for (int i = 0; i < 3; ++i) {
    angle += state.q[i];
    const Vec2 link = rot2(angle).col(0) * model.link_lengths[i];
    energy += model.link_masses[i] * gravity * (origin + 0.5 * link).y();
    origin += link;
  }
  return energy;
}

}  // namespace manip2d
