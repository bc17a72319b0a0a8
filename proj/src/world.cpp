#include "manip2d/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manip2d {

World::World(const RigidBody2& object, const Terrain& terrain, const WorldConfig& config)
    : object_(object), terrain_(terrain), config_(config) {}

void World::attach_arm(const ArmModel& model, const JointState& state) {
  arm_model_ = model;
  arm_state_ = state;
  width_target_ = state.width;
}

void World::set_arm_command(const Vec3& tau, double width_target) {
  tau_command_ = tau;
  width_target_ = width_target;
  pd_mode_ = false;
}

void World::set_arm_pd_command(const Vec3& q_target, const Vec3& kp, const Vec3& rho,
                               double width_target, const Vec3& tau_noise) {
  pd_q_target_ = q_target;
  pd_kp_ = kp;
  pd_rho_ = rho;
  pd_tau_noise_ = tau_noise;
  width_target_ = width_target;
  pd_mode_ = true;
}

Pose2 World::ee_pose() const { return forward_kinematics(*arm_model_, arm_state_.q); }

Vec2 World::finger_point_world(FingerPoint p) const {
  const Pose2 ee = ee_pose();
  return ee.transform(arm_model_->gripper.pad_point(p, arm_state_.width));
}

double World::mechanical_energy() const {
  double e = object_.kinetic_energy() +
             object_.mass * config_.gravity * object_.pose.y;
  if (arm_model_) {
    e += arm_mechanical_energy(*arm_model_, arm_model_->dynamics, arm_state_,
                               config_.gravity);
  }
  return e;
}

std::vector<Contact2> World::detect_contacts() const {
  return detect_contacts(config_.solver.touch_tolerance);
}

std::vector<Contact2> World::detect_contacts(double margin) const {
  std::vector<Contact2> contacts;
  const double tol = margin;
  const auto boxes = terrain_.feature_boxes();

  // Object vs table surface and terrain features.
  {
    const size_t before = contacts.size();
    collide_box_halfplane(object_.pose, object_.half_extents, 0.0, tol, contacts);
    for (const auto& b : boxes) {
      collide_box_box(object_.pose, object_.half_extents,
                      Pose2(b.center.x(), b.center.y(), 0.0), b.half, tol, contacts);
    }
    const double mu = combine_friction(object_.friction, terrain_.friction);
    for (size_t k = before; k < contacts.size(); ++k) {
      contacts[k].body_a = kBodyObject;
      contacts[k].body_b = kBodyTerrain;
      contacts[k].combined_friction = mu;
    }
  }

  if (!arm_model_) return contacts;

  const GripperModel& g = arm_model_->gripper;
  const Pose2 ee = ee_pose();
  const FingerPoint points[3] = {FingerPoint::left_tip, FingerPoint::right_tip,
                                 FingerPoint::mid_palm};
  const int8_t ids[3] = {kBodyLeftTip, kBodyRightTip, kBodyPalm};
  const double ee_mu = combine_friction(object_.friction, ee_friction_);

  for (int i = 0; i < 3; ++i) {
    const Vec2 center = ee.transform(g.collider_center(points[i], arm_state_.width));
    const double radius = g.collider_radius(points[i]);

    // Gripper pad vs object: object is body a, pad is body b.
    {
      const size_t before = contacts.size();
      collide_circle_box(center, radius, object_.pose, object_.half_extents, tol,
                         contacts);
      for (size_t k = before; k < contacts.size(); ++k) {
        contacts[k].body_a = kBodyObject;
        contacts[k].body_b = ids[i];
        contacts[k].combined_friction = ee_mu;
      }
    }

    // Gripper pad vs terrain: pad is body a, terrain is body b.
    const double mu_t = combine_friction(ee_friction_, terrain_.friction);
    const double bottom = center.y() - radius;
    if (bottom <= tol) {
      Contact2 c;
      c.point = Vec2(center.x(), bottom);
      c.normal = Vec2::UnitY();
      c.separation = bottom;
      c.depth = std::max(0.0, -bottom);
      c.body_a = ids[i];
      c.body_b = kBodyTerrain;
      c.feature = 64;  // pad vs table surface
      c.combined_friction = mu_t;
      contacts.push_back(c);
    }
    for (const auto& b : boxes) {
      std::vector<Contact2> tmp;
      collide_circle_box(center, radius, Pose2(b.center.x(), b.center.y(), 0.0),
                         b.half, tol, tmp);
      for (Contact2 c : tmp) {
        c.normal = -c.normal;  // from terrain toward the pad
        c.body_a = ids[i];
        c.body_b = kBodyTerrain;
        c.feature = 65;  // pad vs terrain feature
        c.combined_friction = mu_t;
        contacts.push_back(c);
      }
    }
  }
  return contacts;
}

namespace {

struct ContactRow {
  Vec2 normal, tangent;
  double obj_sign = 0.0;  // +1 when the object is body a, -1 when body b
  Vec2 r_obj = Vec2::Zero();
  double arm_sign = 0.0;
  Eigen::Matrix<double, 2, 3> jt = Eigen::Matrix<double, 2, 3>::Zero();
  Vec3 minv_jn = Vec3::Zero();  // M^-1 J^T n
  Vec3 minv_jt = Vec3::Zero();
  Vec3 jn_arm = Vec3::Zero();
  Vec3 jt_arm = Vec3::Zero();
  double kn = 0.0, kt = 0.0;
  double bias = 0.0;
  double mu = 0.0;
};

}  // namespace

std::vector<ContactImpulse> World::solve_contacts(const std::vector<Contact2>& contacts,
                                                  double dt) {
  std::vector<ContactImpulse> impulses(contacts.size());
  if (contacts.empty()) return impulses;
  const bool warm = contacts_.size() == impulses_.size();

  const SolverConfig& s = config_.solver;
  std::vector<ContactRow> rows(contacts.size());

  for (size_t k = 0; k < contacts.size(); ++k) {
    const Contact2& c = contacts[k];
    ContactRow& row = rows[k];
    row.normal = c.normal;
    row.tangent = perp(c.normal);
    row.mu = c.combined_friction;
    if (c.separation > 0.0) {
      // Speculative contact: allow closing exactly to the surface.
      row.bias = -c.separation / dt;
    } else {
      row.bias = std::min(s.max_correction_vel,
                          s.baumgarte * std::max(0.0, c.depth - s.slop) / dt);
    }

    double kn = 0.0, kt = 0.0;
    if (c.body_a == kBodyObject || c.body_b == kBodyObject) {
      row.obj_sign = (c.body_a == kBodyObject) ? 1.0 : -1.0;
      row.r_obj = c.point - object_.pose.position();
      const double rn = cross2(row.r_obj, row.normal);
      const double rt = cross2(row.r_obj, row.tangent);
      kn += object_.inv_mass() + rn * rn * object_.inv_inertia();
      kt += object_.inv_mass() + rt * rt * object_.inv_inertia();
    }
    const bool a_is_pad = c.body_a >= kBodyLeftTip;
    const bool b_is_pad = c.body_b >= kBodyLeftTip;
    if (a_is_pad || b_is_pad) {
      row.arm_sign = a_is_pad ? 1.0 : -1.0;
      // The contact point rides rigidly on the EE frame.
      const Pose2 ee = ee_pose();
      row.jt = point_jacobian(*arm_model_, arm_state_.q,
                              ee.inverse_transform(c.point));
      row.jn_arm = row.jt.transpose() * row.normal;
      row.jt_arm = row.jt.transpose() * row.tangent;
      row.minv_jn = arm_mass_ldlt_.solve(row.jn_arm);
      row.minv_jt = arm_mass_ldlt_.solve(row.jt_arm);
      kn += row.jn_arm.dot(row.minv_jn);
      kt += row.jt_arm.dot(row.minv_jt);
    }
    row.kn = std::max(kn, 1e-12);
    row.kt = std::max(kt, 1e-12);
  }

  auto rel_velocity = [&](const ContactRow& row) -> Vec2 {
    Vec2 v = Vec2::Zero();
    if (row.obj_sign != 0.0) {
      v += row.obj_sign * (object_.vel + object_.omega * perp(row.r_obj));
    }
    if (row.arm_sign != 0.0) {
      v += row.arm_sign * (row.jt * arm_state_.qdot);
    }
    return v;
  };

  auto apply = [&](const ContactRow& row, const Vec2& dir, double dj,
                   const Vec3& minv_jdir) {
    if (row.obj_sign != 0.0) {
      object_.vel += row.obj_sign * dj * dir * object_.inv_mass();
      object_.omega += row.obj_sign * dj * cross2(row.r_obj, dir) * object_.inv_inertia();
    }
    if (row.arm_sign != 0.0) {
      arm_state_.qdot += row.arm_sign * dj * minv_jdir;
    }
  };

  // Warm start from the previous substep's matching contacts; with the
  // arm-object mass ratio, cold Gauss-Seidel cannot settle a pressed stack
  // within the iteration budget.
  if (warm) {
    for (size_t k = 0; k < contacts.size(); ++k) {
      const Contact2& c = contacts[k];
      for (size_t p = 0; p < contacts_.size(); ++p) {
        const Contact2& old = contacts_[p];
        if (old.body_a == c.body_a && old.body_b == c.body_b &&
            old.feature == c.feature) {
          impulses[k] = impulses_[p];
          const ContactRow& row = rows[k];
          if (impulses[k].normal != 0.0) {
            apply(row, row.normal, impulses[k].normal, row.minv_jn);
          }
          if (impulses[k].tangent != 0.0) {
            apply(row, row.tangent, impulses[k].tangent, row.minv_jt);
          }
          break;
        }
      }
    }
  }

  // Normal impulses to convergence first, then friction against the settled
  // normal forces; a resting stack then carries exactly zero tangential load.
  for (int it = 0; it < s.iterations; ++it) {
    for (size_t k = 0; k < rows.size(); ++k) {
      ContactRow& row = rows[k];
      ContactImpulse& imp = impulses[k];
      const double vn = row.normal.dot(rel_velocity(row));
      double dj = (row.bias - vn) / row.kn;
      const double jn_new = std::max(0.0, imp.normal + dj);
      dj = jn_new - imp.normal;
      imp.normal = jn_new;
      if (dj != 0.0) apply(row, row.normal, dj, row.minv_jn);
    }
  }
  for (int it = 0; it < s.iterations; ++it) {
    for (size_t k = 0; k < rows.size(); ++k) {
      ContactRow& row = rows[k];
      ContactImpulse& imp = impulses[k];
      const double vt = row.tangent.dot(rel_velocity(row));
      double djt = -vt / row.kt;
      const double max_t = row.mu * imp.normal;
      const double jt_new = std::clamp(imp.tangent + djt, -max_t, max_t);
      djt = jt_new - imp.tangent;
      imp.tangent = jt_new;
      if (djt != 0.0) apply(row, row.tangent, djt, row.minv_jt);
    }
    // Friction torques can re-open the normal constraint; keep it pinned.
    for (size_t k = 0; k < rows.size(); ++k) {
      ContactRow& row = rows[k];
      ContactImpulse& imp = impulses[k];
      const double vn = row.normal.dot(rel_velocity(row));
      double dj = (row.bias - vn) / row.kn;
      const double jn_new = std::max(0.0, imp.normal + dj);
      dj = jn_new - imp.normal;
      imp.normal = jn_new;
      if (dj != 0.0) apply(row, row.normal, dj, row.minv_jn);
    }
  }

  // Convergence diagnostic: remaining normal-velocity violation.
  double residual = 0.0;
  for (const ContactRow& row : rows) {
    const double vn = row.normal.dot(rel_velocity(row));
    residual = std::max(residual, row.bias - vn);
  }
  diag_.last_residual = residual;
  if (residual > s.residual_tol) ++diag_.nonconverged_steps;

  return impulses;
}

void World::step() {
  const double dt = config_.dt;

  if (arm_model_) {
    const JointDynamicsParams& p = arm_model_->dynamics;
    Mat3 m = mass_matrix(*arm_model_, arm_state_.q);
    m.diagonal() += p.armature;
    arm_mass_ldlt_.compute(m);
    arm_mass_valid_ = true;

    Vec3 tau = tau_command_;
    if (pd_mode_) {
      tau = joint_position_controller(*arm_model_, arm_state_, pd_q_target_, pd_kp_,
                                      pd_rho_, &counters_);
      tau += bias_forces(*arm_model_, arm_state_.q, Vec3::Zero(), config_.gravity);
      tau += pd_tau_noise_;
      tau = tau.cwiseMax(-arm_model_->torque_limits).cwiseMin(arm_model_->torque_limits);
    }
    Vec3 rhs = tau - bias_forces(*arm_model_, arm_state_.q, arm_state_.qdot,
                                 config_.gravity);
    for (int i = 0; i < 3; ++i) {
      rhs[i] -= p.viscous_damping[i] * arm_state_.qdot[i];
      rhs[i] -= p.coulomb_friction[i] * smooth_sign(arm_state_.qdot[i], kFrictionVelEps);
    }
    arm_state_.qdot += arm_mass_ldlt_.solve(rhs) * dt;

    const GripperModel& g = arm_model_->gripper;
    const double target = std::clamp(width_target_, 0.0, g.max_width);
    const double wdd =
        g.servo_kp * (target - arm_state_.width) - g.servo_kd * arm_state_.width_dot;
    arm_state_.width_dot = std::clamp(arm_state_.width_dot + wdd * dt,
                                      -g.width_vel_limit, g.width_vel_limit);
  }

  object_.vel.y() -= config_.gravity * dt;

  contacts_ = detect_contacts(config_.solver.speculative_margin);
  impulses_ = solve_contacts(contacts_, dt);

  if (arm_model_) {
    for (int i = 0; i < 3; ++i) {
      const double lim = arm_model_->velocity_limits[i];
      if (arm_state_.qdot[i] > lim || arm_state_.qdot[i] < -lim) {
        arm_state_.qdot[i] = std::clamp(arm_state_.qdot[i], -lim, lim);
        ++counters_.velocity_clamps;
      }
    }
    arm_state_.q += arm_state_.qdot * dt;
    arm_state_.width = std::clamp(arm_state_.width + arm_state_.width_dot * dt, 0.0,
                                  arm_model_->gripper.max_width);
  }

  object_.pose.x += object_.vel.x() * dt;
  object_.pose.y += object_.vel.y() * dt;
  object_.pose.theta = wrap_angle(object_.pose.theta + object_.omega * dt);

  ++diag_.steps;
  check_finite();
}

void World::tick() {
  for (int i = 0; i < config_.substeps; ++i) step();
}

void World::save_state(ArchiveWriter& ar) const {
  ar.put(object_.pose);
  ar.put(object_.vel);
  ar.put(object_.omega);
  ar.put(object_.mass);
  ar.put(object_.inertia);
  ar.put(object_.half_extents);
  ar.put(object_.friction);
  ar.put(terrain_.friction);
  ar.put(ee_friction_);
  ar.put(arm_state_.q);
  ar.put(arm_state_.qdot);
  ar.put(arm_state_.width);
  ar.put(arm_state_.width_dot);
  ar.put(width_target_);
  ar.put(counters_.velocity_clamps);
  ar.put(counters_.torque_clamps);
  ar.put(counters_.joint_ticks);
  ar.put(diag_.steps);
  ar.put(diag_.nonconverged_steps);
  ar.put(diag_.last_residual);
}

void World::load_state(ArchiveReader& ar) {
  object_.pose = ar.get_pose();
  object_.vel = ar.get_vec2();
  object_.omega = ar.get_double();
  object_.mass = ar.get_double();
  object_.inertia = ar.get_double();
  object_.half_extents = ar.get_vec2();
  object_.friction = ar.get_double();
  terrain_.friction = ar.get_double();
  ee_friction_ = ar.get_double();
  arm_state_.q = ar.get_vec3();
  arm_state_.qdot = ar.get_vec3();
  arm_state_.width = ar.get_double();
  arm_state_.width_dot = ar.get_double();
  width_target_ = ar.get_double();
  counters_.velocity_clamps = ar.get_i64();
  counters_.torque_clamps = ar.get_i64();
  counters_.joint_ticks = ar.get_i64();
  diag_.steps = ar.get_i64();
  diag_.nonconverged_steps = ar.get_i64();
  diag_.last_residual = ar.get_double();
}

void World::check_finite() const {
  if (!object_.pose.finite() || !object_.vel.allFinite() || !std::isfinite(object_.omega)) {
    throw std::runtime_error("world step produced a non-finite state for body: object");
  }
  if (arm_model_ &&
      (!arm_state_.q.allFinite() || !arm_state_.qdot.allFinite() ||
       !std::isfinite(arm_state_.width))) {
    throw std::runtime_error("world step produced a non-finite state for body: arm");
  }
}

}  // namespace manip2d
