#pragma once

#include <array>
#include <optional>

#include "manip2d/pose.hpp"

namespace manip2d {

enum class FingerPoint { left_tip = 0, right_tip = 1, mid_palm = 2 };
constexpr int kNumFingerPoints = 3;

/// Parallel-jaw gripper hanging off the last link. Points are expressed in
/// the end-effector frame (+x along the approach direction). The labeled
/// contact pads sit on the leading faces; the collision circles are recessed
/// by their radius so a pad placed on a surface starts exactly touching.
struct GripperModel {
  double finger_reach = 0.065;  // wrist to fingertip pad
  double palm_reach = 0.025;    // wrist to palm face
  double tip_radius = 0.006;
  double palm_radius = 0.010;
  double max_width = 0.04;
  double servo_kp = 2500.0;  // width servo stiffness, 1/s^2
  double servo_kd = 100.0;
  double width_vel_limit = 0.3;

  /// Labeled pad point in the EE frame at gripper width w.
  Vec2 pad_point(FingerPoint p, double w) const {
    switch (p) {
      case FingerPoint::left_tip: return Vec2(finger_reach, 0.5 * w);
      case FingerPoint::right_tip: return Vec2(finger_reach, -0.5 * w);
      default: return Vec2(palm_reach, 0.0);
    }
  }

  /// Center of the collision circle backing a pad.
  Vec2 collider_center(FingerPoint p, double w) const {
    const double r = (p == FingerPoint::mid_palm) ? palm_radius : tip_radius;
    return pad_point(p, w) - Vec2(r, 0.0);
  }

  double collider_radius(FingerPoint p) const {
    return (p == FingerPoint::mid_palm) ? palm_radius : tip_radius;
  }
};

struct JointDynamicsParams {
  Vec3 coulomb_friction = Vec3(0.4, 0.3, 0.15);   // N*m
  Vec3 viscous_damping = Vec3(0.8, 0.5, 0.2);     // N*m*s/rad
  Vec3 armature = Vec3(0.05, 0.03, 0.01);         // kg*m^2
};

/// Three-link planar serial arm with uniform-rod links.
struct ArmModel {
  Vec3 link_lengths = Vec3(0.30, 0.26, 0.18);
  Vec3 link_masses = Vec3(0.5, 0.35, 0.18);
  Vec3 joint_lo = Vec3(-2.9, -2.7, -2.7);
  Vec3 joint_hi = Vec3(2.9, 2.7, 2.7);
  Vec3 velocity_limits = Vec3(2.5, 2.5, 3.0);  // rad/s
  Vec3 torque_limits = Vec3(25.0, 15.0, 6.0);  // N*m
  Pose2 base_pose = Pose2(0.25, 0.45, 0.0);
  double link_radius = 0.02;  // collision capsule radius for placement checks
  GripperModel gripper;
  JointDynamicsParams dynamics;

  Vec3 link_inertias() const {
    Vec3 inertias;
    for (int i = 0; i < 3; ++i) {
      inertias[i] = link_masses[i] * link_lengths[i] * link_lengths[i] / 12.0;
    }
    return inertias;
  }

  Vec3 joint_mid() const { return 0.5 * (joint_lo + joint_hi); }

  bool within_limits(const Vec3& q, double tol = 1e-9) const {
    for (int i = 0; i < 3; ++i) {
      if (q[i] < joint_lo[i] - tol || q[i] > joint_hi[i] + tol) return false;
    }
    return true;
  }
};

struct JointState {
  Vec3 q = Vec3::Zero();
  Vec3 qdot = Vec3::Zero();
  double width = 0.04;
  double width_dot = 0.0;
};

/// Clamp events recorded by the controller and integrator; the curriculum
/// reads these to judge joint-limit compliance.
struct LimitCounters {
  int64_t velocity_clamps = 0;
  int64_t torque_clamps = 0;
  int64_t joint_ticks = 0;  // joints * control ticks observed

  void reset() { *this = LimitCounters{}; }
  double clamp_rate() const {
    return joint_ticks > 0
               ? static_cast<double>(velocity_clamps + torque_clamps) / joint_ticks
               : 0.0;
  }
};

Pose2 forward_kinematics(const ArmModel& model, const Vec3& q);

/// Joint origins (base, elbow, wrist base) and EE point, world frame.
std::array<Vec2, 4> joint_positions(const ArmModel& model, const Vec3& q);

/// Rows (vx, vy, omega), columns per joint rate.
Mat3 jacobian(const ArmModel& model, const Vec3& q);

/// Translational Jacobian of a point rigidly attached to the EE frame.
Eigen::Matrix<double, 2, 3> point_jacobian(const ArmModel& model, const Vec3& q,
                                           const Vec2& point_in_ee);

struct IkConfig {
  double damping = 1e-3;
  int max_iterations = 200;
  double step_clamp = 0.2;       // rad per joint per iteration
  double position_tol = 1e-4;    // m
  double orientation_tol = 1e-3; // rad
};

struct IkResult {
  bool ok = false;
  Vec3 q = Vec3::Zero();
  double position_residual = 0.0;
  double orientation_residual = 0.0;
  int iterations = 0;
};

/// Damped-least-squares IK for the planar pose target. Tries the seed, then
/// the two analytic elbow branches as fallback seeds. Joint limits may be
/// overridden (domain randomization narrows them per episode).
IkResult solve_ik(const ArmModel& model, const Pose2& target, const Vec3& q_seed,
                  const IkConfig& config = IkConfig{},
                  const Vec3* limit_lo = nullptr, const Vec3* limit_hi = nullptr);

/// tau_i = kp_i (q_target_i - q_i) - kd_i qdot_i with kd = rho sqrt(kp),
/// rho clamped to >= 0.5, result clamped to torque limits.
Vec3 joint_position_controller(const ArmModel& model, const JointState& state,
                               const Vec3& q_target, const Vec3& kp, const Vec3& rho,
                               LimitCounters* counters = nullptr);

inline double smooth_sign(double x, double eps) { return std::tanh(x / eps); }
constexpr double kFrictionVelEps = 0.01;  // rad/s

Vec3 inverse_dynamics(const ArmModel& model, const Vec3& q, const Vec3& qdot,
                      const Vec3& qddot, double gravity);

/// Joint-space mass matrix (without armature).
Mat3 mass_matrix(const ArmModel& model, const Vec3& q);

/// Coriolis/centrifugal plus gravity torques.
Vec3 bias_forces(const ArmModel& model, const Vec3& q, const Vec3& qdot,
                 double gravity);

/// Joint accelerations under applied torques, including armature, viscous
/// damping, and smoothed Coulomb friction.
Vec3 joint_accel(const ArmModel& model, const JointDynamicsParams& params,
                 const Vec3& q, const Vec3& qdot, const Vec3& tau, double gravity);

/// One semi-implicit Euler step of the free arm (no contacts); velocity
/// limit clamps are counted.
JointState arm_dynamics_step(const ArmModel& model, const JointDynamicsParams& params,
                             const JointState& state, const Vec3& tau,
                             double width_target, double dt, double gravity,
                             LimitCounters* counters = nullptr);

/// Scalar dynamics of one joint with the others rigidly held; used by the
/// system-identification rig.
double single_joint_accel(const ArmModel& model, const JointDynamicsParams& params,
                          const Vec3& q, double qdot_j, double tau_j, int joint,
                          double gravity);

double arm_mechanical_energy(const ArmModel& model, const JointDynamicsParams& params,
                             const JointState& state, double gravity);

}  // namespace manip2d
