#pragma once

#include <optional>
#include <vector>

#include "manip2d/archive.hpp"
#include "manip2d/arm.hpp"
#include "manip2d/physics.hpp"

namespace manip2d {

struct WorldConfig {
  double dt = 0.002;       // physics substep, 500 Hz
  int substeps = 5;        // substeps per 100 Hz control tick
  double gravity = 9.81;   // m/s^2, acts in -y
  SolverConfig solver;
};

struct SolverDiagnostics {
  int64_t steps = 0;
  int64_t nonconverged_steps = 0;
  double last_residual = 0.0;
};

/// The simulator's single source of truth: one dynamic box on a terrain,
/// optionally coupled to the arm through fingertip/palm contacts. Contacts
/// are solved at the velocity level with projected Gauss-Seidel in the
/// combined (object twist, joint rate) space, so pushing loads the arm and
/// the arm cannot sweep through the terrain.
class World {
 public:
  World(const RigidBody2& object, const Terrain& terrain, const WorldConfig& config);

  void attach_arm(const ArmModel& model, const JointState& state);
  bool has_arm() const { return arm_model_.has_value(); }

  /// Raw torque command held until the next call (tests, passive rollouts).
  void set_arm_command(const Vec3& tau, double width_target);

  /// Position-control command: the PD law is evaluated every physics substep
  /// from these held targets/gains (plus gravity feedforward and the held
  /// per-tick torque noise), the way GPU simulators drive joint targets.
  void set_arm_pd_command(const Vec3& q_target, const Vec3& kp, const Vec3& rho,
                          double width_target, const Vec3& tau_noise = Vec3::Zero());

  /// One physics substep of dt seconds.
  void step();
  /// One control tick (config.substeps substeps).
  void tick();

  const RigidBody2& object() const { return object_; }
  RigidBody2& object() { return object_; }
  const Terrain& terrain() const { return terrain_; }
  Terrain& terrain() { return terrain_; }
  const JointState& arm_state() const { return arm_state_; }
  JointState& arm_state() { return arm_state_; }
  const ArmModel& arm_model() const { return *arm_model_; }
  const WorldConfig& config() const { return config_; }

  double ee_friction() const { return ee_friction_; }
  void set_ee_friction(double mu) { ee_friction_ = mu; }

  const std::vector<Contact2>& last_contacts() const { return contacts_; }
  const std::vector<ContactImpulse>& last_impulses() const { return impulses_; }
  const SolverDiagnostics& diagnostics() const { return diag_; }
  LimitCounters& counters() { return counters_; }
  const LimitCounters& counters() const { return counters_; }

  Pose2 ee_pose() const;
  Vec2 finger_point_world(FingerPoint p) const;

  /// Object energy plus, when an arm is attached, arm link energy.
  double mechanical_energy() const;

  /// Contact list at the current configuration (object vs terrain, gripper
  /// vs object, gripper vs terrain). The default margin reports touching
  /// pairs; the solver passes the speculative margin.
  std::vector<Contact2> detect_contacts() const;
  std::vector<Contact2> detect_contacts(double margin) const;

  /// Velocity-level impulse solve for the given contacts; mutates object and
  /// arm velocities, returns per-contact accumulated impulses.
  std::vector<ContactImpulse> solve_contacts(const std::vector<Contact2>& contacts,
                                             double dt);

  /// Dynamic state only; the static setup is rebuilt from configuration.
  void save_state(ArchiveWriter& ar) const;
  void load_state(ArchiveReader& ar);

 private:
  void check_finite() const;

  RigidBody2 object_;
  Terrain terrain_;
  WorldConfig config_;

  std::optional<ArmModel> arm_model_;
  JointState arm_state_;
  Vec3 tau_command_ = Vec3::Zero();
  bool pd_mode_ = false;
  Vec3 pd_q_target_ = Vec3::Zero();
  Vec3 pd_kp_ = Vec3::Zero();
  Vec3 pd_rho_ = Vec3::Constant(1.0);
  Vec3 pd_tau_noise_ = Vec3::Zero();
  double width_target_ = 0.04;
  double ee_friction_ = 1.0;

  // Factorization of the joint-space mass matrix for the current substep.
  Eigen::LDLT<Mat3> arm_mass_ldlt_;
  bool arm_mass_valid_ = false;

  std::vector<Contact2> contacts_;
  std::vector<ContactImpulse> impulses_;
  SolverDiagnostics diag_;
  LimitCounters counters_;
};

}  // namespace manip2d
