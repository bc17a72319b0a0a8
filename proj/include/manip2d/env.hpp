#pragma once

#include <optional>
#include <string>

#include "manip2d/archive.hpp"
#include "manip2d/rng.hpp"
#include "manip2d/world.hpp"

namespace manip2d {

enum class Domain { card, bump, wall };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& name);

/// Task geometry: where objects spawn, where goals live, and the camera-like
/// view box that normalizes keypoints into [0,1]^2.
struct SceneConfig {
  Terrain terrain;
  Vec2 object_half_extents = Vec2(0.035, 0.006);
  double object_mass = 0.02;
  double object_friction = 0.5;
  double ee_friction = 1.0;
  Vec2 spawn_x_range = Vec2(0.05, 0.45);   // initial object center x
  Vec2 goal_x_range = Vec2(0.05, 0.45);    // card: goal x on the table
  Vec2 goal_left_range = Vec2(0.06, 0.18); // bump: goal zone left of the bump
  Vec2 view_lo = Vec2(-0.25, -0.1);
  Vec2 view_hi = Vec2(0.75, 0.9);
};

SceneConfig default_scene(Domain domain);

struct TaskInstance {
  Pose2 object_init;
  Pose2 goal;
  bool match_orientation = true;
};

constexpr int kNumKeypoints = 4;

/// Object bounding-box corners, fixed order (-x-y, +x-y, +x+y, -x+y) in the
/// object frame.
struct Keypoints {
  Eigen::Matrix<double, 2, kNumKeypoints> u;
};

/// World-frame corner positions in meters.
Keypoints object_keypoints(const Pose2& pose, const Vec2& half_extents);
/// Normalized view coordinates.
Keypoints normalize_keypoints(const Keypoints& world, const Vec2& view_lo,
                              const Vec2& view_hi);

struct PreContactAction {
  FingerPoint finger = FingerPoint::left_tip;  // c_f
  double surface_param = 0.0;                  // c_o in [0,1), wraps
  double approach_angle = 0.0;                 // R_E
  double width = 0.04;                         // l in [0, 0.04]
};

struct PostContactAction {
  Vec2 delta_pos = Vec2::Zero();
  double delta_theta = 0.0;
  Vec3 kp = Vec3::Zero();
  Vec3 rho = Vec3::Constant(1.0);
};

struct ResidualLimit {
  double pos = 0.06;  // meters per policy step
  double rot = 0.1;   // radians per policy step
};

PostContactAction clamp_action(const PostContactAction& a, const ResidualLimit& zeta);

struct RewardConfig {
  double c1 = 0.02;
  double c2 = 1000.0;
  double c3 = 0.03;
  double c4 = -100.0;
  double distance_tol = 0.01;     // d_bar, meters
  double angle_tol = 0.1;         // theta_bar, radians
  double kp_penalty_scale = 0.001;
  double proximity_floor = 0.01;  // meters, floors the C3 denominator
};

struct EpisodeConfig {
  int update_interval = 32;   // H, policy steps between PPO updates
  int max_steps = 300;        // L, policy steps
  int policy_hz = 10;
  int control_hz = 100;
  int success_hold = 5;       // consecutive policy steps inside tolerance
  int ticks_per_step() const { return control_hz / policy_hz; }
};

struct DomainRandomizationConfig {
  bool enabled = false;
  Vec2 table_friction_range = Vec2(0.7, 1.3);  // multiplicative
  Vec2 ee_friction_range = Vec2(0.9, 1.1);     // multiplicative
  Vec2 object_mass_range = Vec2(0.7, 1.3);     // multiplicative
  double torque_noise_std = 0.03;    // N*m, per joint per control tick
  double keypoint_noise_std = 0.03;  // per normalized coordinate
  double sensor_noise_std = 0.01;    // on q and qdot
  double initial_joint_range_gap = 0.2;  // radians, narrowed by the curriculum
};

/// Point on the box boundary at perimeter fraction s (counter-clockwise from
/// the -x-y corner), in the body frame.
Vec2 perimeter_point(const Vec2& half_extents, double s);

struct SurfacePoint {
  Vec2 point;
  Vec2 normal;  // outward
};
SurfacePoint perimeter_point_normal(const Vec2& half_extents, double s);

/// Desired EE pose that places the labeled gripper pad on the object surface
/// point c_o with approach angle R_E and width l.
Pose2 pre_contact_target_pose(const GripperModel& gripper, const PreContactAction& a,
                              const Pose2& object_pose, const Vec2& half_extents);

enum class StepStatus { running, success, dropped, timeout };

struct PostObservation {
  Vec4 q;             // joints + finger width (sensor-noised)
  Vec4 qdot;
  Keypoints u_object; // normalized, noised
  Keypoints u_goal;   // normalized, per-episode noise
  Pose2 ee;
  PostContactAction a_prev;

  static constexpr int kDim = 4 + 4 + 2 * kNumKeypoints + 2 * kNumKeypoints + 4 + 9;
  VecX to_vector(const ResidualLimit& norm_zeta) const;
};
constexpr int kPostObsDim = PostObservation::kDim;
constexpr int kPreObsDim = 8;

struct EnvConfig {
  Domain domain = Domain::card;
  SceneConfig scene;
  RewardConfig reward;
  EpisodeConfig episode;
  DomainRandomizationConfig dr;
  WorldConfig world;
  ArmModel arm;
  IkConfig ik;
};

TaskInstance sample_task(Domain domain, const SceneConfig& scene, Rng& rng);

enum class EeInit { above, at_right };

struct StepResult {
  double reward = 0.0;
  StepStatus status = StepStatus::running;
};

struct EpisodeRecord {
  TaskInstance task;
  StepStatus outcome = StepStatus::running;
  bool placement_failed = false;
  double reward_sum = 0.0;  // post-contact rewards only
  int steps = 0;
  int64_t velocity_clamps = 0;
  int64_t torque_clamps = 0;
  int64_t joint_ticks = 0;
};

/// One task episode's worth of simulation state. Owns its world and RNG
/// stream; many environments step independently in parallel.
class Environment {
 public:
  Environment(const EnvConfig& config, uint64_t seed);

  enum class Phase { needs_placement, running, finished };

  /// Samples a task and DR draws, resets the world. Phase: needs_placement.
  void begin_episode();

  /// Pre-contact placement; on failure the episode is over (reward C4) and
  /// the phase returns to needs_placement for a fresh episode.
  bool apply_pre_contact(const PreContactAction& a);
  /// Direct EE placement (student policy path and scripted ablations).
  bool place_ee(const Pose2& target, double width);
  bool place_scripted(EeInit kind);

  PostObservation observe();
  VecX observe_pre() const;

  StepResult step(const PostContactAction& a);

  double compute_reward(const PostContactAction& a) const;
  StepStatus check_termination() const;

  Phase phase() const { return phase_; }
  const TaskInstance& task() const { return task_; }
  const World& world() const { return world_; }
  World& world() { return world_; }
  const EnvConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  int steps_taken() const { return step_count_; }
  double episode_reward_sum() const { return episode_reward_sum_; }
  const EpisodeRecord& last_record() const { return record_; }
  void set_residual_limit(const ResidualLimit& zeta) { zeta_ = zeta; }
  const ResidualLimit& residual_limit() const { return zeta_; }
  void set_joint_range_gap(double gap) { joint_range_gap_ = gap; }
  const Vec3& effective_joint_lo() const { return limit_lo_; }
  const Vec3& effective_joint_hi() const { return limit_hi_; }
  const PostContactAction& prev_action() const { return a_prev_; }
  Pose2 held_ik_target() const;

  /// True keypoint geometry used by rewards (noise-free, meters).
  Keypoints goal_keypoints_world() const;
  Keypoints object_keypoints_world() const;

  /// Full episode state, sufficient to resume bit-exactly.
  void save_state(ArchiveWriter& ar) const;
  void load_state(ArchiveReader& ar);

 private:
  void finish_episode(StepStatus outcome, bool placement_failed);
  bool arm_collides(const Vec3& q, double width) const;

  EnvConfig config_;
  Rng rng_;
  Phase phase_ = Phase::needs_placement;
  bool episode_live_ = false;

  World world_;
  TaskInstance task_;
  ResidualLimit zeta_;
  double joint_range_gap_ = 0.0;
  Vec3 limit_lo_, limit_hi_;

  Keypoints u_goal_noisy_;  // cached per episode
  PostContactAction a_prev_;
  Vec3 q_target_hold_ = Vec3::Zero();
  double width_target_ = 0.04;

  int step_count_ = 0;
  int success_streak_ = 0;
  double episode_reward_sum_ = 0.0;
  LimitCounters episode_counters_start_;
  EpisodeRecord record_;
};

}  // namespace manip2d
