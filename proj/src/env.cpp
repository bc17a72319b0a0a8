#include "manip2d/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manip2d {

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::card: return "card";
    case Domain::bump: return "bump";
    default: return "wall";
  }
}

Domain domain_from_name(const std::string& name) {
  if (name == "card") return Domain::card;
  if (name == "bump") return Domain::bump;
  if (name == "wall") return Domain::wall;
  throw std::runtime_error("unknown domain: " + name);
}

SceneConfig default_scene(Domain domain) {
  SceneConfig s;
  s.terrain.friction = 0.5;
  s.terrain.workspace_lo = Vec2(-0.25, -0.02);
  s.terrain.workspace_hi = Vec2(0.75, 0.8);
  switch (domain) {
    case Domain::card:
      s.terrain.kind = TerrainKind::flat;
      s.object_half_extents = Vec2(0.035, 0.006);
      s.object_mass = 0.02;
      s.spawn_x_range = Vec2(0.05, 0.45);
      s.goal_x_range = Vec2(0.05, 0.45);
      break;
    case Domain::bump:
      s.terrain.kind = TerrainKind::bump;
      s.terrain.feature_x = 0.25;
      s.terrain.feature_height = 0.03;
      s.terrain.feature_width = 0.08;
      s.object_half_extents = Vec2(0.025, 0.025);
      s.object_mass = 0.025;
      s.spawn_x_range = Vec2(0.34, 0.50);
      s.goal_left_range = Vec2(0.06, 0.18);
      break;
    case Domain::wall:
      s.terrain.kind = TerrainKind::wall;
      s.terrain.feature_x = 0.10;
      s.terrain.feature_height = 0.07;
      s.terrain.feature_width = 0.35;
      s.terrain.workspace_lo = Vec2(-0.30, -0.02);
      s.terrain.workspace_hi = Vec2(0.65, 0.7);
      s.object_half_extents = Vec2(0.015, 0.045);
      s.object_mass = 0.0225;
      s.goal_x_range = Vec2(-0.06, 0.08);
      break;
  }
  return s;
}

Keypoints object_keypoints(const Pose2& pose, const Vec2& half_extents) {
  Keypoints k;
  const auto corners = box_corners(pose, half_extents);
  for (int i = 0; i < kNumKeypoints; ++i) k.u.col(i) = corners[i];
  return k;
}

Keypoints normalize_keypoints(const Keypoints& world, const Vec2& view_lo,
                              const Vec2& view_hi) {
  Keypoints k;
  const Vec2 span = view_hi - view_lo;
  for (int i = 0; i < kNumKeypoints; ++i) {
    k.u.col(i) = (Vec2(world.u.col(i)) - view_lo).cwiseQuotient(span);
  }
  return k;
}

PostContactAction clamp_action(const PostContactAction& a, const ResidualLimit& zeta) {
  PostContactAction c = a;
  const double n = c.delta_pos.norm();
  if (n > zeta.pos) c.delta_pos *= zeta.pos / n;
  c.delta_theta = std::clamp(c.delta_theta, -zeta.rot, zeta.rot);
  c.kp = c.kp.cwiseMax(0.0);
  c.rho = c.rho.cwiseMax(0.5);
  return c;
}

SurfacePoint perimeter_point_normal(const Vec2& half_extents, double s) {
  s -= std::floor(s);  // wrap into [0, 1)
  const double w = 2.0 * half_extents.x();
  const double h = 2.0 * half_extents.y();
  const double perimeter = 2.0 * (w + h);
  double d = s * perimeter;
  if (d < w) return {Vec2(-half_extents.x() + d, -half_extents.y()), Vec2(0, -1)};
  d -= w;
  if (d < h) return {Vec2(half_extents.x(), -half_extents.y() + d), Vec2(1, 0)};
  d -= h;
  if (d < w) return {Vec2(half_extents.x() - d, half_extents.y()), Vec2(0, 1)};
  d -= w;
  return {Vec2(-half_extents.x(), half_extents.y() - d), Vec2(-1, 0)};
}

Vec2 perimeter_point(const Vec2& half_extents, double s) {
  return perimeter_point_normal(half_extents, s).point;
}

Pose2 pre_contact_target_pose(const GripperModel& gripper, const PreContactAction& a,
                              const Pose2& object_pose, const Vec2& half_extents) {
  // The pad's collision circle is placed tangent to the surface point along
  // the outward normal, so any approach angle starts exactly touching.
  const SurfacePoint sp = perimeter_point_normal(half_extents, a.surface_param);
  const Vec2 surface_world = object_pose.transform(sp.point);
  const Vec2 normal_world = object_pose.rotate(sp.normal);
  const double width = std::clamp(a.width, 0.0, gripper.max_width);
  const double r = gripper.collider_radius(a.finger);
  const Vec2 center_target = surface_world + r * normal_world;
  const Vec2 center_local = gripper.collider_center(a.finger, width);
  const Vec2 p = center_target - rot2(a.approach_angle) * center_local;
  return Pose2(p.x(), p.y(), a.approach_angle);
}

TaskInstance sample_task(Domain domain, const SceneConfig& scene, Rng& rng) {
  TaskInstance t;
  const Vec2& half = scene.object_half_extents;
  const Terrain& terrain = scene.terrain;
  switch (domain) {
    case Domain::card: {
      t.object_init = Pose2(rng.uniform(scene.spawn_x_range[0], scene.spawn_x_range[1]),
                            half.y(), 0.0);
      t.goal = Pose2(rng.uniform(scene.goal_x_range[0], scene.goal_x_range[1]),
                     half.y(), 0.0);
      t.match_orientation = true;
      break;
    }
    case Domain::bump: {
      auto resting_half = [&](int flip) {
        return (flip % 2 == 0) ? half.y() : half.x();
      };
      const int flip0 = rng.uniform_int(4);
      t.object_init = Pose2(rng.uniform(scene.spawn_x_range[0], scene.spawn_x_range[1]),
                            resting_half(flip0), flip0 * M_PI / 2.0);
      const int flipg = rng.uniform_int(4);
      const double hg = resting_half(flipg);
      if (rng.bernoulli(0.5)) {
        // Goal on top of the bump.
        const double hw = 0.5 * terrain.feature_width;
        const double margin = std::max(half.x(), half.y());
        const double x = rng.uniform(terrain.feature_x - hw + margin,
                                     terrain.feature_x + hw - margin);
        t.goal = Pose2(x, terrain.feature_height + hg, flipg * M_PI / 2.0);
      } else {
        // Goal on the far (left) side of the bump.
        const double x = rng.uniform(scene.goal_left_range[0], scene.goal_left_range[1]);
        t.goal = Pose2(x, hg, flipg * M_PI / 2.0);
      }
      t.match_orientation = true;
      break;
    }
    case Domain::wall: {
      // Fixed upright pose against the wall face.
      t.object_init = Pose2(terrain.feature_x + half.x() + 5e-4, half.y(), 0.0);
      const double x = rng.uniform(scene.goal_x_range[0], scene.goal_x_range[1]);
      t.goal = Pose2(x, terrain.feature_height + half.x(), M_PI / 2.0);
      t.match_orientation = false;
      break;
    }
  }
  return t;
}

VecX PostObservation::to_vector(const ResidualLimit& norm_zeta) const {
  VecX v(kDim);
  int i = 0;
  for (int j = 0; j < 3; ++j) v[i++] = q[j] / 3.0;
  v[i++] = q[3] / 0.04;
  for (int j = 0; j < 3; ++j) v[i++] = qdot[j] / 3.0;
  v[i++] = qdot[3] / 0.3;
  for (int c = 0; c < kNumKeypoints; ++c) {
    v[i++] = (u_object.u(0, c) - 0.5) * 2.0;
    v[i++] = (u_object.u(1, c) - 0.5) * 2.0;
  }
  for (int c = 0; c < kNumKeypoints; ++c) {
    v[i++] = (u_goal.u(0, c) - 0.5) * 2.0;
    v[i++] = (u_goal.u(1, c) - 0.5) * 2.0;
  }
  v[i++] = (ee.x - 0.25) / 0.6;
  v[i++] = ee.y / 0.6;
  v[i++] = std::cos(ee.theta);
  v[i++] = std::sin(ee.theta);
  v[i++] = a_prev.delta_pos.x() / norm_zeta.pos;
  v[i++] = a_prev.delta_pos.y() / norm_zeta.pos;
  v[i++] = a_prev.delta_theta / norm_zeta.rot;
  for (int j = 0; j < 3; ++j) v[i++] = a_prev.kp[j] / 150.0;
  for (int j = 0; j < 3; ++j) v[i++] = (a_prev.rho[j] - 0.5) / 2.0;
  return v;
}

namespace {

RigidBody2 make_object(const SceneConfig& scene, const Pose2& pose, double mass_mult) {
  RigidBody2 b;
  b.pose = pose;
  b.half_extents = scene.object_half_extents;
  b.mass = scene.object_mass * mass_mult;
  b.inertia = RigidBody2::box_inertia(b.mass, b.half_extents);
  b.friction = scene.object_friction;
  return b;
}

}  // namespace

Environment::Environment(const EnvConfig& config, uint64_t seed)
    : config_(config),
      rng_(seed),
      world_(make_object(config.scene, Pose2(0, config.scene.object_half_extents.y(), 0), 1.0),
             config.scene.terrain, config.world),
      limit_lo_(config.arm.joint_lo),
      limit_hi_(config.arm.joint_hi) {
  phase_ = Phase::finished;
}

void Environment::begin_episode() {
  task_ = sample_task(config_.domain, config_.scene, rng_);

  double table_mult = 1.0, ee_mult = 1.0, mass_mult = 1.0;
  limit_lo_ = config_.arm.joint_lo;
  limit_hi_ = config_.arm.joint_hi;
  if (config_.dr.enabled) {
    const auto& dr = config_.dr;
    table_mult = rng_.uniform(dr.table_friction_range[0], dr.table_friction_range[1]);
    ee_mult = rng_.uniform(dr.ee_friction_range[0], dr.ee_friction_range[1]);
    mass_mult = rng_.uniform(dr.object_mass_range[0], dr.object_mass_range[1]);
    for (int j = 0; j < 3; ++j) {
      const double span = limit_hi_[j] - limit_lo_[j];
      const double gap = std::min(joint_range_gap_, 0.4 * span);
      limit_lo_[j] += rng_.uniform(0.0, gap);
      limit_hi_[j] -= rng_.uniform(0.0, gap);
    }
  }

  Terrain terrain = config_.scene.terrain;
  terrain.friction *= table_mult;
  world_ = World(make_object(config_.scene, task_.object_init, mass_mult), terrain,
                 config_.world);
  world_.set_ee_friction(config_.scene.ee_friction * ee_mult);

  JointState parked;
  parked.q = config_.arm.joint_mid();
  parked.width = config_.arm.gripper.max_width;
  world_.attach_arm(config_.arm, parked);

  Keypoints goal_norm = normalize_keypoints(goal_keypoints_world(), config_.scene.view_lo,
                                            config_.scene.view_hi);
  if (config_.dr.enabled) {
    for (int c = 0; c < kNumKeypoints; ++c) {
      goal_norm.u(0, c) += rng_.normal(0.0, config_.dr.keypoint_noise_std);
      goal_norm.u(1, c) += rng_.normal(0.0, config_.dr.keypoint_noise_std);
    }
  }
  u_goal_noisy_ = goal_norm;

  a_prev_ = PostContactAction{};
  a_prev_.rho = Vec3::Zero();
  step_count_ = 0;
  success_streak_ = 0;
  episode_reward_sum_ = 0.0;
  episode_counters_start_ = world_.counters();
  episode_live_ = true;
  phase_ = Phase::needs_placement;
}

bool Environment::arm_collides(const Vec3& q, double width) const {
  const ArmModel& arm = config_.arm;
  const auto pts = joint_positions(arm, q);
  const auto boxes = world_.terrain().feature_boxes();
  const RigidBody2& obj = world_.object();
  const double link_r = arm.link_radius;
  const double allow_terrain = 2e-3;
  const double allow_object = 3e-3;

  for (int i = 0; i < 3; ++i) {
    if (capsule_halfplane_overlap(pts[i], pts[i + 1], link_r, 0.0, -allow_terrain))
      return true;
    for (const auto& b : boxes) {
      if (capsule_box_overlap(pts[i], pts[i + 1], link_r,
                              Pose2(b.center.x(), b.center.y(), 0.0), b.half,
                              -allow_terrain))
        return true;
    }
    if (capsule_box_overlap(pts[i], pts[i + 1], link_r, obj.pose, obj.half_extents,
                            -allow_object))
      return true;
  }

  const Pose2 ee = forward_kinematics(arm, q);
  const GripperModel& g = arm.gripper;
  for (FingerPoint p : {FingerPoint::left_tip, FingerPoint::right_tip,
                        FingerPoint::mid_palm}) {
    const Vec2 center = ee.transform(g.collider_center(p, width));
    const double r = g.collider_radius(p);
    if (circle_halfplane_overlap(center, r, 0.0, -1e-3)) return true;
    for (const auto& b : boxes) {
      if (circle_box_overlap(center, r, Pose2(b.center.x(), b.center.y(), 0.0), b.half,
                             -1e-3))
        return true;
    }
    // Touching the object is the point of placement; stabbing it is not.
    if (circle_box_overlap(center, r, obj.pose, obj.half_extents, -4e-3)) return true;
  }
  return false;
}

bool Environment::place_ee(const Pose2& target, double width) {
  if (phase_ != Phase::needs_placement) {
    throw std::logic_error("place_ee called outside the placement phase");
  }
  const double w = std::clamp(width, 0.0, config_.arm.gripper.max_width);
  const IkResult ik = solve_ik(config_.arm, target, config_.arm.joint_mid(), config_.ik,
                               &limit_lo_, &limit_hi_);
  if (!ik.ok || arm_collides(ik.q, w)) {
    finish_episode(StepStatus::running, /*placement_failed=*/true);
    return false;
  }
  JointState s;
  s.q = ik.q;
  s.qdot = Vec3::Zero();
  s.width = w;
  s.width_dot = 0.0;
  world_.arm_state() = s;
  width_target_ = w;
  q_target_hold_ = ik.q;
  phase_ = Phase::running;
  return true;
}

bool Environment::apply_pre_contact(const PreContactAction& a) {
  const Pose2 target = pre_contact_target_pose(config_.arm.gripper, a,
                                               world_.object().pose,
                                               world_.object().half_extents);
  return place_ee(target, a.width);
}

bool Environment::place_scripted(EeInit kind) {
  const RigidBody2& obj = world_.object();
  const auto corners = box_corners(obj.pose, obj.half_extents);
  double top = corners[0].y(), right = corners[0].x();
  for (const auto& c : corners) {
    top = std::max(top, c.y());
    right = std::max(right, c.x());
  }
  const double reach = config_.arm.gripper.finger_reach;
  const double w = config_.arm.gripper.max_width;

  static const double offsets[][2] = {{0, 0},       {0, 0.01},  {0, 0.02},
                                      {0.01, 0},    {-0.01, 0}, {0, 0.03},
                                      {0.02, 0.01}, {-0.02, 0.01}};
  for (const auto& off : offsets) {
    Pose2 target;
    if (kind == EeInit::above) {
      target = Pose2(obj.pose.x + off[0], top + 0.01 + reach + off[1], -M_PI / 2.0);
    } else {
      target = Pose2(right + 0.01 + reach + off[1], obj.pose.y + off[0], M_PI);
    }
    const IkResult ik = solve_ik(config_.arm, target, config_.arm.joint_mid(),
                                 config_.ik, &limit_lo_, &limit_hi_);
    if (!ik.ok || arm_collides(ik.q, w)) continue;
    JointState s;
    s.q = ik.q;
    s.width = w;
    world_.arm_state() = s;
    width_target_ = w;
    q_target_hold_ = ik.q;
    phase_ = Phase::running;
    return true;
  }
  finish_episode(StepStatus::running, /*placement_failed=*/true);
  return false;
}

Keypoints Environment::goal_keypoints_world() const {
  return object_keypoints(task_.goal, config_.scene.object_half_extents);
}

Keypoints Environment::object_keypoints_world() const {
  return object_keypoints(world_.object().pose, config_.scene.object_half_extents);
}

PostObservation Environment::observe() {
  PostObservation obs;
  const JointState& s = world_.arm_state();
  obs.q << s.q[0], s.q[1], s.q[2], s.width;
  obs.qdot << s.qdot[0], s.qdot[1], s.qdot[2], s.width_dot;
  if (config_.dr.enabled) {
    const double sn = config_.dr.sensor_noise_std;
    for (int i = 0; i < 4; ++i) {
      obs.q[i] += rng_.normal(0.0, sn);
      obs.qdot[i] += rng_.normal(0.0, sn);
    }
  }
  obs.u_object = normalize_keypoints(object_keypoints_world(), config_.scene.view_lo,
                                     config_.scene.view_hi);
  if (config_.dr.enabled) {
    for (int c = 0; c < kNumKeypoints; ++c) {
      obs.u_object.u(0, c) += rng_.normal(0.0, config_.dr.keypoint_noise_std);
      obs.u_object.u(1, c) += rng_.normal(0.0, config_.dr.keypoint_noise_std);
    }
  }
  obs.u_goal = u_goal_noisy_;
  obs.ee = forward_kinematics(config_.arm, obs.q.head<3>());
  obs.a_prev = a_prev_;
  return obs;
}

VecX Environment::observe_pre() const {
  VecX v(kPreObsDim);
  auto put = [&](int at, const Pose2& p) {
    v[at] = (p.x - 0.25) / 0.6;
    v[at + 1] = p.y / 0.6;
    v[at + 2] = std::cos(p.theta);
    v[at + 3] = std::sin(p.theta);
  };
  put(0, task_.object_init);
  put(4, task_.goal);
  return v;
}

double Environment::compute_reward(const PostContactAction& a) const {
  const RewardConfig& rc = config_.reward;
  const Keypoints ko = object_keypoints_world();
  const Keypoints kg = goal_keypoints_world();

  double term1 = 0.0;
  for (int i = 0; i < kNumKeypoints; ++i) {
    const double dist = (Vec2(ko.u.col(i)) - Vec2(kg.u.col(i))).norm();
    term1 += rc.c1 / (dist + rc.c1);
  }

  const double penalty = rc.kp_penalty_scale * a.kp.norm();

  const double d = pose_position_distance(world_.object().pose, task_.goal);
  const double ang = task_.match_orientation
                         ? pose_angle_distance(world_.object().pose, task_.goal)
                         : 0.0;
  const double bonus = (d < rc.distance_tol && ang < rc.angle_tol) ? rc.c2 : 0.0;

  const Vec2 lf = world_.finger_point_world(FingerPoint::left_tip);
  const Vec2 rf = world_.finger_point_world(FingerPoint::right_tip);
  const double prox = std::max(rc.proximity_floor,
                               (0.5 * (lf + rf) - world_.object().pose.position()).norm());

  return term1 - penalty + bonus + rc.c3 / prox;
}

StepStatus Environment::check_termination() const {
  if (success_streak_ >= config_.episode.success_hold) return StepStatus::success;
  if (!world_.terrain().in_workspace(world_.object().pose.position()))
    return StepStatus::dropped;
  if (step_count_ >= config_.episode.max_steps) return StepStatus::timeout;
  return StepStatus::running;
}

StepResult Environment::step(const PostContactAction& a_raw) {
  if (phase_ != Phase::running) {
    throw std::logic_error("step called while the environment is not running");
  }
  const PostContactAction a = clamp_action(a_raw, zeta_);

  const Pose2 ee = world_.ee_pose();
  const Pose2 target = ee.offset(a.delta_pos.x(), a.delta_pos.y(), a.delta_theta);
  const IkResult ik = solve_ik(config_.arm, target, world_.arm_state().q, config_.ik,
                               &limit_lo_, &limit_hi_);
  if (ik.ok) {
    q_target_hold_ = ik.q;
  }
  // On IK failure the previous target is held for the rest of the step.

  const int ticks = config_.episode.ticks_per_step();
  for (int t = 0; t < ticks; ++t) {
    Vec3 tau_noise = Vec3::Zero();
    if (config_.dr.enabled) {
      for (int j = 0; j < 3; ++j) tau_noise[j] = rng_.normal(0.0, config_.dr.torque_noise_std);
    }
    world_.set_arm_pd_command(q_target_hold_, a.kp, a.rho, width_target_, tau_noise);
    world_.tick();
  }

  ++step_count_;
  const double reward = compute_reward(a);
  episode_reward_sum_ += reward;

  const double d = pose_position_distance(world_.object().pose, task_.goal);
  const double ang = task_.match_orientation
                         ? pose_angle_distance(world_.object().pose, task_.goal)
                         : 0.0;
  if (d < config_.reward.distance_tol && ang < config_.reward.angle_tol) {
    ++success_streak_;
  } else {
    success_streak_ = 0;
  }

  a_prev_ = a;
  const StepStatus status = check_termination();
  if (status != StepStatus::running) {
    finish_episode(status, /*placement_failed=*/false);
  }
  return {reward, status};
}

Pose2 Environment::held_ik_target() const {
  return forward_kinematics(config_.arm, q_target_hold_);
}

namespace {

void put_action(ArchiveWriter& ar, const PostContactAction& a) {
  ar.put(a.delta_pos);
  ar.put(a.delta_theta);
  ar.put(a.kp);
  ar.put(a.rho);
}

PostContactAction get_action(ArchiveReader& ar) {
  PostContactAction a;
  a.delta_pos = ar.get_vec2();
  a.delta_theta = ar.get_double();
  a.kp = ar.get_vec3();
  a.rho = ar.get_vec3();
  return a;
}

}  // namespace

void Environment::save_state(ArchiveWriter& ar) const {
  ar.put(rng_.save());
  ar.put(static_cast<int64_t>(phase_));
  ar.put(episode_live_);
  ar.put(task_.object_init);
  ar.put(task_.goal);
  ar.put(task_.match_orientation);
  ar.put(zeta_.pos);
  ar.put(zeta_.rot);
  ar.put(joint_range_gap_);
  ar.put(limit_lo_);
  ar.put(limit_hi_);
  for (int c = 0; c < kNumKeypoints; ++c) ar.put(Vec2(u_goal_noisy_.u.col(c)));
  put_action(ar, a_prev_);
  ar.put(q_target_hold_);
  ar.put(width_target_);
  ar.put(static_cast<int64_t>(step_count_));
  ar.put(static_cast<int64_t>(success_streak_));
  ar.put(episode_reward_sum_);
  ar.put(episode_counters_start_.velocity_clamps);
  ar.put(episode_counters_start_.torque_clamps);
  ar.put(episode_counters_start_.joint_ticks);
  world_.save_state(ar);
}

void Environment::load_state(ArchiveReader& ar) {
  rng_.load(ar.get_string());
  phase_ = static_cast<Phase>(ar.get_i64());
  episode_live_ = ar.get_bool();
  task_.object_init = ar.get_pose();
  task_.goal = ar.get_pose();
  task_.match_orientation = ar.get_bool();
  zeta_.pos = ar.get_double();
  zeta_.rot = ar.get_double();
  joint_range_gap_ = ar.get_double();
  limit_lo_ = ar.get_vec3();
  limit_hi_ = ar.get_vec3();
  for (int c = 0; c < kNumKeypoints; ++c) u_goal_noisy_.u.col(c) = ar.get_vec2();
  a_prev_ = get_action(ar);
  q_target_hold_ = ar.get_vec3();
  width_target_ = ar.get_double();
  step_count_ = static_cast<int>(ar.get_i64());
  success_streak_ = static_cast<int>(ar.get_i64());
  episode_reward_sum_ = ar.get_double();
  episode_counters_start_.velocity_clamps = ar.get_i64();
  episode_counters_start_.torque_clamps = ar.get_i64();
  episode_counters_start_.joint_ticks = ar.get_i64();
  // Rebuild the world shell, then overwrite its dynamic state.
  world_ = World(make_object(config_.scene, task_.object_init, 1.0),
                 config_.scene.terrain, config_.world);
  JointState parked;
  world_.attach_arm(config_.arm, parked);
  world_.load_state(ar);
}

void Environment::finish_episode(StepStatus outcome, bool placement_failed) {
  record_.task = task_;
  record_.outcome = outcome;
  record_.placement_failed = placement_failed;
  record_.reward_sum = episode_reward_sum_;
  record_.steps = step_count_;
  const LimitCounters& now = world_.counters();
  record_.velocity_clamps = now.velocity_clamps - episode_counters_start_.velocity_clamps;
  record_.torque_clamps = now.torque_clamps - episode_counters_start_.torque_clamps;
  record_.joint_ticks = now.joint_ticks - episode_counters_start_.joint_ticks;
  episode_live_ = false;
  phase_ = Phase::finished;
}

}  // namespace manip2d
