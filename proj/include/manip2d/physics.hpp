#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "manip2d/pose.hpp"

namespace manip2d {

/// Planar rigid body with a box collision shape.
struct RigidBody2 {
  Pose2 pose;
  Vec2 vel = Vec2::Zero();
  double omega = 0.0;
  double mass = 1.0;
  double inertia = 1.0;
  Vec2 half_extents = Vec2(0.05, 0.05);
  double friction = 0.5;

  double inv_mass() const { return 1.0 / mass; }
  double inv_inertia() const { return 1.0 / inertia; }

  /// Inertia of a uniform box of this mass and extent.
  static double box_inertia(double mass, const Vec2& half) {
    return mass * (4.0 * half.x() * half.x() + 4.0 * half.y() * half.y()) / 12.0;
  }

  double kinetic_energy() const {
    return 0.5 * mass * vel.squaredNorm() + 0.5 * inertia * omega * omega;
  }
};

enum class TerrainKind { flat, bump, wall };

/// Static environment: a table surface at y = 0 plus an optional feature
/// (a bump sitting on the table, or an elevated step for the wall task).
/// The workspace box bounds where the object is considered in play.
struct Terrain {
  TerrainKind kind = TerrainKind::flat;
  double feature_height = 0.0;
  double feature_width = 0.0;
  double feature_x = 0.0;  // bump: center x; wall: x of the vertical face (step extends left)
  double friction = 0.5;
  Vec2 workspace_lo = Vec2(-0.35, -0.02);
  Vec2 workspace_hi = Vec2(0.85, 1.0);

  struct StaticBox {
    Vec2 center;
    Vec2 half;
  };

  std::vector<StaticBox> feature_boxes() const {
    std::vector<StaticBox> boxes;
    if (kind == TerrainKind::bump) {
      boxes.push_back({Vec2(feature_x, 0.5 * feature_height),
                       Vec2(0.5 * feature_width, 0.5 * feature_height)});
    } else if (kind == TerrainKind::wall) {
      boxes.push_back({Vec2(feature_x - 0.5 * feature_width, 0.5 * feature_height),
                       Vec2(0.5 * feature_width, 0.5 * feature_height)});
    }
    return boxes;
  }

  bool in_workspace(const Vec2& p) const {
    return p.x() >= workspace_lo.x() && p.x() <= workspace_hi.x() &&
           p.y() >= workspace_lo.y() && p.y() <= workspace_hi.y();
  }
};

/// Identifiers of the collidable features in a world.
enum BodyId : int8_t {
  kBodyObject = 0,
  kBodyTerrain = 1,
  kBodyLeftTip = 2,
  kBodyRightTip = 3,
  kBodyPalm = 4,
};

struct Contact2 {
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitY();  // points from body_b toward body_a
  double depth = 0.0;       // penetration, >= 0
  double separation = 0.0;  // signed gap along the normal; -depth when penetrating
  int8_t body_a = kBodyObject;
  int8_t body_b = kBodyTerrain;
  int16_t feature = 0;  // stable id within a body pair, for warm starting
  double combined_friction = 0.5;
};

struct ContactImpulse {
  double normal = 0.0;
  double tangent = 0.0;
};

struct SolverConfig {
  int iterations = 16;
  double baumgarte = 0.2;
  double slop = 5e-4;                // meters of tolerated penetration
  double max_correction_vel = 0.05;  // cap on Baumgarte bias velocity, m/s
  double touch_tolerance = 1e-4;     // separation still reported as touching
  double speculative_margin = 8e-3;  // contacts fed to the solver early so
                                     // bodies stop at the surface instead of
                                     // tunneling and being pushed back out
  double residual_tol = 1e-5;        // convergence check on normal velocity error
};

/// Corners in the body frame order (-x-y, +x-y, +x+y, -x+y).
std::array<Vec2, 4> box_corners(const Pose2& pose, const Vec2& half);

/// Box vs. the table half-plane y <= ground_y. Appends one contact per
/// corner at or below the surface (within touch tolerance).
void collide_box_halfplane(const Pose2& pose, const Vec2& half, double ground_y,
                           double touch_tol, std::vector<Contact2>& out);

/// OBB vs. OBB via separating axes with reference-face clipping; up to two
/// points. Normal points from b toward a.
void collide_box_box(const Pose2& pose_a, const Vec2& half_a, const Pose2& pose_b,
                     const Vec2& half_b, double touch_tol, std::vector<Contact2>& out);

/// Circle (body b) vs. OBB (body a). Normal points from the circle toward
/// the box.
void collide_circle_box(const Vec2& center, double radius, const Pose2& pose,
                        const Vec2& half, double touch_tol, std::vector<Contact2>& out);

bool circle_halfplane_overlap(const Vec2& center, double radius, double ground_y,
                              double tol);
bool circle_box_overlap(const Vec2& center, double radius, const Pose2& pose,
                        const Vec2& half, double tol);
/// Capsule (segment + radius) overlap queries, used for placement checks.
bool capsule_halfplane_overlap(const Vec2& p0, const Vec2& p1, double radius,
                               double ground_y, double tol);
bool capsule_box_overlap(const Vec2& p0, const Vec2& p1, double radius,
                         const Pose2& pose, const Vec2& half, double tol);

inline double combine_friction(double mu_a, double mu_b) {
  return std::sqrt(mu_a * mu_b);
}

}  // namespace manip2d
