#include "manip2d/physics.hpp"

#include <algorithm>
#include <limits>

namespace manip2d {

std::array<Vec2, 4> box_corners(const Pose2& pose, const Vec2& half) {
  const Mat2 r = pose.rotation();
  const Vec2 p = pose.position();
  const Vec2 ex = r.col(0) * half.x();
  const Vec2 ey = r.col(1) * half.y();
  return {p - ex - ey, p + ex - ey, p + ex + ey, p - ex + ey};
}

void collide_box_halfplane(const Pose2& pose, const Vec2& half, double ground_y,
                           double touch_tol, std::vector<Contact2>& out) {
  const auto corners = box_corners(pose, half);
  for (int k = 0; k < 4; ++k) {
    const Vec2& c = corners[k];
    const double sep = c.y() - ground_y;
    if (sep <= touch_tol) {
      Contact2 contact;
      contact.point = c;
      contact.normal = Vec2::UnitY();
      contact.separation = sep;
      contact.depth = std::max(0.0, -sep);
      contact.feature = static_cast<int16_t>(k);
      out.push_back(contact);
    }
  }
}

namespace {

struct Face {
  Vec2 point;   // center of the face
  Vec2 normal;  // outward
  Vec2 tangent; // along the face
  double half_len;
};

Face box_face(const Pose2& pose, const Vec2& half, int axis, double sign) {
  const Mat2 r = pose.rotation();
  Face f;
  f.normal = r.col(axis) * sign;
  f.tangent = r.col(1 - axis);
  f.point = pose.position() + f.normal * half[axis];
  f.half_len = half[1 - axis];
  return f;
}

}  // namespace

void collide_box_box(const Pose2& pose_a, const Vec2& half_a, const Pose2& pose_b,
                     const Vec2& half_b, double touch_tol, std::vector<Contact2>& out) {
  const Mat2 ra = pose_a.rotation();
  const Mat2 rb = pose_b.rotation();
  const Vec2 d = pose_b.position() - pose_a.position();

  // Candidate axes: the face normals of both boxes.
  double best_overlap = std::numeric_limits<double>::infinity();
  int best_axis = -1;     // 0,1: a's axes; 2,3: b's axes
  double best_sign = 1.0; // axis direction pointing from a toward b

  for (int i = 0; i < 4; ++i) {
    const bool on_a = i < 2;
    const Vec2 axis = on_a ? Vec2(ra.col(i)) : Vec2(rb.col(i - 2));
    const double proj_a = half_a.x() * std::abs(axis.dot(ra.col(0))) +
                          half_a.y() * std::abs(axis.dot(ra.col(1)));
    const double proj_b = half_b.x() * std::abs(axis.dot(rb.col(0))) +
                          half_b.y() * std::abs(axis.dot(rb.col(1)));
    const double dist = axis.dot(d);
    const double overlap = proj_a + proj_b - std::abs(dist);
    if (overlap < -touch_tol) return;  // separating axis
    if (overlap < best_overlap) {
      best_overlap = overlap;
      best_axis = i;
      best_sign = dist >= 0.0 ? 1.0 : -1.0;
    }
  }

  // Reference face on the box owning the axis; incident face on the other.
  const bool ref_is_a = best_axis < 2;
  const Pose2& ref_pose = ref_is_a ? pose_a : pose_b;
  const Vec2& ref_half = ref_is_a ? half_a : half_b;
  const Pose2& inc_pose = ref_is_a ? pose_b : pose_a;
  const Vec2& inc_half = ref_is_a ? half_b : half_a;
  const int ref_axis = ref_is_a ? best_axis : best_axis - 2;
  const double ref_sign = ref_is_a ? best_sign : -best_sign;

  const Face ref = box_face(ref_pose, ref_half, ref_axis, ref_sign);

  // Incident face: the one most anti-parallel to the reference normal.
  const Mat2 ri = inc_pose.rotation();
  int inc_axis = 0;
  double inc_sign = 1.0;
  double min_dot = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    for (double sign : {1.0, -1.0}) {
      const double dot = ref.normal.dot(Vec2(ri.col(axis)) * sign);
      if (dot < min_dot) {
        min_dot = dot;
        inc_axis = axis;
        inc_sign = sign;
      }
    }
  }
  const Face inc = box_face(inc_pose, inc_half, inc_axis, inc_sign);

  // Clip the incident face segment to the reference face extent.
  Vec2 p0 = inc.point - inc.tangent * inc.half_len;
  Vec2 p1 = inc.point + inc.tangent * inc.half_len;
  for (double side : {1.0, -1.0}) {
    const Vec2 plane_n = ref.tangent * side;
    const double limit = plane_n.dot(ref.point) + ref.half_len;
    const double d0 = plane_n.dot(p0) - limit;
    const double d1 = plane_n.dot(p1) - limit;
    if (d0 > 0.0 && d1 > 0.0) return;  // fully outside, degenerate
    if (d0 > 0.0 || d1 > 0.0) {
      const Vec2 isect = p0 + (p1 - p0) * (d0 / (d0 - d1));
      if (d0 > 0.0) p0 = isect; else p1 = isect;
    }
  }

  // Keep clipped points at or below the reference face.
  const Vec2 normal_ba = ref_is_a ? Vec2(-ref.normal) : Vec2(ref.normal);
  const bool degenerate = (p1 - p0).squaredNorm() < 1e-18;
  int point_index = 0;
  for (const Vec2& p : {p0, p1}) {
    const double sep = ref.normal.dot(p - ref.point);
    if (sep <= touch_tol) {
      Contact2 contact;
      contact.point = p;
      contact.normal = normal_ba;  // pushes body a away from body b
      contact.separation = sep;
      contact.depth = std::max(0.0, -sep);
      contact.feature = static_cast<int16_t>(16 + 2 * best_axis + point_index);
      out.push_back(contact);
    }
    ++point_index;
    if (degenerate) break;
  }
}

void collide_circle_box(const Vec2& center, double radius, const Pose2& pose,
                        const Vec2& half, double touch_tol, std::vector<Contact2>& out) {
  const Vec2 local = pose.inverse_transform(center);
  const Vec2 clamped(std::clamp(local.x(), -half.x(), half.x()),
                     std::clamp(local.y(), -half.y(), half.y()));

  Contact2 contact;
  if ((local - clamped).squaredNorm() > 1e-24) {
    // Center outside the box.
    const Vec2 closest = pose.transform(clamped);
    const double dist = (center - closest).norm();
    if (dist > radius + touch_tol) return;
    contact.point = closest;
    contact.normal = (closest - center) / std::max(dist, 1e-12);
    contact.separation = dist - radius;
    contact.depth = std::max(0.0, -contact.separation);
  } else {
    // Center inside: push out along the nearest face.
    const Vec2 gap = half - local.cwiseAbs();
    int axis = gap.x() < gap.y() ? 0 : 1;
    const double sign = local[axis] >= 0.0 ? 1.0 : -1.0;
    Vec2 n_local = Vec2::Zero();
    n_local[axis] = sign;
    contact.normal = pose.rotate(n_local);
    Vec2 surf_local = local;
    surf_local[axis] = sign * half[axis];
    contact.point = pose.transform(surf_local);
    contact.depth = radius + gap[axis];
    contact.separation = -contact.depth;
  }
  out.push_back(contact);
}

bool circle_halfplane_overlap(const Vec2& center, double radius, double ground_y,
                              double tol) {
  return center.y() - radius - ground_y <= tol;
}

bool circle_box_overlap(const Vec2& center, double radius, const Pose2& pose,
                        const Vec2& half, double tol) {
  const Vec2 local = pose.inverse_transform(center);
  const Vec2 clamped(std::clamp(local.x(), -half.x(), half.x()),
                     std::clamp(local.y(), -half.y(), half.y()));
  return (local - clamped).norm() - radius <= tol;
}

bool capsule_halfplane_overlap(const Vec2& p0, const Vec2& p1, double radius,
                               double ground_y, double tol) {
  return std::min(p0.y(), p1.y()) - radius - ground_y <= tol;
}

bool capsule_box_overlap(const Vec2& p0, const Vec2& p1, double radius,
                         const Pose2& pose, const Vec2& half, double tol) {
  // Sampled segment query; fine for placement checks.
  const int samples = 8;
  for (int i = 0; i <= samples; ++i) {
    const Vec2 p = p0 + (p1 - p0) * (static_cast<double>(i) / samples);
    if (circle_box_overlap(p, radius, pose, half, tol)) return true;
  }
  return false;
}

}  // namespace manip2d
