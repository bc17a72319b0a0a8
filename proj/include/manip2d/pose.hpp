#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace manip2d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline Mat2 rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// z x v for planar cross products.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Planar rigid transform. theta is kept in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double px, double py, double ptheta) : x(px), y(py), theta(wrap_angle(ptheta)) {}

  Vec2 position() const { return Vec2(x, y); }
  Mat2 rotation() const { return rot2(theta); }

  Vec2 transform(const Vec2& local) const { return position() + rotation() * local; }
  Vec2 rotate(const Vec2& local) const { return rotation() * local; }
  Vec2 inverse_transform(const Vec2& world) const {
    return rotation().transpose() * (world - position());
  }

  /// this composed with a world-frame increment (dx, dy, dtheta).
  Pose2 offset(double dx, double dy, double dtheta) const {
    return Pose2(x + dx, y + dy, theta + dtheta);
  }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
  }
};

inline double pose_position_distance(const Pose2& a, const Pose2& b) {
  return (a.position() - b.position()).norm();
}

inline double pose_angle_distance(const Pose2& a, const Pose2& b) {
  return std::abs(wrap_angle(a.theta - b.theta));
}

}  // namespace manip2d
