#include <doctest.h>

#include <cmath>

#include "manip2d/rng.hpp"
#include "manip2d/world.hpp"

using namespace manip2d;

namespace {

RigidBody2 make_box(double x, double y, double theta, const Vec2& half, double mass,
                    double mu = 0.5) {
  RigidBody2 b;
  b.pose = Pose2(x, y, theta);
  b.half_extents = half;
  b.mass = mass;
  b.inertia = RigidBody2::box_inertia(mass, half);
  b.friction = mu;
  return b;
}

Terrain flat_terrain(double mu = 0.5) {
  Terrain t;
  t.kind = TerrainKind::flat;
  t.friction = mu;
  return t;
}

World make_world(const RigidBody2& obj, const Terrain& terrain,
                 double gravity = 9.81) {
  WorldConfig cfg;
  cfg.gravity = gravity;
  return World(obj, terrain, cfg);
}

}  // namespace

TEST_CASE("box resting exactly on the table reports two touching contacts") {
  const Vec2 half(0.05, 0.02);
  World w = make_world(make_box(0.1, half.y(), 0.0, half, 0.1), flat_terrain());
  const auto contacts = w.detect_contacts();
  REQUIRE(contacts.size() == 2);
  for (const auto& c : contacts) {
    CHECK(c.depth == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.normal.y() == doctest::Approx(1.0));
    CHECK(std::abs(c.point.y()) < 1e-12);
  }
}

TEST_CASE("separated box yields no contacts") {
  World w = make_world(make_box(0.0, 1.0, 0.3, Vec2(0.05, 0.05), 0.1), flat_terrain());
  CHECK(w.detect_contacts().empty());
}

TEST_CASE("box penetrating the table by 1 mm yields depth 0.001") {
  const Vec2 half(0.05, 0.02);
  World w = make_world(make_box(0.0, half.y() - 0.001, 0.0, half, 0.1), flat_terrain());
  const auto contacts = w.detect_contacts();
  REQUIRE(contacts.size() == 2);
  for (const auto& c : contacts) {
    CHECK(c.depth == doctest::Approx(0.001).epsilon(1e-9));
  }
}

TEST_CASE("resting box: total normal impulse balances gravity, no tangential") {
  const Vec2 half(0.05, 0.02);
  World w = make_world(make_box(0.0, half.y(), 0.0, half, 0.1), flat_terrain());
  w.step();
  const auto& impulses = w.last_impulses();
  REQUIRE(impulses.size() == 2);
  double total_n = 0.0;
  for (const auto& imp : impulses) {
    total_n += imp.normal;
    CHECK(std::abs(imp.tangent) < 1e-12);
  }
  const double expected = 0.1 * 9.81 * w.config().dt;
  CHECK(total_n == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("sliding box decelerates by mu * g") {
  const Vec2 half(0.05, 0.02);
  RigidBody2 box = make_box(0.0, half.y(), 0.0, half, 0.1, 0.5);
  box.vel = Vec2(1.0, 0.0);
  World w = make_world(box, flat_terrain(0.5));
  const double v0 = w.object().vel.x();
  w.step();
  const double dv = v0 - w.object().vel.x();
  const double expected = 0.5 * 9.81 * w.config().dt;
  CHECK(dv == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("frictionless contact produces zero tangential impulse under lateral push") {
  const Vec2 half(0.05, 0.02);
  RigidBody2 box = make_box(0.0, half.y(), 0.0, half, 0.1, 0.0);
  box.vel = Vec2(0.5, 0.0);
  World w = make_world(box, flat_terrain(0.0));
  w.step();
  for (const auto& imp : w.last_impulses()) {
    CHECK(imp.tangent == doctest::Approx(0.0).epsilon(1e-12));
  }
  // Unchanged horizontal speed apart from integration of zero force.
  CHECK(w.object().vel.x() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("free body advances ballistically without gravity") {
  RigidBody2 box = make_box(0.0, 1.0, 0.0, Vec2(0.05, 0.05), 0.1);
  box.vel = Vec2(1.0, 0.0);
  WorldConfig cfg;
  cfg.gravity = 0.0;
  cfg.dt = 0.01;
  World w(box, flat_terrain(), cfg);
  w.step();
  CHECK(w.object().pose.x == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(w.object().pose.y == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("free fall from rest gains vy = -g dt") {
  RigidBody2 box = make_box(0.0, 1.0, 0.0, Vec2(0.05, 0.05), 0.1);
  WorldConfig cfg;
  cfg.dt = 0.01;
  World w(box, flat_terrain(), cfg);
  w.step();
  CHECK(w.object().vel.y() == doctest::Approx(-0.0981).epsilon(1e-12));
}

TEST_CASE("box at rest stays put for 1000 steps") {
  const Vec2 half(0.05, 0.02);
  World w = make_world(make_box(0.2, half.y(), 0.0, half, 0.1), flat_terrain());
  const Pose2 start = w.object().pose;
  for (int i = 0; i < 1000; ++i) w.step();
  CHECK(std::abs(w.object().pose.x - start.x) < 1e-4);
  CHECK(std::abs(w.object().pose.y - start.y) < 1e-4);
  CHECK(std::abs(wrap_angle(w.object().pose.theta - start.theta)) < 1e-4);
}

TEST_CASE("friction cone holds on every step of a tumbling drop") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    RigidBody2 box = make_box(rng.uniform(-0.1, 0.1), 0.15 + rng.uniform(0.0, 0.1),
                              rng.uniform(-1.5, 1.5), Vec2(0.04, 0.02), 0.08, 0.6);
    box.vel = Vec2(rng.uniform(-0.5, 0.5), 0.0);
    box.omega = rng.uniform(-3.0, 3.0);
    World w = make_world(box, flat_terrain(0.7));
    for (int i = 0; i < 500; ++i) {
      w.step();
      const auto& contacts = w.last_contacts();
      const auto& impulses = w.last_impulses();
      for (size_t k = 0; k < contacts.size(); ++k) {
        CHECK(impulses[k].normal >= 0.0);
        CHECK(std::abs(impulses[k].tangent) <=
              contacts[k].combined_friction * impulses[k].normal + 1e-9);
      }
    }
  }
}

TEST_CASE("steady-state penetration stays within twice the slop") {
  const Vec2 half(0.05, 0.02);
  RigidBody2 box = make_box(0.0, half.y() + 0.03, 0.0, half, 0.2);
  World w = make_world(box, flat_terrain());
  for (int i = 0; i < 2000; ++i) w.step();
  const double pen = half.y() - w.object().pose.y;
  CHECK(pen <= 2.0 * w.config().solver.slop);
}

TEST_CASE("passive systems dissipate: energy non-increasing per step") {
  Rng rng(123);
  for (int trial = 0; trial < 4; ++trial) {
    RigidBody2 box = make_box(rng.uniform(-0.1, 0.1), 0.08 + rng.uniform(0.0, 0.05),
                              rng.uniform(-0.4, 0.4), Vec2(0.04, 0.02), 0.1, 0.5);
    box.vel = Vec2(rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.0));
    box.omega = rng.uniform(-1.0, 1.0);
    World w = make_world(box, flat_terrain(0.6));
    double prev = w.mechanical_energy();
    for (int i = 0; i < 1500; ++i) {
      w.step();
      const double e = w.mechanical_energy();
      CHECK(e <= prev + 1e-6);
      prev = e;
    }
  }
}

TEST_CASE("identical worlds step to bit-identical trajectories") {
  auto run = [](int steps) {
    RigidBody2 box = make_box(0.01, 0.08, 0.2, Vec2(0.04, 0.02), 0.1, 0.5);
    box.vel = Vec2(0.3, -0.1);
    box.omega = 1.7;
    World w = make_world(box, flat_terrain(0.6));
    for (int i = 0; i < steps; ++i) w.step();
    return w.object();
  };
  const RigidBody2 a = run(777);
  const RigidBody2 b = run(777);
  CHECK(a.pose.x == b.pose.x);
  CHECK(a.pose.y == b.pose.y);
  CHECK(a.pose.theta == b.pose.theta);
  CHECK(a.vel.x() == b.vel.x());
  CHECK(a.vel.y() == b.vel.y());
  CHECK(a.omega == b.omega);
}

TEST_CASE("box vs bump feature collides") {
  Terrain t;
  t.kind = TerrainKind::bump;
  t.feature_x = 0.25;
  t.feature_height = 0.03;
  t.feature_width = 0.08;
  t.friction = 0.5;
  RigidBody2 box = make_box(0.25, 0.03 + 0.0249, 0.0, Vec2(0.025, 0.025), 0.05);
  World w(box, t, WorldConfig{});
  const auto contacts = w.detect_contacts();
  bool touching_bump = false;
  for (const auto& c : contacts) {
    if (c.depth >= 0.0 && c.normal.y() > 0.9 && c.point.y() > 0.02) touching_bump = true;
  }
  CHECK(touching_bump);
}

TEST_CASE("NaN state is a hard fault naming the body") {
  RigidBody2 box = make_box(0.0, 0.5, 0.0, Vec2(0.05, 0.05), 0.1);
  box.vel = Vec2(std::numeric_limits<double>::quiet_NaN(), 0.0);
  World w = make_world(box, flat_terrain());
  CHECK_THROWS_WITH_AS(w.step(), doctest::Contains("object"), std::runtime_error);
}
