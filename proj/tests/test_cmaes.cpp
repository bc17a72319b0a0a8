#include <doctest.h>

#include <cmath>
#include <vector>

#include "manip2d/cmaes.hpp"

using namespace manip2d;

TEST_CASE("sphere in 3D reaches 1e-10 within 200 generations") {
  CmaEsConfig cfg;
  cfg.max_generations = 200;
  cfg.seed = 1;
  cfg.ftol = 0.0;  // run on the budget alone
  const auto sphere = [](const VecX& x) { return x.squaredNorm(); };
  const CmaEsResult res = cmaes_minimize(sphere, Vec3(1, 1, 1), 0.5, cfg);
  CHECK(res.f_best < 1e-10);
  CHECK(res.generations <= 200);
}

TEST_CASE("rosenbrock 2D reaches 1e-6 within 2000 generations") {
  CmaEsConfig cfg;
  cfg.max_generations = 2000;
  cfg.seed = 2;
  cfg.ftol = 0.0;
  const auto rosenbrock = [](const VecX& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  const CmaEsResult res = cmaes_minimize(rosenbrock, Vec2(-1.2, 1.0), 0.3, cfg);
  CHECK(res.f_best < 1e-6);
  CHECK((res.x_best - Vec2(1.0, 1.0)).norm() < 1e-2);
}

TEST_CASE("constant objective terminates early with the mean basically in place") {
  CmaEsConfig cfg;
  cfg.max_generations = 500;
  cfg.seed = 3;
  const auto flat = [](const VecX&) { return 7.0; };
  const CmaEsResult res = cmaes_minimize(flat, Vec3(0.2, -0.1, 0.4), 0.05, cfg);
  CHECK(res.f_best == doctest::Approx(7.0));
  CHECK(res.generations < 500);
  CHECK(res.stop_reason != "max_generations");
}

TEST_CASE("adding a constant to the objective leaves sampled populations identical") {
  auto run = [](double offset) {
    std::vector<VecX> evaluated;
    CmaEsConfig cfg;
    cfg.max_generations = 40;
    cfg.seed = 44;
    cfg.ftol = 0.0;
    const auto f = [offset, &evaluated](const VecX& x) {
      evaluated.push_back(x);
      return x.squaredNorm() + offset;
    };
    cmaes_minimize(f, Vec3(0.7, -0.3, 0.2), 0.4, cfg);
    return evaluated;
  };
  const auto a = run(0.0);
  const auto b = run(100.0);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).norm() == 0.0);
  }
}

TEST_CASE("box bounds are honored through projection") {
  CmaEsConfig cfg;
  cfg.max_generations = 150;
  cfg.seed = 5;
  cfg.lower = (VecX(2) << 0.5, -10.0).finished();
  cfg.upper = (VecX(2) << 10.0, 10.0).finished();
  const auto sphere = [](const VecX& x) { return x.squaredNorm(); };
  const CmaEsResult res = cmaes_minimize(sphere, Vec2(2.0, 2.0), 0.5, cfg);
  // Optimum of the constrained problem sits on the lower x bound.
  CHECK(res.x_best[0] >= 0.5 - 1e-12);
  CHECK(res.x_best[0] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(res.x_best[1] == doctest::Approx(0.0).epsilon(1e-2));
}

TEST_CASE("fixed seeds reproduce the full optimization trace") {
  CmaEsConfig cfg;
  cfg.max_generations = 60;
  cfg.seed = 6;
  const auto f = [](const VecX& x) { return (x.array() - 0.3).matrix().squaredNorm(); };
  const CmaEsResult r1 = cmaes_minimize(f, Vec3(1, 2, 3), 0.7, cfg);
  const CmaEsResult r2 = cmaes_minimize(f, Vec3(1, 2, 3), 0.7, cfg);
  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t i = 0; i < r1.history.size(); ++i) CHECK(r1.history[i] == r2.history[i]);
  CHECK((r1.x_best - r2.x_best).norm() == 0.0);
}
