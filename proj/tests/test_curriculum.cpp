#include <doctest.h>

#include <cmath>

#include "manip2d/curriculum.hpp"

using namespace manip2d;

TEST_CASE("residual ratio evaluates the geometric step") {
  const ResidualLimit r = residual_ratio({0.06, 0.1}, {0.02, 0.03}, 10);
  CHECK(r.pos == doctest::Approx(std::pow(1.0 / 3.0, 0.1)).epsilon(1e-12));
  CHECK(r.pos == doctest::Approx(0.89595).epsilon(1e-4));
  const ResidualLimit unity = residual_ratio({0.06, 0.1}, {0.06, 0.1}, 10);
  CHECK(unity.pos == doctest::Approx(1.0));
  CHECK(unity.rot == doctest::Approx(1.0));
  const ResidualLimit single = residual_ratio({0.06, 0.1}, {0.02, 0.03}, 1);
  CHECK(single.pos == doctest::Approx(0.02 / 0.06).epsilon(1e-15));
  CHECK(single.rot == doctest::Approx(0.03 / 0.1).epsilon(1e-15));
}

TEST_CASE("schedule exactness: zeta follows zeta_o r^k and closes on zeta*") {
  CurriculumConfig cfg;
  CurriculumState state;
  const ResidualLimit r = residual_ratio(cfg.zeta_initial, cfg.zeta_target, cfg.num_steps);
  for (int k = 0; k <= cfg.num_steps; ++k) {
    state.reductions_done = k;
    const ResidualLimit z = state.zeta(cfg);
    const double expect_pos = cfg.zeta_initial.pos * std::pow(r.pos, k);
    CHECK(std::abs(z.pos - expect_pos) / expect_pos < 1e-12);
    const double expect_rot = cfg.zeta_initial.rot * std::pow(r.rot, k);
    CHECK(std::abs(z.rot - expect_rot) / expect_rot < 1e-12);
  }
  state.reductions_done = cfg.num_steps;
  const ResidualLimit z = state.zeta(cfg);
  CHECK(std::abs(z.pos - cfg.zeta_target.pos) / cfg.zeta_target.pos < 1e-12);
  CHECK(std::abs(z.rot - cfg.zeta_target.rot) / cfg.zeta_target.rot < 1e-12);
}

TEST_CASE("a full window below the trigger leaves zeta unchanged") {
  CurriculumConfig cfg;
  cfg.window = 100;
  CurriculumState state;
  std::vector<bool> outcomes;
  for (int i = 0; i < 100; ++i) outcomes.push_back(i < 79);  // 79%
  on_episode_batch(state, outcomes, cfg);
  CHECK(state.reductions_done == 0);
}

TEST_CASE("a full window at 85% triggers one reduction and clears the window") {
  CurriculumConfig cfg;
  cfg.window = 100;
  CurriculumState state;
  std::vector<bool> outcomes;
  for (int i = 0; i < 100; ++i) outcomes.push_back(i < 85);
  on_episode_batch(state, outcomes, cfg);
  CHECK(state.reductions_done == 1);
  CHECK(state.window.empty());
  const ResidualLimit z = state.zeta(cfg);
  CHECK(z.pos ==
        doctest::Approx(0.06 * std::pow(1.0 / 3.0, 0.1)).epsilon(1e-12));
}

TEST_CASE("reductions stop at N_s; later triggers are no-ops") {
  CurriculumConfig cfg;
  cfg.window = 10;
  CurriculumState state;
  const std::vector<bool> all_wins(10, true);
  for (int round = 0; round < 30; ++round) on_episode_batch(state, all_wins, cfg);
  CHECK(state.reductions_done == cfg.num_steps);
  const ResidualLimit z = state.zeta(cfg);
  CHECK(std::abs(z.pos - cfg.zeta_target.pos) / cfg.zeta_target.pos < 1e-12);
}

TEST_CASE("zeta is non-increasing over any outcome stream") {
  CurriculumConfig cfg;
  cfg.window = 32;
  CurriculumState state;
  Rng rng(11);
  double prev = state.zeta(cfg).pos;
  for (int batch = 0; batch < 200; ++batch) {
    std::vector<bool> outcomes;
    for (int i = 0; i < 20; ++i) outcomes.push_back(rng.bernoulli(0.85));
    on_episode_batch(state, outcomes, cfg);
    const double now = state.zeta(cfg).pos;
    CHECK(now <= prev + 1e-15);
    prev = now;
  }
}

TEST_CASE("partial windows never trigger") {
  CurriculumConfig cfg;
  cfg.window = 1000;
  CurriculumState state;
  const std::vector<bool> wins(999, true);  // 100% but not full
  on_episode_batch(state, wins, cfg);
  CHECK(state.reductions_done == 0);
}

TEST_CASE("joint range narrowing halves the gap on trigger and floors at nominal") {
  JointRangeState state{0.2};
  JointRangeConfig cfg;
  narrow_joint_range(state, 0.5, cfg);
  CHECK(state.gap == doctest::Approx(0.2));  // below threshold: unchanged
  narrow_joint_range(state, 0.85, cfg);
  CHECK(state.gap == doctest::Approx(0.1));  // halved
  state.gap = cfg.floor;
  narrow_joint_range(state, 0.95, cfg);
  CHECK(state.gap == doctest::Approx(cfg.floor));  // no shrink past nominal
}
