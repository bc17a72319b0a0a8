#include <doctest.h>

#include <cmath>

#include "manip2d/sysid.hpp"

using namespace manip2d;

namespace {

SysidConfig quick_config() {
  SysidConfig cfg;
  cfg.duration = 2.0;
  cfg.n_traj = 3;
  return cfg;
}

}  // namespace

TEST_CASE("excitations stay inside joint position and velocity limits") {
  ArmModel model;
  SysidConfig cfg;
  Rng rng(1);
  for (int joint = 0; joint < 3; ++joint) {
    const auto specs = generate_excitations(model, joint, 3000, cfg, rng);
    CHECK(specs.size() == 3000);
    const double half_range = 0.5 * (model.joint_hi[joint] - model.joint_lo[joint]);
    for (const auto& s : specs) {
      CHECK(s.joint == joint);
      CHECK(s.amplitude <= half_range + 1e-12);
      CHECK(s.amplitude * s.angular_freq <= model.velocity_limits[joint] + 1e-9);
    }
  }
}

TEST_CASE("amplitude hits the half joint range at fraction one") {
  ArmModel model;
  SysidConfig cfg;
  cfg.amplitude_frac = Vec2(1.0, 1.0);
  Rng rng(2);
  const auto specs = generate_excitations(model, 1, 4, cfg, rng);
  const double half_range = 0.5 * (model.joint_hi[1] - model.joint_lo[1]);
  for (const auto& s : specs) CHECK(s.amplitude == doctest::Approx(half_range));
}

TEST_CASE("requested count of specs for the requested joint") {
  ArmModel model;
  SysidConfig cfg;
  Rng rng(3);
  const auto specs = generate_excitations(model, 2, 8, cfg, rng);
  CHECK(specs.size() == 8);
  for (const auto& s : specs) CHECK(s.joint == 2);
}

TEST_CASE("zero-friction plant tracks a slow sinusoid within 0.01 rad RMS") {
  ArmModel model;
  JointDynamicsParams p;
  p.coulomb_friction.setZero();
  p.viscous_damping.setZero();
  p.armature = Vec3(0.01, 0.01, 0.01);
  SysidConfig cfg;
  ExcitationSpec spec;
  spec.joint = 2;
  spec.amplitude = 0.3;
  spec.angular_freq = 0.5;
  spec.duration = 4.0;
  const VecX q = simulate_excitation(model, p, spec, cfg);
  const double q0 = model.joint_mid()[2];
  double sq = 0.0;
  for (int k = 0; k < q.size(); ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    const double target = q0 + spec.amplitude * std::sin(spec.angular_freq * t);
    sq += std::pow(q[k] - target, 2);
  }
  CHECK(std::sqrt(sq / q.size()) < 0.01);
}

TEST_CASE("null excitation holds the joint still") {
  ArmModel model;
  SysidConfig cfg;
  ExcitationSpec spec;
  spec.joint = 1;
  spec.amplitude = 0.0;
  spec.angular_freq = 1.0;
  spec.duration = 1.0;
  const VecX q = simulate_excitation(model, model.dynamics, spec, cfg);
  for (int k = 0; k < q.size(); ++k) {
    CHECK(q[k] == doctest::Approx(model.joint_mid()[1]).epsilon(1e-6));
  }
}

TEST_CASE("identical spec and plant produce identical records") {
  ArmModel model;
  SysidConfig cfg;
  ExcitationSpec spec;
  spec.joint = 0;
  spec.amplitude = 0.6;
  spec.angular_freq = 1.2;
  spec.duration = 2.0;
  const TrajectoryRecord a = collect_trajectory(model, model.dynamics, spec, cfg);
  const TrajectoryRecord b = collect_trajectory(model, model.dynamics, spec, cfg);
  CHECK((a.q - b.q).norm() == 0.0);
}

TEST_CASE("objective is zero at the generating parameters") {
  ArmModel model;
  SysidConfig cfg = quick_config();
  Rng rng(4);
  const auto specs = generate_excitations(model, 1, 3, cfg, rng);
  std::vector<TrajectoryRecord> records;
  for (const auto& s : specs) records.push_back(collect_trajectory(model, model.dynamics, s, cfg));
  CHECK(sysid_objective(model, model.dynamics, records, cfg) < 1e-9);
}

TEST_CASE("objective matches an independently coded two-loop summation") {
  ArmModel model;
  SysidConfig cfg = quick_config();
  Rng rng(5);
  const auto specs = generate_excitations(model, 0, 2, cfg, rng);
  std::vector<TrajectoryRecord> records;
  for (const auto& s : specs) records.push_back(collect_trajectory(model, model.dynamics, s, cfg));

  JointDynamicsParams other = model.dynamics;
  other.coulomb_friction[0] *= 1.7;
  other.armature[0] *= 0.6;

  // Oracle: plain nested loops over records and samples.
  double oracle = 0.0;
  for (const auto& rec : records) {
    const VecX sim = simulate_excitation(model, other, rec.spec, cfg);
    double inner = 0.0;
    for (int t = 0; t < sim.size(); ++t) {
      inner += (rec.q[t] - sim[t]) * (rec.q[t] - sim[t]);
    }
    oracle += std::sqrt(inner);
  }
  CHECK(sysid_objective(model, other, records, cfg) ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("duplicating the record set doubles the objective") {
  ArmModel model;
  SysidConfig cfg = quick_config();
  Rng rng(6);
  const auto specs = generate_excitations(model, 1, 2, cfg, rng);
  std::vector<TrajectoryRecord> records;
  for (const auto& s : specs) records.push_back(collect_trajectory(model, model.dynamics, s, cfg));
  JointDynamicsParams other = model.dynamics;
  other.viscous_damping[1] *= 2.0;
  const double once = sysid_objective(model, other, records, cfg);
  std::vector<TrajectoryRecord> twice = records;
  twice.insert(twice.end(), records.begin(), records.end());
  CHECK(sysid_objective(model, other, twice, cfg) == doctest::Approx(2.0 * once).epsilon(1e-12));
}

TEST_CASE("fit recovers perturbed wrist parameters") {
  ArmModel model;
  SysidConfig cfg;
  cfg.duration = 1.5;
  cfg.cmaes.max_generations = 120;
  cfg.cmaes.seed = 99;
  cfg.cmaes.ftol = 1e-14;
  JointDynamicsParams plant = model.dynamics;
  plant.coulomb_friction[2] *= 1.5;
  plant.viscous_damping[2] *= 1.5;
  plant.armature[2] *= 1.5;

  Rng rng(7);
  const auto specs = generate_excitations(model, 2, 4, cfg, rng);
  std::vector<TrajectoryRecord> records;
  for (const auto& s : specs) records.push_back(collect_trajectory(model, plant, s, cfg));

  const JointFitResult fit = fit_joint(model, 2, records, model.dynamics, cfg);
  CHECK_FALSE(fit.inconsistent);
  CHECK(fit.params[0] == doctest::Approx(plant.coulomb_friction[2]).epsilon(0.15));
  CHECK(fit.params[1] == doctest::Approx(plant.viscous_damping[2]).epsilon(0.15));
  CHECK(fit.params[2] == doctest::Approx(plant.armature[2]).epsilon(0.15));
}

TEST_CASE("mixed plants leave an objective floor and a warning") {
  ArmModel model;
  SysidConfig cfg;
  cfg.duration = 1.5;
  cfg.cmaes.max_generations = 60;
  cfg.cmaes.seed = 100;
  JointDynamicsParams plant_b = model.dynamics;
  plant_b.coulomb_friction[1] *= 3.0;
  plant_b.armature[1] *= 2.5;

  Rng rng(8);
  const auto specs = generate_excitations(model, 1, 4, cfg, rng);
  std::vector<TrajectoryRecord> records;
  for (size_t i = 0; i < specs.size(); ++i) {
    records.push_back(collect_trajectory(
        model, i % 2 == 0 ? model.dynamics : plant_b, specs[i], cfg));
  }
  const JointFitResult fit = fit_joint(model, 1, records, model.dynamics, cfg);
  CHECK(fit.objective > 0.0);
  CHECK(fit.inconsistent);
}
