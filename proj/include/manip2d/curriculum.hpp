#pragma once

#include <deque>
#include <vector>

#include "manip2d/env.hpp"

namespace manip2d {

struct CurriculumConfig {
  ResidualLimit zeta_initial{0.06, 0.1};  // zeta_o
  ResidualLimit zeta_target{0.02, 0.03};  // zeta*
  int num_steps = 10;                     // N_s
  double trigger = 0.8;                   // success rate that triggers a reduction
  int window = 1024;                      // episodes in the success window
};

/// Componentwise geometric reduction ratio (zeta*/zeta_o)^(1/N_s).
ResidualLimit residual_ratio(const ResidualLimit& zeta_o, const ResidualLimit& zeta_star,
                             int num_steps);

struct CurriculumState {
  int reductions_done = 0;
  std::deque<bool> window;

  /// zeta_o * ratio^k, evaluated in closed form so N_s reductions land on
  /// zeta* exactly (up to floating point).
  ResidualLimit zeta(const CurriculumConfig& cfg) const;
};

/// Pushes episode outcomes; on a full window at or above the trigger rate,
/// reduces zeta one geometric step and clears the window. Never reduces past
/// zeta*.
void on_episode_batch(CurriculumState& state, const std::vector<bool>& successes,
                      const CurriculumConfig& cfg);

/// Domain-randomized joint-range state: the sampled tightening interval
/// shrinks toward zero (nominal limits) as the policy improves.
struct JointRangeState {
  double gap = 0.0;  // radians
};

struct JointRangeConfig {
  double trigger = 0.8;
  double shrink_fraction = 0.5;
  double floor = 0.0;  // nominal interval
};

void narrow_joint_range(JointRangeState& state, double success_rate,
                        const JointRangeConfig& cfg);

}  // namespace manip2d
