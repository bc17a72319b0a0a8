#include "manip2d/curriculum.hpp"

#include <cmath>

namespace manip2d {

ResidualLimit residual_ratio(const ResidualLimit& zeta_o, const ResidualLimit& zeta_star,
                             int num_steps) {
  ResidualLimit r;
  r.pos = std::pow(zeta_star.pos / zeta_o.pos, 1.0 / num_steps);
  r.rot = std::pow(zeta_star.rot / zeta_o.rot, 1.0 / num_steps);
  return r;
}

ResidualLimit CurriculumState::zeta(const CurriculumConfig& cfg) const {
  const double frac = static_cast<double>(reductions_done) / cfg.num_steps;
  ResidualLimit z;
  z.pos = cfg.zeta_initial.pos * std::pow(cfg.zeta_target.pos / cfg.zeta_initial.pos, frac);
  z.rot = cfg.zeta_initial.rot * std::pow(cfg.zeta_target.rot / cfg.zeta_initial.rot, frac);
  return z;
}

void on_episode_batch(CurriculumState& state, const std::vector<bool>& successes,
                      const CurriculumConfig& cfg) {
  for (bool s : successes) {
    state.window.push_back(s);
    while (static_cast<int>(state.window.size()) > cfg.window) state.window.pop_front();
    if (static_cast<int>(state.window.size()) < cfg.window) continue;
    int wins = 0;
    for (bool w : state.window) wins += w ? 1 : 0;
    const double rate = static_cast<double>(wins) / state.window.size();
    if (rate >= cfg.trigger && state.reductions_done < cfg.num_steps) {
      ++state.reductions_done;
      state.window.clear();
    }
  }
}

void narrow_joint_range(JointRangeState& state, double success_rate,
                        const JointRangeConfig& cfg) {
  if (success_rate < cfg.trigger) return;
  state.gap = std::max(cfg.floor, state.gap * cfg.shrink_fraction);
}

}  // namespace manip2d
