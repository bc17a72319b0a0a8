#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "manip2d/pose.hpp"
#include "manip2d/rng.hpp"

namespace manip2d {

struct CmaEsConfig {
  int max_generations = 500;
  int population = 0;        // 0: 4 + floor(3 ln n)
  double ftol = 1e-12;       // range of recent best values
  double sigma_tol = 1e-14;  // sigma * sqrt(max eigenvalue)
  uint64_t seed = 0;
  std::optional<VecX> lower;  // box bounds, applied by projection with penalty
  std::optional<VecX> upper;
  double bound_penalty = 1e3;
};

struct CmaEsResult {
  VecX x_best;
  double f_best = std::numeric_limits<double>::infinity();
  int generations = 0;
  std::vector<double> history;  // best objective per generation
  std::string stop_reason;
  int restarts = 0;
};

/// (mu/mu_w, lambda)-CMA-ES with rank-1 and rank-mu covariance updates.
/// Restarts from the current mean with a refreshed sigma if the covariance
/// loses positive definiteness.
CmaEsResult cmaes_minimize(const std::function<double(const VecX&)>& objective,
                           const VecX& x0, double sigma0, const CmaEsConfig& config);

}  // namespace manip2d
