#include "manip2d/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace manip2d {

CmaEsResult cmaes_minimize(const std::function<double(const VecX&)>& objective,
                           const VecX& x0, double sigma0, const CmaEsConfig& config) {
  const int n = static_cast<int>(x0.size());
  const int lambda = config.population > 0
                         ? config.population
                         : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  const int mu = lambda / 2;

  VecX weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();

  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double ds =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) /
                                            ((n + 2.0) * (n + 2.0) + mueff));
  const double chi_n = std::sqrt(static_cast<double>(n)) *
                       (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  auto clip_to_bounds = [&](const VecX& x) {
    VecX c = x;
    if (config.lower) c = c.cwiseMax(*config.lower);
    if (config.upper) c = c.cwiseMin(*config.upper);
    return c;
  };
  auto eval = [&](const VecX& x) {
    const VecX c = clip_to_bounds(x);
    double f = objective(c);
    if (config.lower || config.upper) {
      f += config.bound_penalty * (x - c).squaredNorm();
    }
    return f;
  };

  Rng rng(config.seed);
  VecX mean = x0;
  double sigma = sigma0;
  MatX cov = MatX::Identity(n, n);
  VecX ps = VecX::Zero(n), pc = VecX::Zero(n);

  CmaEsResult result;
  result.x_best = clip_to_bounds(x0);
  result.f_best = eval(x0);
  result.stop_reason = "max_generations";

  const int hist_window = 10 + static_cast<int>(std::ceil(30.0 * n / lambda));
  std::vector<double> best_hist;

  MatX samples_z(n, lambda), samples_y(n, lambda);
  std::vector<double> fitness(lambda);
  std::vector<int> order(lambda);

  for (int gen = 0; gen < config.max_generations; ++gen) {
    Eigen::SelfAdjointEigenSolver<MatX> eigen(cov);
    if (eigen.info() != Eigen::Success || eigen.eigenvalues().minCoeff() <= 0.0) {
      // Covariance lost positive definiteness: restart around the mean.
      cov = MatX::Identity(n, n);
      ps.setZero();
      pc.setZero();
      sigma = sigma0;
      ++result.restarts;
      eigen.compute(cov);
    }
    const VecX d = eigen.eigenvalues().cwiseSqrt();
    const MatX& b = eigen.eigenvectors();

    for (int k = 0; k < lambda; ++k) {
      VecX z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      samples_z.col(k) = z;
      samples_y.col(k) = b * d.cwiseProduct(z);
      fitness[k] = eval(mean + sigma * samples_y.col(k));
    }

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a2, int b2) { return fitness[a2] < fitness[b2]; });

    if (fitness[order[0]] < result.f_best) {
      result.f_best = fitness[order[0]];
      result.x_best = clip_to_bounds(mean + sigma * samples_y.col(order[0]));
    }
    result.history.push_back(fitness[order[0]]);
    result.generations = gen + 1;

    VecX yw = VecX::Zero(n), zw = VecX::Zero(n);
    for (int i = 0; i < mu; ++i) {
      yw += weights[i] * samples_y.col(order[i]);
      zw += weights[i] * samples_z.col(order[i]);
    }
    mean += sigma * yw;

    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (b * zw);
    const double ps_norm = ps.norm();
    const bool hsig =
        ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1))) / chi_n <
        1.4 + 2.0 / (n + 1.0);
    pc = (1.0 - cc) * pc +
         (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;

    MatX rank_mu = MatX::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      rank_mu.noalias() += weights[i] * samples_y.col(order[i]) *
                           samples_y.col(order[i]).transpose();
    }
    cov = (1.0 - c1 - cmu) * cov +
          c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * cov) +
          cmu * rank_mu;

    sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));

    best_hist.push_back(fitness[order[0]]);
    if (static_cast<int>(best_hist.size()) > hist_window) {
      best_hist.erase(best_hist.begin());
    }
    if (static_cast<int>(best_hist.size()) == hist_window) {
      const auto [lo_it, hi_it] = std::minmax_element(best_hist.begin(), best_hist.end());
      if (*hi_it - *lo_it < config.ftol) {
        result.stop_reason = "ftol";
        break;
      }
    }
    if (sigma * d.maxCoeff() < config.sigma_tol) {
      result.stop_reason = "sigma_collapse";
      break;
    }
  }
  return result;
}

}  // namespace manip2d
