#include "manip2d/trainer.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace manip2d {

namespace {

constexpr uint32_t kCheckpointMagic = 0x4d324431;  // "M2D1"
constexpr int32_t kCheckpointVersion = 1;

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Trainer::Trainer(const ExperimentConfig& cfg) : Trainer(cfg, true) {}

Trainer::Trainer(const ExperimentConfig& cfg, bool init_nets)
    : cfg_(cfg), rng_(Rng::derive_seed(cfg.seed, 0xA11CE)) {
  apply_thread_config();
  if (init_nets) {
    pre_ = PrePolicy::make(kPreObsDim, cfg_.train.hidden, rng_);
    post_ = PostPolicy::make(kPostObsDim, cfg_.train.hidden, rng_);
    post_.kp_scale = cfg_.train.kp_scale;
    pre_.log_std.setConstant(cfg_.train.init_log_std);
    post_.log_std.setConstant(cfg_.train.init_log_std);
    value_pre_ = Mlp(net_sizes(kPreObsDim, cfg_.train.hidden, 1), rng_);
    value_post_ = Mlp(net_sizes(kPostObsDim, cfg_.train.hidden, 1), rng_);
  }
  joint_range_.gap = cfg_.env.dr.enabled ? cfg_.env.dr.initial_joint_range_gap : 0.0;

  envs_.reserve(cfg_.train.num_envs);
  for (int i = 0; i < cfg_.train.num_envs; ++i) {
    envs_.emplace_back(cfg_.env, Rng::derive_seed(cfg_.seed, 1000 + i));
  }
  pending_pre_.resize(envs_.size());
  segments_.resize(envs_.size());
  const int h = cfg_.env.episode.update_interval;
  for (size_t i = 0; i < segments_.size(); ++i) {
    segments_[i].obs.resize(kPostObsDim, h);
    segments_[i].z.resize(PostPolicy::kActionDim, h);
    segments_[i].logp.resize(h);
    segments_[i].reward.resize(h);
    segments_[i].value.resize(h);
    segments_[i].done.assign(h, 0);
    segments_[i].env_index = static_cast<int>(i);
  }
}

void Trainer::apply_thread_config() const {
#ifdef _OPENMP
  if (cfg_.train.threads > 0) {
    omp_set_num_threads(cfg_.train.threads);
  }
#endif
  Eigen::setNbThreads(cfg_.train.threads > 0 ? cfg_.train.threads : 0);
}

ResidualLimit Trainer::current_zeta() const {
  return cfg_.train.curriculum_enabled ? curriculum_.zeta(cfg_.curriculum)
                                       : cfg_.curriculum.zeta_target;
}

double Trainer::windowed_success_rate() const {
  if (success_window_.empty()) return 0.0;
  int wins = 0;
  for (bool b : success_window_) wins += b ? 1 : 0;
  return static_cast<double>(wins) / success_window_.size();
}

bool Trainer::success_window_full() const {
  return static_cast<int>(success_window_.size()) >= cfg_.train.metrics_window;
}

std::vector<EpisodeRecord> Trainer::drain_episode_records() {
  std::vector<EpisodeRecord> out;
  out.swap(episode_records_);
  return out;
}

IterationMetrics Trainer::iterate() {
  const int n = static_cast<int>(envs_.size());
  const int h_steps = cfg_.env.episode.update_interval;
  const ResidualLimit zeta = current_zeta();
  const double scale = cfg_.train.return_scale;

  for (auto& env : envs_) {
    env.set_residual_limit(zeta);
    env.set_joint_range_gap(joint_range_.gap);
  }
  for (auto& seg : segments_) seg.count = 0;

  std::vector<bool> outcomes;
  std::vector<bool> iteration_success;
  double reward_sum = 0.0;
  int64_t reward_count = 0;
  int placement_failures = 0;
  int episodes_finished = 0;

  int64_t clamp_before = 0, ticks_before = 0;
  for (const auto& env : envs_) {
    const LimitCounters& c = env.world().counters();
    clamp_before += c.velocity_clamps + c.torque_clamps;
    ticks_before += c.joint_ticks;
  }

  // Slot-phase scratch.
  std::vector<int8_t> mode(n);  // 0: pre placement, 1: post step, 2: scripted
  MatX pre_obs(kPreObsDim, n), post_obs(kPostObsDim, n);
  std::vector<PrePolicy::Sample> pre_samples(n);
  std::vector<PostPolicy::Sample> post_samples(n);
  VecX post_value_by_env = VecX::Zero(n);
  std::vector<uint8_t> pre_ok(n);
  std::vector<StepResult> step_results(n);

  for (int h = 0; h < h_steps; ++h) {
    for (auto& env : envs_) {
      if (env.phase() == Environment::Phase::finished) env.begin_episode();
    }

    std::vector<int> pre_idx, post_idx;
    for (int i = 0; i < n; ++i) {
      if (envs_[i].phase() == Environment::Phase::running) {
        mode[i] = 1;
        post_idx.push_back(i);
      } else if (cfg_.train.use_pre_policy) {
        mode[i] = 0;
        pre_idx.push_back(i);
      } else {
        mode[i] = 2;
      }
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      if (mode[i] == 1) {
        post_obs.col(i) = envs_[i].observe().to_vector({0.06, 0.1});
      } else if (mode[i] == 0) {
        pre_obs.col(i) = envs_[i].observe_pre();
      } else {
        envs_[i].place_scripted(cfg_.train.ee_init);
      }
    }

    // Batched policy/value forwards on the gathered columns.
    MatX pre_out, pre_val, post_mean, post_val;
    if (!pre_idx.empty()) {
      MatX gathered(kPreObsDim, pre_idx.size());
      for (size_t k = 0; k < pre_idx.size(); ++k) gathered.col(k) = pre_obs.col(pre_idx[k]);
      pre_out = pre_.net.forward(gathered);
      pre_val = value_pre_.forward(gathered);
    }
    if (!post_idx.empty()) {
      MatX gathered(kPostObsDim, post_idx.size());
      for (size_t k = 0; k < post_idx.size(); ++k)
        gathered.col(k) = post_obs.col(post_idx[k]);
      post_mean = post_.net.forward(gathered);
      post_val = value_post_.forward(gathered);
    }

    // Sample actions in env order with each env's own stream.
    for (size_t k = 0; k < pre_idx.size(); ++k) {
      const int i = pre_idx[k];
      pre_samples[i] = pre_.sample(pre_out.col(k), envs_[i].rng());
      pending_pre_[i].value = pre_val(0, k) * scale;
    }
    for (size_t k = 0; k < post_idx.size(); ++k) {
      const int i = post_idx[k];
      post_samples[i] = post_.sample(post_mean.col(k), zeta, envs_[i].rng());
      post_value_by_env[i] = post_val(0, k) * scale;
    }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      if (mode[i] == 0) {
        pre_ok[i] = envs_[i].apply_pre_contact(pre_samples[i].action) ? 1 : 0;
      } else if (mode[i] == 1) {
        step_results[i] = envs_[i].step(post_samples[i].action);
      }
    }

    // Bookkeeping in fixed env order.
    for (int i = 0; i < n; ++i) {
      Environment& env = envs_[i];
      if (mode[i] == 0) {
        if (pre_ok[i]) {
          PendingPre& p = pending_pre_[i];
          p.valid = true;
          p.obs = pre_obs.col(i);
          p.finger = pre_samples[i].finger;
          p.z = pre_samples[i].z;
          p.logp = pre_samples[i].logp;
        } else {
          completed_pre_.push_back({pre_obs.col(i), pre_samples[i].finger,
                                    pre_samples[i].z, pre_samples[i].logp,
                                    pending_pre_[i].value, cfg_.env.reward.c4});
          outcomes.push_back(false);
          ++placement_failures;
          ++episodes_finished;
          episode_records_.push_back(env.last_record());
        }
      } else if (mode[i] == 1) {
        Segment& seg = segments_[i];
        const int c = seg.count;
        seg.obs.col(c) = post_obs.col(i);
        seg.z.col(c) = post_samples[i].z;
        seg.logp[c] = post_samples[i].logp_base;
        seg.reward[c] = step_results[i].reward;
        seg.value[c] = post_value_by_env[i];
        seg.done[c] = step_results[i].status != StepStatus::running ? 1 : 0;
        ++seg.count;
        reward_sum += step_results[i].reward;
        ++reward_count;
        if (seg.done[c]) {
          const bool success = step_results[i].status == StepStatus::success;
          outcomes.push_back(success);
          ++episodes_finished;
          episode_records_.push_back(env.last_record());
          if (cfg_.train.use_pre_policy && pending_pre_[i].valid) {
            CompletedPre done_pre;
            done_pre.obs = pending_pre_[i].obs;
            done_pre.finger = pending_pre_[i].finger;
            done_pre.z = pending_pre_[i].z;
            done_pre.logp = pending_pre_[i].logp;
            done_pre.value = pending_pre_[i].value;
            done_pre.episode_return = env.last_record().reward_sum;
            completed_pre_.push_back(std::move(done_pre));
            pending_pre_[i].valid = false;
          }
        }
      } else if (env.phase() == Environment::Phase::finished) {
        // Scripted placement failed; the episode is charged as a failure.
        outcomes.push_back(false);
        ++placement_failures;
        ++episodes_finished;
        episode_records_.push_back(env.last_record());
      }
    }
    env_steps_ += n;
  }

  // Bootstrap values for the truncated tails, batched.
  std::vector<int> running;
  for (int i = 0; i < n; ++i) {
    if (segments_[i].count > 0 && !segments_[i].done[segments_[i].count - 1]) {
      running.push_back(i);
    }
  }
  VecX bootstrap = VecX::Zero(n);
  if (!running.empty()) {
    MatX obs_now(kPostObsDim, running.size());
    for (size_t k = 0; k < running.size(); ++k) {
      obs_now.col(k) = envs_[running[k]].observe().to_vector({0.06, 0.1});
    }
    const MatX v = value_post_.forward(obs_now);
    for (size_t k = 0; k < running.size(); ++k) bootstrap[running[k]] = v(0, k) * scale;
  }

  // Concatenate segments into the PPO batch.
  Eigen::Index total = 0;
  for (const auto& seg : segments_) total += seg.count;
  IterationMetrics metrics;
  metrics.post_stats.minibatches = 0;
  if (total > 0) {
    PostBatch batch;
    batch.obs.resize(kPostObsDim, total);
    batch.z.resize(PostPolicy::kActionDim, total);
    batch.logp_old.resize(total);
    batch.advantages.resize(total);
    batch.returns.resize(total);
    Eigen::Index at = 0;
    for (const auto& seg : segments_) {
      if (seg.count == 0) continue;
      const auto cnt = static_cast<Eigen::Index>(seg.count);
      VecX adv, ret;
      const VecX rewards = seg.reward.head(cnt);
      const VecX values = seg.value.head(cnt);
      std::vector<uint8_t> dones(seg.done.begin(), seg.done.begin() + seg.count);
      gae(rewards, values, dones, bootstrap[seg.env_index], cfg_.ppo.gamma,
          cfg_.ppo.gae_lambda, adv, ret);
      batch.obs.middleCols(at, cnt) = seg.obs.leftCols(cnt);
      batch.z.middleCols(at, cnt) = seg.z.leftCols(cnt);
      batch.logp_old.segment(at, cnt) = seg.logp.head(cnt);
      batch.advantages.segment(at, cnt) = adv;
      batch.returns.segment(at, cnt) = ret / scale;
      at += cnt;
    }
    metrics.post_stats =
        ppo_update_post(post_, value_post_, opt_post_, opt_vpost_, batch, cfg_.ppo, rng_);
  }

  if (cfg_.train.use_pre_policy &&
      static_cast<int>(completed_pre_.size()) >= cfg_.train.pre_min_batch) {
    const Eigen::Index m = static_cast<Eigen::Index>(completed_pre_.size());
    PreBatch batch;
    batch.obs.resize(kPreObsDim, m);
    batch.z.resize(PrePolicy::kLatentDim, m);
    batch.logp_old.resize(m);
    batch.advantages.resize(m);
    batch.returns.resize(m);
    batch.finger.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const CompletedPre& s = completed_pre_[i];
      batch.obs.col(i) = s.obs;
      batch.z.col(i) = s.z;
      batch.logp_old[i] = s.logp;
      batch.finger[i] = s.finger;
      batch.advantages[i] = s.episode_return - s.value;
      batch.returns[i] = s.episode_return / scale;
    }
    completed_pre_.clear();
    metrics.pre_stats =
        ppo_update_pre(pre_, value_pre_, opt_pre_, opt_vpre_, batch, cfg_.ppo, rng_);
  }

  for (bool b : outcomes) {
    success_window_.push_back(b);
    while (static_cast<int>(success_window_.size()) > cfg_.train.metrics_window) {
      success_window_.pop_front();
    }
  }
  if (cfg_.train.curriculum_enabled) {
    on_episode_batch(curriculum_, outcomes, cfg_.curriculum);
  }
  if (cfg_.env.dr.enabled) {
    for (bool b : outcomes) {
      joint_range_window_.push_back(b);
      while (static_cast<int>(joint_range_window_.size()) > cfg_.curriculum.window) {
        joint_range_window_.pop_front();
      }
      if (static_cast<int>(joint_range_window_.size()) == cfg_.curriculum.window) {
        int wins = 0;
        for (bool w : joint_range_window_) wins += w ? 1 : 0;
        const double rate = static_cast<double>(wins) / joint_range_window_.size();
        if (rate >= cfg_.joint_range.trigger && joint_range_.gap > cfg_.joint_range.floor) {
          narrow_joint_range(joint_range_, rate, cfg_.joint_range);
          joint_range_window_.clear();
        }
      }
    }
  }

  int64_t clamp_after = 0, ticks_after = 0;
  for (const auto& env : envs_) {
    const LimitCounters& c = env.world().counters();
    clamp_after += c.velocity_clamps + c.torque_clamps;
    ticks_after += c.joint_ticks;
  }

  ++iteration_;
  metrics.iteration = iteration_;
  metrics.env_steps = env_steps_;
  metrics.success_rate = windowed_success_rate();
  metrics.mean_reward = reward_count > 0 ? reward_sum / reward_count : 0.0;
  const ResidualLimit zeta_now = current_zeta();
  metrics.zeta_pos = zeta_now.pos;
  metrics.zeta_rot = zeta_now.rot;
  metrics.reductions_done = curriculum_.reductions_done;
  metrics.violation_rate = (ticks_after - ticks_before) > 0
                               ? static_cast<double>(clamp_after - clamp_before) /
                                     (ticks_after - ticks_before)
                               : 0.0;
  metrics.joint_range_gap = joint_range_.gap;
  metrics.episodes_finished = episodes_finished;
  metrics.placement_failures = placement_failures;
  return metrics;
}

void Trainer::run(int iterations,
                  const std::function<void(const IterationMetrics&)>& on_iteration) {
  for (int i = 0; i < iterations; ++i) {
    const IterationMetrics m = iterate();
    if (on_iteration) on_iteration(m);
  }
}

void Trainer::save_checkpoint(const std::string& path) const {
  ArchiveWriter ar(path);
  ar.put(static_cast<int64_t>(kCheckpointMagic));
  ar.put(static_cast<int64_t>(kCheckpointVersion));
  ar.put(config_to_json(cfg_));
  ar.put(iteration_);
  ar.put(env_steps_);
  ar.put(rng_.save());

  ar.put(pre_.net);
  ar.put(pre_.log_std);
  ar.put(post_.net);
  ar.put(post_.log_std);
  ar.put(post_.kp_scale);
  ar.put(value_pre_);
  ar.put(value_post_);
  ar.put(opt_pre_);
  ar.put(opt_post_);
  ar.put(opt_vpre_);
  ar.put(opt_vpost_);

  ar.put(static_cast<int64_t>(curriculum_.reductions_done));
  ar.put(static_cast<int64_t>(curriculum_.window.size()));
  for (bool b : curriculum_.window) ar.put(b);
  ar.put(joint_range_.gap);
  ar.put(static_cast<int64_t>(joint_range_window_.size()));
  for (bool b : joint_range_window_) ar.put(b);
  ar.put(static_cast<int64_t>(success_window_.size()));
  for (bool b : success_window_) ar.put(b);

  ar.put(static_cast<int64_t>(completed_pre_.size()));
  for (const auto& s : completed_pre_) {
    ar.put(s.obs);
    ar.put(static_cast<int64_t>(s.finger));
    ar.put(s.z);
    ar.put(s.logp);
    ar.put(s.value);
    ar.put(s.episode_return);
  }

  ar.put(static_cast<int64_t>(envs_.size()));
  for (size_t i = 0; i < envs_.size(); ++i) {
    const PendingPre& p = pending_pre_[i];
    ar.put(p.valid);
    if (p.valid) {
      ar.put(p.obs);
      ar.put(static_cast<int64_t>(p.finger));
      ar.put(p.z);
      ar.put(p.logp);
      ar.put(p.value);
    }
    envs_[i].save_state(ar);
  }
}

ExperimentConfig Trainer::checkpoint_config(const std::string& path) {
  ArchiveReader ar(path);
  if (ar.get_i64() != kCheckpointMagic) throw std::runtime_error("bad checkpoint magic");
  if (ar.get_i64() != kCheckpointVersion) throw std::runtime_error("bad checkpoint version");
  return config_from_json(ar.get_string());
}

Trainer Trainer::from_checkpoint(const std::string& path) {
  ArchiveReader ar(path);
  if (ar.get_i64() != kCheckpointMagic) throw std::runtime_error("bad checkpoint magic");
  if (ar.get_i64() != kCheckpointVersion) throw std::runtime_error("bad checkpoint version");
  const ExperimentConfig cfg = config_from_json(ar.get_string());
  Trainer t(cfg, /*init_nets=*/false);
  t.load_state(ar);
  return t;
}

void Trainer::load_state(ArchiveReader& ar) {
  iteration_ = ar.get_i64();
  env_steps_ = ar.get_i64();
  rng_.load(ar.get_string());

  pre_.net = ar.get_mlp();
  pre_.log_std = ar.get_vec();
  post_.net = ar.get_mlp();
  post_.log_std = ar.get_vec();
  post_.kp_scale = ar.get_double();
  value_pre_ = ar.get_mlp();
  value_post_ = ar.get_mlp();
  opt_pre_ = ar.get_adam();
  opt_post_ = ar.get_adam();
  opt_vpre_ = ar.get_adam();
  opt_vpost_ = ar.get_adam();

  curriculum_.reductions_done = static_cast<int>(ar.get_i64());
  curriculum_.window.clear();
  for (int64_t i = 0, m = ar.get_i64(); i < m; ++i) curriculum_.window.push_back(ar.get_bool());
  joint_range_.gap = ar.get_double();
  joint_range_window_.clear();
  for (int64_t i = 0, m = ar.get_i64(); i < m; ++i) joint_range_window_.push_back(ar.get_bool());
  success_window_.clear();
  for (int64_t i = 0, m = ar.get_i64(); i < m; ++i) success_window_.push_back(ar.get_bool());

  completed_pre_.clear();
  for (int64_t i = 0, m = ar.get_i64(); i < m; ++i) {
    CompletedPre s;
    s.obs = ar.get_vec();
    s.finger = static_cast<int>(ar.get_i64());
    s.z = ar.get_vec();
    s.logp = ar.get_double();
    s.value = ar.get_double();
    s.episode_return = ar.get_double();
    completed_pre_.push_back(std::move(s));
  }

  const int64_t env_count = ar.get_i64();
  if (env_count != static_cast<int64_t>(envs_.size())) {
    throw std::runtime_error("checkpoint env count mismatch");
  }
  for (size_t i = 0; i < envs_.size(); ++i) {
    PendingPre& p = pending_pre_[i];
    p.valid = ar.get_bool();
    if (p.valid) {
      p.obs = ar.get_vec();
      p.finger = static_cast<int>(ar.get_i64());
      p.z = ar.get_vec();
      p.logp = ar.get_double();
      p.value = ar.get_double();
    }
    envs_[i].load_state(ar);
  }
}

EvalReport evaluate(const ExperimentConfig& cfg, const PrePolicy* pre,
                    const PostPolicy& post, const ResidualLimit& zeta, int episodes,
                    bool domain_randomization, uint64_t seed,
                    std::optional<EeInit> scripted) {
  EnvConfig env_cfg = cfg.env;
  env_cfg.dr.enabled = domain_randomization;

  std::vector<int8_t> outcome(episodes);  // 0 fail, 1 success, 2 dropped, 3 timeout, 4 infeasible
  std::vector<double> reward_sums(episodes, 0.0);
  std::vector<double> steps_taken(episodes, 0.0);
  std::vector<int64_t> clamps(episodes, 0), ticks(episodes, 0);

#pragma omp parallel for schedule(static)
  for (int ep = 0; ep < episodes; ++ep) {
    Environment env(env_cfg, Rng::derive_seed(seed, 7000 + ep));
    env.set_residual_limit(zeta);
    env.begin_episode();

    bool placed = false;
    if (scripted) {
      placed = env.place_scripted(*scripted);
    } else if (pre) {
      const VecX out = pre->net.forward1(env.observe_pre());
      placed = env.apply_pre_contact(pre->mode(out));
    }
    if (!placed) {
      outcome[ep] = 4;
      continue;
    }
    StepStatus status = StepStatus::running;
    while (env.phase() == Environment::Phase::running) {
      const VecX obs = env.observe().to_vector({0.06, 0.1});
      const VecX mean = post.net.forward1(obs);
      const StepResult r = env.step(post.mode(mean, zeta));
      status = r.status;
      if (status != StepStatus::running) break;
    }
    outcome[ep] = status == StepStatus::success ? 1
                  : status == StepStatus::dropped ? 2
                                                  : 3;
    reward_sums[ep] = env.last_record().reward_sum;
    steps_taken[ep] = env.last_record().steps;
    clamps[ep] = env.last_record().velocity_clamps + env.last_record().torque_clamps;
    ticks[ep] = env.last_record().joint_ticks;
  }

  EvalReport report;
  report.episodes = episodes;
  int64_t clamp_total = 0, tick_total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    switch (outcome[ep]) {
      case 1: ++report.successes; break;
      case 2: ++report.dropped; break;
      case 3: ++report.timeouts; break;
      case 4: ++report.infeasible; break;
      default: break;
    }
    report.mean_reward_sum += reward_sums[ep];
    report.mean_steps += steps_taken[ep];
    clamp_total += clamps[ep];
    tick_total += ticks[ep];
  }
  report.mean_reward_sum /= std::max(1, episodes);
  report.mean_steps /= std::max(1, episodes);
  report.clamp_rate =
      tick_total > 0 ? static_cast<double>(clamp_total) / tick_total : 0.0;
  report.success_rate = static_cast<double>(report.successes) / std::max(1, episodes);

  // Wilson 95% interval.
  const double z = 1.959963984540054;
  const double nn = episodes, p = report.success_rate;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  report.wilson_lo = std::max(0.0, center - half);
  report.wilson_hi = std::min(1.0, center + half);
  return report;
}

}  // namespace manip2d
