#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "manip2d/config.hpp"
#include "manip2d/curriculum.hpp"
#include "manip2d/ppo.hpp"

namespace manip2d {

struct IterationMetrics {
  int64_t iteration = 0;
  int64_t env_steps = 0;
  double success_rate = 0.0;  // windowed over recent episodes
  double mean_reward = 0.0;   // mean post-contact reward this iteration
  double zeta_pos = 0.0;
  double zeta_rot = 0.0;
  int reductions_done = 0;
  double violation_rate = 0.0;  // limit clamps per joint tick this iteration
  double joint_range_gap = 0.0;
  int episodes_finished = 0;
  int placement_failures = 0;
  PpoStats post_stats;
  PpoStats pre_stats;
};

struct EvalReport {
  int episodes = 0;
  int successes = 0;
  int dropped = 0;
  int timeouts = 0;
  int infeasible = 0;
  double success_rate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double mean_reward_sum = 0.0;
  double clamp_rate = 0.0;
  double mean_steps = 0.0;
};

/// Synchronous PPO over a vector of environments. One episode per
/// environment at a time: the pre-contact policy places (one bandit step per
/// episode, credited with the episode's post-contact reward sum, C4 on an
/// infeasible placement), the post-contact policy runs at the policy rate and
/// updates every H policy steps.
class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& cfg);

  IterationMetrics iterate();
  void run(int iterations,
           const std::function<void(const IterationMetrics&)>& on_iteration = {});

  void save_checkpoint(const std::string& path) const;
  static Trainer from_checkpoint(const std::string& path);
  /// Config stored inside a checkpoint (for eval tooling).
  static ExperimentConfig checkpoint_config(const std::string& path);

  const ExperimentConfig& config() const { return cfg_; }
  const PrePolicy& pre_policy() const { return pre_; }
  const PostPolicy& post_policy() const { return post_; }
  int64_t iteration() const { return iteration_; }
  int64_t env_steps() const { return env_steps_; }
  ResidualLimit current_zeta() const;
  const CurriculumState& curriculum_state() const { return curriculum_; }
  const JointRangeState& joint_range_state() const { return joint_range_; }
  double windowed_success_rate() const;
  bool success_window_full() const;

  /// Episode rows accumulated since the last drain (for the episode CSV).
  std::vector<EpisodeRecord> drain_episode_records();

 private:
  Trainer(const ExperimentConfig& cfg, bool init_nets);
  void load_state(ArchiveReader& ar);
  void apply_thread_config() const;

  struct PendingPre {
    bool valid = false;
    VecX obs;
    int finger = 0;
    VecX z;
    double logp = 0.0;
    double value = 0.0;
  };
  struct CompletedPre {
    VecX obs;
    int finger = 0;
    VecX z;
    double logp = 0.0;
    double value = 0.0;
    double episode_return = 0.0;
  };
  struct Segment {
    MatX obs;
    MatX z;
    VecX logp;
    VecX reward;
    VecX value;
    std::vector<uint8_t> done;
    int count = 0;
    int env_index = 0;
  };

  ExperimentConfig cfg_;
  Rng rng_;

  PrePolicy pre_;
  PostPolicy post_;
  Mlp value_pre_;
  Mlp value_post_;
  AdamOpt opt_pre_, opt_post_, opt_vpre_, opt_vpost_;

  std::vector<Environment> envs_;
  std::vector<PendingPre> pending_pre_;
  std::vector<CompletedPre> completed_pre_;
  std::vector<Segment> segments_;

  CurriculumState curriculum_;
  JointRangeState joint_range_;
  std::deque<bool> success_window_;      // metrics
  std::deque<bool> joint_range_window_;  // adaptive joint-range trigger

  int64_t iteration_ = 0;
  int64_t env_steps_ = 0;
  std::vector<EpisodeRecord> episode_records_;
};

/// Deterministic evaluation with mode actions. When `scripted` is set the
/// pre-contact policy is bypassed and the EE starts from the scripted pose.
EvalReport evaluate(const ExperimentConfig& cfg, const PrePolicy* pre,
                    const PostPolicy& post, const ResidualLimit& zeta, int episodes,
                    bool domain_randomization, uint64_t seed,
                    std::optional<EeInit> scripted = std::nullopt);

}  // namespace manip2d
