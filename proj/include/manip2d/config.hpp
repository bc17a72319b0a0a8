#pragma once

#include <string>

#include "manip2d/cmaes.hpp"
#include "manip2d/curriculum.hpp"
#include "manip2d/distill.hpp"
#include "manip2d/env.hpp"
#include "manip2d/ppo.hpp"
#include "manip2d/sysid.hpp"

namespace manip2d {

struct TrainConfig {
  int num_envs = 256;
  int iterations = 500;
  std::vector<int> hidden{128, 128};
  double return_scale = 100.0;
  int pre_min_batch = 256;  // completed episodes before a pre-policy update
  bool use_pre_policy = true;
  EeInit ee_init = EeInit::above;
  bool curriculum_enabled = true;
  double kp_scale = 100.0;
  double init_log_std = -0.5;
  int checkpoint_interval = 0;  // iterations between checkpoints; 0 = end only
  int threads = 0;              // 0 = hardware concurrency
  int metrics_window = 1024;    // episodes in the reported success rate
};

struct SysidRunConfig {
  SysidConfig sysid;
  double perturbation = 1.5;  // "real" plant = nominal x this
  uint64_t seed = 0;
};

struct DistillRunConfig {
  StudentConfig student;
  int demos = 50000;
  int eval_episodes = 200;
};

struct ExperimentConfig {
  EnvConfig env;
  PpoConfig ppo;
  CurriculumConfig curriculum;
  JointRangeConfig joint_range;
  TrainConfig train;
  SysidRunConfig sysid;
  DistillRunConfig distill;
  uint64_t seed = 0;
  std::string out_dir = "runs/run";
};

/// Defaults for a domain (scene geometry follows the domain).
ExperimentConfig default_config(Domain domain);

std::string config_to_json(const ExperimentConfig& cfg);
/// Strict parse: unknown keys are rejected. Missing keys keep defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
void save_config_file(const ExperimentConfig& cfg, const std::string& path);

/// Arm description as its own document (the sysid command writes these).
std::string arm_to_json(const ArmModel& arm);
ArmModel arm_from_json(const std::string& text);
ArmModel load_arm_file(const std::string& path);
void save_arm_file(const ArmModel& arm, const std::string& path);

}  // namespace manip2d
