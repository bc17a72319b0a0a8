#include "manip2d/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace manip2d {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw std::runtime_error(std::string("unknown config key '") + it.key() +
                               "' in " + where);
    }
  }
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json vecx_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected [x, y]");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}
Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}
VecX vecx_from(const json& j) {
  VecX v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
void read(const json& j, const char* key, Vec2& out) {
  if (j.contains(key)) out = vec2_from(j.at(key));
}
void read(const json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = vec3_from(j.at(key));
}
void read(const json& j, const char* key, VecX& out) {
  if (j.contains(key)) out = vecx_from(j.at(key));
}
void read(const json& j, const char* key, std::vector<int>& out) {
  if (j.contains(key)) out = j.at(key).get<std::vector<int>>();
}

json terrain_json(const Terrain& t) {
  const char* kind = t.kind == TerrainKind::flat ? "flat"
                     : t.kind == TerrainKind::bump ? "bump"
                                                   : "wall";
  return json{{"kind", kind},
              {"feature_height", t.feature_height},
              {"feature_width", t.feature_width},
              {"feature_x", t.feature_x},
              {"friction", t.friction},
              {"workspace_lo", vec2_json(t.workspace_lo)},
              {"workspace_hi", vec2_json(t.workspace_hi)}};
}

void terrain_from(const json& j, Terrain& t) {
  check_keys(j, "scene.terrain",
             {"kind", "feature_height", "feature_width", "feature_x", "friction",
              "workspace_lo", "workspace_hi"});
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "flat") t.kind = TerrainKind::flat;
    else if (k == "bump") t.kind = TerrainKind::bump;
    else if (k == "wall") t.kind = TerrainKind::wall;
    else throw std::runtime_error("unknown terrain kind: " + k);
  }
  read(j, "feature_height", t.feature_height);
  read(j, "feature_width", t.feature_width);
  read(j, "feature_x", t.feature_x);
  read(j, "friction", t.friction);
  read(j, "workspace_lo", t.workspace_lo);
  read(j, "workspace_hi", t.workspace_hi);
}

json gripper_json(const GripperModel& g) {
  return json{{"finger_reach", g.finger_reach},     {"palm_reach", g.palm_reach},
              {"tip_radius", g.tip_radius},         {"palm_radius", g.palm_radius},
              {"max_width", g.max_width},           {"servo_kp", g.servo_kp},
              {"servo_kd", g.servo_kd},             {"width_vel_limit", g.width_vel_limit}};
}

void gripper_from(const json& j, GripperModel& g) {
  check_keys(j, "arm.gripper",
             {"finger_reach", "palm_reach", "tip_radius", "palm_radius", "max_width",
              "servo_kp", "servo_kd", "width_vel_limit"});
  read(j, "finger_reach", g.finger_reach);
  read(j, "palm_reach", g.palm_reach);
  read(j, "tip_radius", g.tip_radius);
  read(j, "palm_radius", g.palm_radius);
  read(j, "max_width", g.max_width);
  read(j, "servo_kp", g.servo_kp);
  read(j, "servo_kd", g.servo_kd);
  read(j, "width_vel_limit", g.width_vel_limit);
}

json arm_json(const ArmModel& a) {
  return json{{"link_lengths", vec3_json(a.link_lengths)},
              {"link_masses", vec3_json(a.link_masses)},
              {"joint_lo", vec3_json(a.joint_lo)},
              {"joint_hi", vec3_json(a.joint_hi)},
              {"velocity_limits", vec3_json(a.velocity_limits)},
              {"torque_limits", vec3_json(a.torque_limits)},
              {"base_pose", json::array({a.base_pose.x, a.base_pose.y, a.base_pose.theta})},
              {"link_radius", a.link_radius},
              {"gripper", gripper_json(a.gripper)},
              {"dynamics",
               json{{"coulomb_friction", vec3_json(a.dynamics.coulomb_friction)},
                    {"viscous_damping", vec3_json(a.dynamics.viscous_damping)},
                    {"armature", vec3_json(a.dynamics.armature)}}}};
}

void arm_from(const json& j, ArmModel& a) {
  check_keys(j, "arm",
             {"link_lengths", "link_masses", "joint_lo", "joint_hi", "velocity_limits",
              "torque_limits", "base_pose", "link_radius", "gripper", "dynamics"});
  read(j, "link_lengths", a.link_lengths);
  read(j, "link_masses", a.link_masses);
  read(j, "joint_lo", a.joint_lo);
  read(j, "joint_hi", a.joint_hi);
  read(j, "velocity_limits", a.velocity_limits);
  read(j, "torque_limits", a.torque_limits);
  if (j.contains("base_pose")) {
    const auto& b = j.at("base_pose");
    a.base_pose = Pose2(b[0].get<double>(), b[1].get<double>(), b[2].get<double>());
  }
  read(j, "link_radius", a.link_radius);
  if (j.contains("gripper")) gripper_from(j.at("gripper"), a.gripper);
  if (j.contains("dynamics")) {
    const auto& d = j.at("dynamics");
    check_keys(d, "arm.dynamics", {"coulomb_friction", "viscous_damping", "armature"});
    read(d, "coulomb_friction", a.dynamics.coulomb_friction);
    read(d, "viscous_damping", a.dynamics.viscous_damping);
    read(d, "armature", a.dynamics.armature);
  }
}

json scene_json(const SceneConfig& s) {
  return json{{"terrain", terrain_json(s.terrain)},
              {"object_half_extents", vec2_json(s.object_half_extents)},
              {"object_mass", s.object_mass},
              {"object_friction", s.object_friction},
              {"ee_friction", s.ee_friction},
              {"spawn_x_range", vec2_json(s.spawn_x_range)},
              {"goal_x_range", vec2_json(s.goal_x_range)},
              {"goal_left_range", vec2_json(s.goal_left_range)},
              {"view_lo", vec2_json(s.view_lo)},
              {"view_hi", vec2_json(s.view_hi)}};
}

void scene_from(const json& j, SceneConfig& s) {
  check_keys(j, "scene",
             {"terrain", "object_half_extents", "object_mass", "object_friction",
              "ee_friction", "spawn_x_range", "goal_x_range", "goal_left_range",
              "view_lo", "view_hi"});
  if (j.contains("terrain")) terrain_from(j.at("terrain"), s.terrain);
  read(j, "object_half_extents", s.object_half_extents);
  read(j, "object_mass", s.object_mass);
  read(j, "object_friction", s.object_friction);
  read(j, "ee_friction", s.ee_friction);
  read(j, "spawn_x_range", s.spawn_x_range);
  read(j, "goal_x_range", s.goal_x_range);
  read(j, "goal_left_range", s.goal_left_range);
  read(j, "view_lo", s.view_lo);
  read(j, "view_hi", s.view_hi);
}

}  // namespace

ExperimentConfig default_config(Domain domain) {
  ExperimentConfig cfg;
  cfg.env.domain = domain;
  cfg.env.scene = default_scene(domain);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["domain"] = domain_name(c.env.domain);
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["scene"] = scene_json(c.env.scene);
  j["reward"] = json{{"c1", c.env.reward.c1},
                     {"c2", c.env.reward.c2},
                     {"c3", c.env.reward.c3},
                     {"c4", c.env.reward.c4},
                     {"distance_tol", c.env.reward.distance_tol},
                     {"angle_tol", c.env.reward.angle_tol},
                     {"kp_penalty_scale", c.env.reward.kp_penalty_scale},
                     {"proximity_floor", c.env.reward.proximity_floor}};
  j["episode"] = json{{"update_interval", c.env.episode.update_interval},
                      {"max_steps", c.env.episode.max_steps},
                      {"policy_hz", c.env.episode.policy_hz},
                      {"control_hz", c.env.episode.control_hz},
                      {"success_hold", c.env.episode.success_hold}};
  j["dr"] = json{{"enabled", c.env.dr.enabled},
                 {"table_friction_range", vec2_json(c.env.dr.table_friction_range)},
                 {"ee_friction_range", vec2_json(c.env.dr.ee_friction_range)},
                 {"object_mass_range", vec2_json(c.env.dr.object_mass_range)},
                 {"torque_noise_std", c.env.dr.torque_noise_std},
                 {"keypoint_noise_std", c.env.dr.keypoint_noise_std},
                 {"sensor_noise_std", c.env.dr.sensor_noise_std},
                 {"initial_joint_range_gap", c.env.dr.initial_joint_range_gap}};
  j["world"] = json{{"dt", c.env.world.dt},
                    {"substeps", c.env.world.substeps},
                    {"gravity", c.env.world.gravity},
                    {"solver",
                     json{{"iterations", c.env.world.solver.iterations},
                          {"baumgarte", c.env.world.solver.baumgarte},
                          {"slop", c.env.world.solver.slop},
                          {"max_correction_vel", c.env.world.solver.max_correction_vel},
                          {"touch_tolerance", c.env.world.solver.touch_tolerance},
                          {"speculative_margin", c.env.world.solver.speculative_margin},
                          {"residual_tol", c.env.world.solver.residual_tol}}}};
  j["arm"] = arm_json(c.env.arm);
  j["ik"] = json{{"damping", c.env.ik.damping},
                 {"max_iterations", c.env.ik.max_iterations},
                 {"step_clamp", c.env.ik.step_clamp},
                 {"position_tol", c.env.ik.position_tol},
                 {"orientation_tol", c.env.ik.orientation_tol}};
  j["ppo"] = json{{"clip_eps", c.ppo.clip_eps},
                  {"gamma", c.ppo.gamma},
                  {"gae_lambda", c.ppo.gae_lambda},
                  {"epochs", c.ppo.epochs},
                  {"minibatch", c.ppo.minibatch},
                  {"lr", c.ppo.lr},
                  {"entropy_coef", c.ppo.entropy_coef},
                  {"value_coef", c.ppo.value_coef},
                  {"max_grad_norm", c.ppo.max_grad_norm}};
  j["curriculum"] = json{
      {"zeta_initial", json::array({c.curriculum.zeta_initial.pos, c.curriculum.zeta_initial.rot})},
      {"zeta_target", json::array({c.curriculum.zeta_target.pos, c.curriculum.zeta_target.rot})},
      {"num_steps", c.curriculum.num_steps},
      {"trigger", c.curriculum.trigger},
      {"window", c.curriculum.window}};
  j["joint_range"] = json{{"trigger", c.joint_range.trigger},
                          {"shrink_fraction", c.joint_range.shrink_fraction},
                          {"floor", c.joint_range.floor}};
  j["train"] = json{{"num_envs", c.train.num_envs},
                    {"iterations", c.train.iterations},
                    {"hidden", c.train.hidden},
                    {"return_scale", c.train.return_scale},
                    {"pre_min_batch", c.train.pre_min_batch},
                    {"use_pre_policy", c.train.use_pre_policy},
                    {"ee_init", c.train.ee_init == EeInit::above ? "above" : "at-right"},
                    {"curriculum_enabled", c.train.curriculum_enabled},
                    {"kp_scale", c.train.kp_scale},
                    {"init_log_std", c.train.init_log_std},
                    {"checkpoint_interval", c.train.checkpoint_interval},
                    {"threads", c.train.threads},
                    {"metrics_window", c.train.metrics_window}};
  j["sysid"] = json{{"n_traj", c.sysid.sysid.n_traj},
                    {"duration", c.sysid.sysid.duration},
                    {"sample_rate", c.sysid.sysid.sample_rate},
                    {"kp", c.sysid.sysid.kp},
                    {"rho", c.sysid.sysid.rho},
                    {"amplitude_frac", vec2_json(c.sysid.sysid.amplitude_frac)},
                    {"freq_frac", vec2_json(c.sysid.sysid.freq_frac)},
                    {"physics_dt", c.sysid.sysid.physics_dt},
                    {"gravity", c.sysid.sysid.gravity},
                    {"inconsistency_warn", c.sysid.sysid.inconsistency_warn},
                    {"cmaes_sigma0", c.sysid.sysid.cmaes_sigma0},
                    {"cmaes_max_generations", c.sysid.sysid.cmaes.max_generations},
                    {"perturbation", c.sysid.perturbation},
                    {"seed", c.sysid.seed}};
  j["distill"] = json{{"hidden", c.distill.student.hidden},
                      {"epochs", c.distill.student.epochs},
                      {"batch", c.distill.student.batch},
                      {"lr", c.distill.student.lr},
                      {"val_fraction", c.distill.student.val_fraction},
                      {"loss_weights", vecx_json(c.distill.student.loss_weights)},
                      {"seed", c.distill.student.seed},
                      {"demos", c.distill.demos},
                      {"eval_episodes", c.distill.eval_episodes}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  check_keys(j, "config",
             {"domain", "seed", "out_dir", "scene", "reward", "episode", "dr", "world",
              "arm", "ik", "ppo", "curriculum", "joint_range", "train", "sysid",
              "distill"});
  Domain domain = Domain::card;
  if (j.contains("domain")) domain = domain_from_name(j.at("domain").get<std::string>());
  ExperimentConfig c = default_config(domain);
  read(j, "seed", c.seed);
  read(j, "out_dir", c.out_dir);
  if (j.contains("scene")) scene_from(j.at("scene"), c.env.scene);
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    check_keys(r, "reward",
               {"c1", "c2", "c3", "c4", "distance_tol", "angle_tol", "kp_penalty_scale",
                "proximity_floor"});
    read(r, "c1", c.env.reward.c1);
    read(r, "c2", c.env.reward.c2);
    read(r, "c3", c.env.reward.c3);
    read(r, "c4", c.env.reward.c4);
    read(r, "distance_tol", c.env.reward.distance_tol);
    read(r, "angle_tol", c.env.reward.angle_tol);
    read(r, "kp_penalty_scale", c.env.reward.kp_penalty_scale);
    read(r, "proximity_floor", c.env.reward.proximity_floor);
  }
  if (j.contains("episode")) {
    const auto& e = j.at("episode");
    check_keys(e, "episode",
               {"update_interval", "max_steps", "policy_hz", "control_hz",
                "success_hold"});
    read(e, "update_interval", c.env.episode.update_interval);
    read(e, "max_steps", c.env.episode.max_steps);
    read(e, "policy_hz", c.env.episode.policy_hz);
    read(e, "control_hz", c.env.episode.control_hz);
    read(e, "success_hold", c.env.episode.success_hold);
  }
  if (j.contains("dr")) {
    const auto& d = j.at("dr");
    check_keys(d, "dr",
               {"enabled", "table_friction_range", "ee_friction_range",
                "object_mass_range", "torque_noise_std", "keypoint_noise_std",
                "sensor_noise_std", "initial_joint_range_gap"});
    read(d, "enabled", c.env.dr.enabled);
    read(d, "table_friction_range", c.env.dr.table_friction_range);
    read(d, "ee_friction_range", c.env.dr.ee_friction_range);
    read(d, "object_mass_range", c.env.dr.object_mass_range);
    read(d, "torque_noise_std", c.env.dr.torque_noise_std);
    read(d, "keypoint_noise_std", c.env.dr.keypoint_noise_std);
    read(d, "sensor_noise_std", c.env.dr.sensor_noise_std);
    read(d, "initial_joint_range_gap", c.env.dr.initial_joint_range_gap);
  }
  if (j.contains("world")) {
    const auto& w = j.at("world");
    check_keys(w, "world", {"dt", "substeps", "gravity", "solver"});
    read(w, "dt", c.env.world.dt);
    read(w, "substeps", c.env.world.substeps);
    read(w, "gravity", c.env.world.gravity);
    if (w.contains("solver")) {
      const auto& s = w.at("solver");
      check_keys(s, "world.solver",
                 {"iterations", "baumgarte", "slop", "max_correction_vel",
                  "touch_tolerance", "speculative_margin", "residual_tol"});
      read(s, "iterations", c.env.world.solver.iterations);
      read(s, "baumgarte", c.env.world.solver.baumgarte);
      read(s, "slop", c.env.world.solver.slop);
      read(s, "max_correction_vel", c.env.world.solver.max_correction_vel);
      read(s, "touch_tolerance", c.env.world.solver.touch_tolerance);
      read(s, "speculative_margin", c.env.world.solver.speculative_margin);
      read(s, "residual_tol", c.env.world.solver.residual_tol);
    }
  }
  if (j.contains("arm")) arm_from(j.at("arm"), c.env.arm);
  if (j.contains("ik")) {
    const auto& k = j.at("ik");
    check_keys(k, "ik",
               {"damping", "max_iterations", "step_clamp", "position_tol",
                "orientation_tol"});
    read(k, "damping", c.env.ik.damping);
    read(k, "max_iterations", c.env.ik.max_iterations);
    read(k, "step_clamp", c.env.ik.step_clamp);
    read(k, "position_tol", c.env.ik.position_tol);
    read(k, "orientation_tol", c.env.ik.orientation_tol);
  }
  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    check_keys(p, "ppo",
               {"clip_eps", "gamma", "gae_lambda", "epochs", "minibatch", "lr",
                "entropy_coef", "value_coef", "max_grad_norm"});
    read(p, "clip_eps", c.ppo.clip_eps);
    read(p, "gamma", c.ppo.gamma);
    read(p, "gae_lambda", c.ppo.gae_lambda);
    read(p, "epochs", c.ppo.epochs);
    read(p, "minibatch", c.ppo.minibatch);
    read(p, "lr", c.ppo.lr);
    read(p, "entropy_coef", c.ppo.entropy_coef);
    read(p, "value_coef", c.ppo.value_coef);
    read(p, "max_grad_norm", c.ppo.max_grad_norm);
  }
  if (j.contains("curriculum")) {
    const auto& cur = j.at("curriculum");
    check_keys(cur, "curriculum",
               {"zeta_initial", "zeta_target", "num_steps", "trigger", "window"});
    if (cur.contains("zeta_initial")) {
      c.curriculum.zeta_initial.pos = cur.at("zeta_initial")[0].get<double>();
      c.curriculum.zeta_initial.rot = cur.at("zeta_initial")[1].get<double>();
    }
    if (cur.contains("zeta_target")) {
      c.curriculum.zeta_target.pos = cur.at("zeta_target")[0].get<double>();
      c.curriculum.zeta_target.rot = cur.at("zeta_target")[1].get<double>();
    }
    read(cur, "num_steps", c.curriculum.num_steps);
    read(cur, "trigger", c.curriculum.trigger);
    read(cur, "window", c.curriculum.window);
  }
  if (j.contains("joint_range")) {
    const auto& jr = j.at("joint_range");
    check_keys(jr, "joint_range", {"trigger", "shrink_fraction", "floor"});
    read(jr, "trigger", c.joint_range.trigger);
    read(jr, "shrink_fraction", c.joint_range.shrink_fraction);
    read(jr, "floor", c.joint_range.floor);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train",
               {"num_envs", "iterations", "hidden", "return_scale", "pre_min_batch",
                "use_pre_policy", "ee_init", "curriculum_enabled", "kp_scale",
                "init_log_std", "checkpoint_interval", "threads", "metrics_window"});
    read(t, "num_envs", c.train.num_envs);
    read(t, "iterations", c.train.iterations);
    read(t, "hidden", c.train.hidden);
    read(t, "return_scale", c.train.return_scale);
    read(t, "pre_min_batch", c.train.pre_min_batch);
    read(t, "use_pre_policy", c.train.use_pre_policy);
    if (t.contains("ee_init")) {
      const std::string e = t.at("ee_init").get<std::string>();
      if (e == "above") c.train.ee_init = EeInit::above;
      else if (e == "at-right") c.train.ee_init = EeInit::at_right;
      else throw std::runtime_error("unknown ee_init: " + e);
    }
    read(t, "curriculum_enabled", c.train.curriculum_enabled);
    read(t, "kp_scale", c.train.kp_scale);
    read(t, "init_log_std", c.train.init_log_std);
    read(t, "checkpoint_interval", c.train.checkpoint_interval);
    read(t, "threads", c.train.threads);
    read(t, "metrics_window", c.train.metrics_window);
  }
  if (j.contains("sysid")) {
    const auto& s = j.at("sysid");
    check_keys(s, "sysid",
               {"n_traj", "duration", "sample_rate", "kp", "rho", "amplitude_frac",
                "freq_frac", "physics_dt", "gravity", "inconsistency_warn",
                "cmaes_sigma0", "cmaes_max_generations", "perturbation", "seed"});
    read(s, "n_traj", c.sysid.sysid.n_traj);
    read(s, "duration", c.sysid.sysid.duration);
    read(s, "sample_rate", c.sysid.sysid.sample_rate);
    read(s, "kp", c.sysid.sysid.kp);
    read(s, "rho", c.sysid.sysid.rho);
    read(s, "amplitude_frac", c.sysid.sysid.amplitude_frac);
    read(s, "freq_frac", c.sysid.sysid.freq_frac);
    read(s, "physics_dt", c.sysid.sysid.physics_dt);
    read(s, "gravity", c.sysid.sysid.gravity);
    read(s, "inconsistency_warn", c.sysid.sysid.inconsistency_warn);
    read(s, "cmaes_sigma0", c.sysid.sysid.cmaes_sigma0);
    read(s, "cmaes_max_generations", c.sysid.sysid.cmaes.max_generations);
    read(s, "perturbation", c.sysid.perturbation);
    read(s, "seed", c.sysid.seed);
  }
  if (j.contains("distill")) {
    const auto& d = j.at("distill");
    check_keys(d, "distill",
               {"hidden", "epochs", "batch", "lr", "val_fraction", "loss_weights",
                "seed", "demos", "eval_episodes"});
    read(d, "hidden", c.distill.student.hidden);
    read(d, "epochs", c.distill.student.epochs);
    read(d, "batch", c.distill.student.batch);
    read(d, "lr", c.distill.student.lr);
    read(d, "val_fraction", c.distill.student.val_fraction);
    read(d, "loss_weights", c.distill.student.loss_weights);
    read(d, "seed", c.distill.student.seed);
    read(d, "demos", c.distill.demos);
    read(d, "eval_episodes", c.distill.eval_episodes);
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << config_to_json(cfg) << "\n";
}

std::string arm_to_json(const ArmModel& arm) { return arm_json(arm).dump(2); }

ArmModel arm_from_json(const std::string& text) {
  ArmModel arm;
  arm_from(json::parse(text), arm);
  return arm;
}

ArmModel load_arm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open arm config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return arm_from_json(ss.str());
}

void save_arm_file(const ArmModel& arm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write arm config: " + path);
  out << arm_to_json(arm) << "\n";
}

}  // namespace manip2d
