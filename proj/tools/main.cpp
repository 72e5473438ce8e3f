// Copyright 2026 The impulsekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// impulsekit command line:
//   gen-motion  synthesize an exaggerated reference trajectory
//   analyze     compute the assistive impulse baseline (QP decomposition)
//   simulate    open/closed-loop tracking rollouts with telemetry
//   train       desk-scale residual-policy training on a toy task
//   eval        aggregate tracking metrics for a controller
//
// Exit codes: 0 success, 2 usage/input error, 3 numerical non-convergence,
// 4 training divergence.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "impulsekit/io.hpp"
#include "impulsekit/metrics.hpp"
#include "impulsekit/motion.hpp"
#include "impulsekit/train.hpp"

namespace ik = impulsekit;
using json = nlohmann::json;

namespace {

int exit_code_for(const ik::Error& e) {
  switch (e.kind()) {
    case ik::ErrorKind::kUsage:
    case ik::ErrorKind::kValidation:
      return 2;
    case ik::ErrorKind::kNonConvergence:
      return 3;
    case ik::ErrorKind::kDivergence:
      return 4;
  }
  return 2;
}

std::string default_output_dir() {
  const char* env = std::getenv("IMPULSEKIT_OUT_DIR");
  return env ? env : ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (name.find('/') != std::string::npos) return name;  // already a path
  return dir + "/" + name;
}

/// Every command drops a resolved-config JSON next to its outputs so runs
/// are reproducible from the artifacts alone.
void write_resolved_config(const std::string& out_path, const json& config) {
  ik::write_file_atomic(out_path, config.dump(2) + "\n");
}

ik::MotionKind parse_kind(const std::string& name) {
  if (name == "ground-dash") return ik::MotionKind::kGroundDash;
  if (name == "aerial-dash") return ik::MotionKind::kAerialDash;
  if (name == "gravity-defying-descent") return ik::MotionKind::kGravityDefyingDescent;
  if (name == "double-jump") return ik::MotionKind::kDoubleJump;
  ik::throw_usage("unknown motion kind: " + name);
}

struct ContactSiteArgs {
  std::vector<int> links;
  std::vector<double> offsets;  // flattened x,y,z per link

  std::vector<ik::ContactSite<double>> sites() const {
    std::vector<ik::ContactSite<double>> out;
    for (size_t i = 0; i < links.size(); ++i) {
      ik::ContactSite<double> s;
      s.link = links[i];
      if (3 * i + 2 < offsets.size()) {
        s.local_point = ik::Vec3d(offsets[3 * i], offsets[3 * i + 1], offsets[3 * i + 2]);
      }
      out.push_back(s);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// gen-motion
// ---------------------------------------------------------------------------

struct GenMotionArgs {
  std::string kind = "ground-dash";
  std::string model_path;
  std::string out = "motion.json";
  double dt = 1.0 / 30.0;
  double duration = 3.0;
  double peak_speed = 6.0;
  double window = 1.0;
  double apex_height = 1.0;
  double jump_boost = 3.0;
  double descent_floor = 0.3;
};

int run_gen_motion(const GenMotionArgs& args) {
  ik::CharacterModeld model = args.model_path.empty()
                                  ? ik::make_free_body_model<double>()
                                  : ik::load_model_file(args.model_path);
  ik::MotionParams<double> params;
  params.dt = args.dt;
  params.duration = args.duration;
  params.peak_speed = args.peak_speed;
  params.dash_window = args.window;
  params.apex_height = args.apex_height;
  params.jump_boost = args.jump_boost;
  params.descent_floor = args.descent_floor;

  const auto traj = ik::synthesize_exaggerated(parse_kind(args.kind), params, model);
  const std::string dir = default_output_dir();
  const std::string out_path = join_path(dir, args.out);
  ik::write_file_atomic(out_path, ik::trajectory_to_string(traj));

  const auto derived = ik::finite_difference_derivatives(traj);
  double peak_acc = 0.0;
  for (const auto& a : derived.derived_acc) {
    peak_acc = std::max(peak_acc, a.head<3>().norm());
  }
  std::cout << "wrote " << out_path << ": " << traj.n_frames() << " frames, dt "
            << ik::format_double(traj.dt) << " s, peak |base acc| "
            << ik::format_double(peak_acc) << " m/s^2\n";

  json cfg = {{"command", "gen-motion"}, {"kind", args.kind},   {"dt", args.dt},
              {"duration", args.duration}, {"peak_speed", args.peak_speed},
              {"window", args.window},   {"apex_height", args.apex_height},
              {"jump_boost", args.jump_boost}, {"descent_floor", args.descent_floor},
              {"model", args.model_path}, {"out", out_path}};
  write_resolved_config(out_path + ".config.json", cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string model_path;
  std::string traj_path;
  std::string out = "impulse_profile.csv";
  double mu = 0.8;
  double height_threshold = 0.03;
  double speed_threshold = 0.5;
  double lambda = 1e-4;
  double vertical_weight = 10.0;
  ContactSiteArgs contacts;
};

int run_analyze(const AnalyzeArgs& args) {
  const auto model = ik::load_model_file(args.model_path);
  const auto traj = ik::load_trajectory_file(args.traj_path, model);

  ik::AnalyzeParams<double> params;
  params.contact.mu = args.mu;
  params.contact.height_threshold = args.height_threshold;
  params.contact.speed_threshold = args.speed_threshold;
  params.contact.sites = args.contacts.sites();
  params.weights.lambda = args.lambda;
  params.weights.Q(2, 2) = args.vertical_weight;

  const auto analysis = ik::analyze(model, traj, params);
  if (!analysis.non_converged_frames.empty()) {
    std::string frames;
    for (int f : analysis.non_converged_frames) frames += " " + std::to_string(f);
    std::cerr << "error: QP did not converge on frame(s):" << frames << "\n";
    return 3;
  }

  const std::string dir = default_output_dir();
  const std::string out_path = join_path(dir, args.out);
  ik::write_file_atomic(out_path, ik::impulse_profile_csv(analysis));

  double peak_wrench = 0.0, sum_lin_impulse = 0.0;
  for (const auto& f : analysis.profile.frames) {
    peak_wrench = std::max(peak_wrench, f.wrench.norm());
    sum_lin_impulse += f.impulse.head<3>().norm();
  }
  std::cout << "wrote " << out_path << ": " << analysis.profile.n_frames()
            << " frames, peak |W| " << ik::format_double(peak_wrench) << " N, sum |I_lin| "
            << ik::format_double(sum_lin_impulse) << " N*s\n";

  json cfg = {{"command", "analyze"},
              {"model", args.model_path},
              {"trajectory", args.traj_path},
              {"mu", args.mu},
              {"height_threshold", args.height_threshold},
              {"speed_threshold", args.speed_threshold},
              {"lambda", args.lambda},
              {"vertical_weight", args.vertical_weight},
              {"contact_links", args.contacts.links},
              {"out", out_path}};
  write_resolved_config(out_path + ".config.json", cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model_path;
  std::string traj_path;
  std::string mode = "open";
  std::string impulse_csv;
  std::string checkpoint;
  bool builtin_feedback = false;
  bool perturb = false;
  std::uint64_t seed = 0;
  std::string out_telemetry = "telemetry.csv";
  std::string out_report = "report.json";
  double kp = 60.0, kd = 3.0;
  ContactSiteArgs contacts;
};

int run_simulate(const SimulateArgs& args) {
  const auto model = ik::load_model_file(args.model_path);
  auto traj = ik::load_trajectory_file(args.traj_path, model);
  traj = ik::finite_difference_derivatives(traj);

  ik::ImpulseProfiled baseline;
  if (!args.impulse_csv.empty()) {
    baseline = ik::load_impulse_profile_csv(ik::read_file(args.impulse_csv));
  } else {
    ik::AnalyzeParams<double> params;
    params.contact.sites = args.contacts.sites();
    baseline = ik::analyze(model, traj, params).profile;
  }

  ik::SimParamsd params;
  params.dt = traj.dt / 2.0;
  params.control_decimation = 2;
  params.ground.sites = args.contacts.sites();
  params.termination.min_root_height = 0.3 * std::max(traj.frames[0].base_pos.z(), 0.1);
  ik::PDGainsd gains =
      ik::PDGainsd::uniform(model.n_joints(), args.kp, args.kd, true);

  ik::Controller<double> controller;
  if (args.mode == "open") {
    controller = ik::open_loop_controller<double>();
  } else if (args.mode == "closed") {
    if (args.builtin_feedback) {
      controller = ik::builtin_feedback_controller<double>(model, traj, {}, traj.dt);
    } else if (!args.checkpoint.empty()) {
      const auto ckpt = ik::load_checkpoint(args.checkpoint);
      controller = ik::policy_controller<double>(ckpt.policy, model, traj, ckpt.spec);
    } else {
      ik::throw_usage("--mode closed requires --checkpoint or --builtin-feedback");
    }
  } else if (args.mode == "naive") {
    if (args.checkpoint.empty()) ik::throw_usage("--mode naive requires --checkpoint");
    const auto ckpt = ik::load_checkpoint(args.checkpoint);
    if (!ckpt.policy.naive_mode) ik::throw_usage("checkpoint is not a naive-mode policy");
    controller = ik::policy_controller<double>(ckpt.policy, model, traj, ckpt.spec);
  } else {
    ik::throw_usage("unknown mode: " + args.mode);
  }

  ik::PerturbationSchedule<double> schedule;
  if (args.perturb) {
    const int horizon = (traj.n_frames() - 1) * params.control_decimation;
    schedule = ik::sample_perturbations<double>(args.seed, horizon);
  }

  const auto rollout =
      ik::rollout_closed_loop(model, traj, baseline, controller, gains, params,
                              args.perturb ? &schedule : nullptr);

  const std::string dir = default_output_dir();
  const std::string telemetry_path = join_path(dir, args.out_telemetry);
  ik::write_file_atomic(telemetry_path, ik::telemetry_csv(rollout));

  json report;
  report["mode"] = args.mode;
  report["success"] = rollout.success;
  report["terminated_at"] = rollout.terminated_at;
  report["control_steps"] = static_cast<int>(rollout.telemetry.size());
  report["final_cum_mean_body_error"] = rollout.final_cum_error();
  const std::string report_path = join_path(dir, args.out_report);
  ik::write_file_atomic(report_path, report.dump(2) + "\n");

  std::cout << "mode " << args.mode << ": " << (rollout.success ? "completed" : "terminated")
            << " at step " << (rollout.terminated_at < 0
                                   ? static_cast<int>(rollout.telemetry.size())
                                   : rollout.terminated_at)
            << ", final cumulative error "
            << ik::format_double(rollout.final_cum_error()) << " m\n";

  json cfg = {{"command", "simulate"},   {"model", args.model_path},
              {"trajectory", args.traj_path}, {"mode", args.mode},
              {"impulse_csv", args.impulse_csv}, {"checkpoint", args.checkpoint},
              {"builtin_feedback", args.builtin_feedback}, {"perturb", args.perturb},
              {"seed", args.seed},       {"kp", args.kp},
              {"kd", args.kd},           {"telemetry", telemetry_path},
              {"report", report_path}};
  write_resolved_config(telemetry_path + ".config.json", cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string task = "free-body-dash";
  std::string ablate;
  std::uint64_t seed = 0;
  int iters = 500;
  double lr = 3e-4;
  int env_count = 16;
  std::string out_checkpoint = "policy.ckpt.json";
  std::string out_curves = "curves.csv";
};

int run_train(const TrainArgs& args) {
  ik::TrackingTask<double> task;
  if (args.task == "free-body-dash") {
    task = ik::make_free_body_dash_task<double>();
  } else if (args.task == "chain-dash") {
    task = ik::make_chain_dash_task<double>();
  } else {
    ik::throw_usage("unknown task: " + args.task);
  }

  ik::TrainConfig<double> cfg;
  cfg.seed = args.seed;
  cfg.iterations = args.iters;
  cfg.learning_rate = args.lr;
  cfg.env_count = args.env_count;
  if (args.ablate == "compass") {
    cfg.ablation.disable_compass = true;
  } else if (args.ablate == "sparsity") {
    cfg.ablation.disable_sparsity = true;
  } else if (args.ablate == "both") {
    cfg.ablation.disable_compass = true;
    cfg.ablation.disable_sparsity = true;
  } else if (args.ablate == "naive") {
    cfg.ablation.naive_mode = true;
  } else if (!args.ablate.empty()) {
    ik::throw_usage("unknown ablation: " + args.ablate);
  }

  const auto result = ik::train_loop(task, cfg);

  const std::string dir = default_output_dir();
  const std::string ckpt_path = join_path(dir, args.out_checkpoint);
  const std::string curves_path = join_path(dir, args.out_curves);
  ik::save_checkpoint(ckpt_path, {result.policy, result.critic, task.spec});
  ik::write_file_atomic(curves_path, ik::curves_csv(result.curves));

  const double final_success =
      result.curves.empty() ? 0.0 : result.curves.back().success_rate;
  std::cout << "trained " << result.curves.size() << " iterations, final success rate "
            << ik::format_double(final_success) << ", checkpoint " << ckpt_path << "\n";

  json cfg_json = {{"command", "train"}, {"task", args.task},     {"ablate", args.ablate},
                   {"seed", args.seed},  {"iterations", args.iters}, {"lr", args.lr},
                   {"env_count", args.env_count}, {"checkpoint", ckpt_path},
                   {"curves", curves_path}};
  write_resolved_config(curves_path + ".config.json", cfg_json);

  if (result.diverged) {
    std::cerr << "error: training diverged; last good checkpoint written\n";
    return 4;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model_path;
  std::string traj_path;
  std::string checkpoint;
  bool builtin_feedback = false;
  bool open_loop = false;
  bool perturb = false;
  int episodes = 8;
  std::uint64_t seed = 0;
  std::string out = "eval.csv";
  double kp = 60.0, kd = 3.0;
  ContactSiteArgs contacts;
};

int run_eval(const EvalArgs& args) {
  const auto model = ik::load_model_file(args.model_path);
  auto traj = ik::load_trajectory_file(args.traj_path, model);
  traj = ik::finite_difference_derivatives(traj);

  ik::AnalyzeParams<double> aparams;
  aparams.contact.sites = args.contacts.sites();
  const auto baseline = ik::analyze(model, traj, aparams).profile;

  ik::EvalSetup<double> setup;
  setup.gains = ik::PDGainsd::uniform(model.n_joints(), args.kp, args.kd, true);
  setup.params.dt = traj.dt / 2.0;
  setup.params.control_decimation = 2;
  setup.params.ground.sites = args.contacts.sites();
  setup.params.termination.min_root_height =
      0.3 * std::max(traj.frames[0].base_pos.z(), 0.1);
  if (args.perturb) setup.perturbation = ik::PerturbationRanges{};

  std::optional<ik::Checkpoint> ckpt;
  if (!args.checkpoint.empty()) ckpt = ik::load_checkpoint(args.checkpoint);

  bool has_split = true;
  std::function<ik::Controller<double>()> make_controller;
  if (args.open_loop) {
    make_controller = [] { return ik::open_loop_controller<double>(); };
  } else if (args.builtin_feedback) {
    make_controller = [&] {
      return ik::builtin_feedback_controller<double>(model, traj, {}, traj.dt);
    };
  } else if (ckpt) {
    has_split = !ckpt->policy.naive_mode;
    make_controller = [&] {
      return ik::policy_controller<double>(ckpt->policy, model, traj, ckpt->spec);
    };
  } else {
    ik::throw_usage("eval requires --checkpoint, --builtin-feedback, or --open-loop");
  }

  const auto report =
      ik::evaluate<double>(model, traj, baseline, make_controller, args.episodes, args.seed,
                           setup);

  const std::string dir = default_output_dir();
  const std::string out_path = join_path(dir, args.out);
  ik::write_file_atomic(out_path, ik::eval_report_csv(report, has_split));
  ik::write_file_atomic(out_path + ".json", ik::eval_report_json(report, has_split));

  std::cout << "success rate " << ik::format_double(report.success_rate) << " over "
            << report.episodes << " episodes; e_pose " << ik::format_double(report.e_pose.mean)
            << " m; mean beta_lin " << ik::format_double(report.gates.beta_lin_mean) << "\n";

  json cfg = {{"command", "eval"},         {"model", args.model_path},
              {"trajectory", args.traj_path}, {"checkpoint", args.checkpoint},
              {"builtin_feedback", args.builtin_feedback}, {"open_loop", args.open_loop},
              {"perturb", args.perturb},   {"episodes", args.episodes},
              {"seed", args.seed},         {"out", out_path}};
  write_resolved_config(out_path + ".config.json", cfg);
  return 0;
}

void add_contact_options(CLI::App* cmd, ContactSiteArgs& contacts) {
  cmd->add_option("--contact-link", contacts.links,
                  "Link index of a ground contact site (repeatable)");
  cmd->add_option("--contact-offset", contacts.offsets,
                  "Flattened x y z local offsets, 3 per contact link");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"impulsekit: momentum-space assistive control toolkit"};
  app.require_subcommand(1);

  GenMotionArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-motion", "Synthesize an exaggerated trajectory");
  cmd_gen->add_option("--kind", gen.kind,
                      "ground-dash | aerial-dash | gravity-defying-descent | double-jump");
  cmd_gen->add_option("--model", gen.model_path, "Model JSON (default: 5 kg free body)");
  cmd_gen->add_option("--out", gen.out, "Output trajectory path");
  cmd_gen->add_option("--dt", gen.dt, "Frame period, s");
  cmd_gen->add_option("--duration", gen.duration, "Clip duration, s");
  cmd_gen->add_option("--peak-speed", gen.peak_speed, "Dash speed, m/s");
  cmd_gen->add_option("--window", gen.window, "Dash window, s");
  cmd_gen->add_option("--apex-height", gen.apex_height, "Apex height, m");
  cmd_gen->add_option("--jump-boost", gen.jump_boost, "Apex velocity gain, m/s");
  cmd_gen->add_option("--descent-floor", gen.descent_floor, "Descent end height, m");

  AnalyzeArgs analyze_args;
  auto* cmd_analyze = app.add_subcommand("analyze", "Compute the assistive impulse baseline");
  cmd_analyze->add_option("--model", analyze_args.model_path, "Model JSON")->required();
  cmd_analyze->add_option("--traj", analyze_args.traj_path, "Trajectory JSON")->required();
  cmd_analyze->add_option("--out", analyze_args.out, "Output CSV path");
  cmd_analyze->add_option("--mu", analyze_args.mu, "Friction coefficient");
  cmd_analyze->add_option("--height-thresh", analyze_args.height_threshold,
                          "Contact height threshold, m");
  cmd_analyze->add_option("--speed-thresh", analyze_args.speed_threshold,
                          "Contact speed threshold, m/s");
  cmd_analyze->add_option("--lambda", analyze_args.lambda, "Contact force regularization");
  cmd_analyze->add_option("--vertical-weight", analyze_args.vertical_weight,
                          "Q weight on the vertical wrench row");
  add_contact_options(cmd_analyze, analyze_args.contacts);

  SimulateArgs sim_args;
  auto* cmd_sim = app.add_subcommand("simulate", "Run a tracking rollout");
  cmd_sim->add_option("--model", sim_args.model_path, "Model JSON")->required();
  cmd_sim->add_option("--traj", sim_args.traj_path, "Trajectory JSON")->required();
  cmd_sim->add_option("--mode", sim_args.mode, "open | closed | naive");
  cmd_sim->add_option("--impulse-csv", sim_args.impulse_csv,
                      "Baseline profile CSV (default: analyze on the fly)");
  cmd_sim->add_option("--checkpoint", sim_args.checkpoint, "Policy checkpoint");
  cmd_sim->add_flag("--builtin-feedback", sim_args.builtin_feedback,
                    "Use the deterministic feedback controller");
  cmd_sim->add_flag("--perturb", sim_args.perturb, "Inject random perturbations");
  cmd_sim->add_option("--seed", sim_args.seed, "Random seed");
  cmd_sim->add_option("--out-telemetry", sim_args.out_telemetry, "Telemetry CSV path");
  cmd_sim->add_option("--out-report", sim_args.out_report, "Report JSON path");
  cmd_sim->add_option("--kp", sim_args.kp, "Joint PD stiffness");
  cmd_sim->add_option("--kd", sim_args.kd, "Joint PD damping");
  add_contact_options(cmd_sim, sim_args.contacts);

  TrainArgs train_args;
  auto* cmd_train = app.add_subcommand("train", "Train the residual policy on a toy task");
  cmd_train->add_option("--task", train_args.task, "free-body-dash | chain-dash");
  cmd_train->add_option("--ablate", train_args.ablate, "compass | sparsity | both | naive");
  cmd_train->add_option("--seed", train_args.seed, "Random seed");
  cmd_train->add_option("--iters", train_args.iters, "Iteration budget");
  cmd_train->add_option("--lr", train_args.lr, "Learning rate");
  cmd_train->add_option("--env-count", train_args.env_count, "Episodes per iteration");
  cmd_train->add_option("--out-checkpoint", train_args.out_checkpoint, "Checkpoint path");
  cmd_train->add_option("--out-curves", train_args.out_curves, "Learning-curve CSV path");

  EvalArgs eval_args;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a controller");
  cmd_eval->add_option("--model", eval_args.model_path, "Model JSON")->required();
  cmd_eval->add_option("--traj", eval_args.traj_path, "Trajectory JSON")->required();
  cmd_eval->add_option("--checkpoint", eval_args.checkpoint, "Policy checkpoint");
  cmd_eval->add_flag("--builtin-feedback", eval_args.builtin_feedback,
                     "Evaluate the deterministic feedback controller");
  cmd_eval->add_flag("--open-loop", eval_args.open_loop, "Evaluate the open-loop replay");
  cmd_eval->add_flag("--perturb", eval_args.perturb, "Perturbed evaluation");
  cmd_eval->add_option("--episodes", eval_args.episodes, "Episode count");
  cmd_eval->add_option("--seed", eval_args.seed, "Random seed");
  cmd_eval->add_option("--out", eval_args.out, "Report CSV path");
  cmd_eval->add_option("--kp", eval_args.kp, "Joint PD stiffness");
  cmd_eval->add_option("--kd", eval_args.kd, "Joint PD damping");
  add_contact_options(cmd_eval, eval_args.contacts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_gen)) return run_gen_motion(gen);
    if (app.got_subcommand(cmd_analyze)) return run_analyze(analyze_args);
    if (app.got_subcommand(cmd_sim)) return run_simulate(sim_args);
    if (app.got_subcommand(cmd_train)) return run_train(train_args);
    if (app.got_subcommand(cmd_eval)) return run_eval(eval_args);
  } catch (const ik::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
