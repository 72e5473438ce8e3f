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

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "impulsekit/decomp.hpp"
#include "impulsekit/kinematics.hpp"
#include "impulsekit/model.hpp"
#include "impulsekit/rng.hpp"
#include "impulsekit/sim.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// Root-relative RMSE over link positions: every link position is
/// expressed in its own root frame before comparing, so a rigid transform
/// of the whole character leaves the error unchanged.
template <typename S>
S pose_error(const CharacterModel<S>& model, const GeneralizedState<S>& sim_gs,
             const GeneralizedState<S>& ref_gs) {
  if (sim_gs.n_joints() != model.n_joints() || ref_gs.n_joints() != model.n_joints()) {
    throw_validation("pose_error: model mismatch");
  }
  const auto sim_poses = forward_kinematics(model, sim_gs);
  const auto ref_poses = forward_kinematics(model, ref_gs);
  const Mat3<S> sim_rt = sim_poses[model.base_link].rotation.transpose();
  const Mat3<S> ref_rt = ref_poses[model.base_link].rotation.transpose();
  const Vec3<S>& sim_root = sim_poses[model.base_link].position;
  const Vec3<S>& ref_root = ref_poses[model.base_link].position;

  S sum = S(0);
  for (int l = 0; l < model.n_links(); ++l) {
    const Vec3<S> a = sim_rt * (sim_poses[l].position - sim_root);
    const Vec3<S> b = ref_rt * (ref_poses[l].position - ref_root);
    sum += (a - b).squaredNorm();
  }
  return std::sqrt(sum / S(model.n_links()));
}

/// RMSE over articulated joint velocities.
template <typename S>
S velocity_error(const GeneralizedState<S>& sim_gs, const GeneralizedState<S>& ref_gs) {
  if (sim_gs.joint_vel.size() != ref_gs.joint_vel.size()) {
    throw_validation("velocity_error: dimension mismatch");
  }
  const auto n = sim_gs.joint_vel.size();
  if (n == 0) return S(0);
  return std::sqrt((sim_gs.joint_vel - ref_gs.joint_vel).squaredNorm() / S(n));
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  if (xs.empty()) return ms;
  double sum = 0.0;
  for (double x : xs) sum += x;
  ms.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - ms.mean) * (x - ms.mean);
  ms.std = std::sqrt(var / static_cast<double>(xs.size()));
  return ms;
}

/// Mean magnitudes per 3-row block per impulse source.
struct ImpulseStats {
  bool has_split = true;  // false when the controller does not decompose
  double total_lin = 0.0, total_ang = 0.0;
  double ref_lin = 0.0, ref_ang = 0.0;
  double res_lin = 0.0, res_ang = 0.0;
};

template <typename S>
ImpulseStats impulse_statistics(const std::vector<AppliedImpulse<S>>& applied) {
  if (applied.empty()) throw_validation("impulse_statistics: empty profile");
  ImpulseStats stats;
  for (const auto& a : applied) {
    stats.total_lin += a.total.template head<3>().norm();
    stats.total_ang += a.total.template tail<3>().norm();
    stats.ref_lin += a.base.template head<3>().norm();
    stats.ref_ang += a.base.template tail<3>().norm();
    stats.res_lin += a.res.template head<3>().norm();
    stats.res_ang += a.res.template tail<3>().norm();
  }
  const double n = static_cast<double>(applied.size());
  stats.total_lin /= n;
  stats.total_ang /= n;
  stats.ref_lin /= n;
  stats.ref_ang /= n;
  stats.res_lin /= n;
  stats.res_ang /= n;
  return stats;
}

/// RMS second difference of the applied wrench sequence, N per step^2.
/// Zero for any affine-in-time profile.
template <typename S>
double jitter(const std::vector<Vec6<S>>& wrenches) {
  if (wrenches.size() < 3) throw_validation("jitter: need at least 3 control steps");
  double sum = 0.0;
  for (size_t t = 2; t < wrenches.size(); ++t) {
    sum += static_cast<double>(
        (wrenches[t] - S(2) * wrenches[t - 1] + wrenches[t - 2]).squaredNorm());
  }
  return std::sqrt(sum / static_cast<double>(wrenches.size() - 2));
}

struct GateStats {
  double beta_lin_mean = 1.0, beta_lin_min = 1.0, beta_lin_max = 1.0;
  double beta_ang_mean = 1.0, beta_ang_min = 1.0, beta_ang_max = 1.0;
};

/// Aggregated evaluation of a controller, matching the reporting layout of
/// the tracking-fidelity tables.
struct EvalReport {
  MeanStd e_pose;
  MeanStd e_vel;
  ImpulseStats impulse;
  double jitter_value = 0.0;
  double success_rate = 0.0;
  GateStats gates;
  int episodes = 0;
  std::vector<int> termination_steps;  // -1 for completed episodes
};

template <typename S>
struct EvalSetup {
  PDGains<S> gains;
  SimParams<S> params;
  std::optional<PerturbationRanges> perturbation;
  int perturbation_link = 0;
};

/// Runs n_episodes rollouts and aggregates the metrics. Episode e uses a
/// perturbation schedule sampled from a seed derived from (seed, e), so
/// reports are deterministic for fixed arguments.
template <typename S>
EvalReport evaluate(const CharacterModel<S>& model, const ReferenceTrajectory<S>& traj,
                    const ImpulseProfile<S>& baseline,
                    const std::function<Controller<S>()>& make_controller, int n_episodes,
                    std::uint64_t seed, const EvalSetup<S>& setup) {
  EvalReport report;
  report.episodes = n_episodes;

  std::vector<double> pose_errors, vel_errors;
  std::vector<double> beta_lin, beta_ang;
  std::vector<AppliedImpulse<S>> all_applied;
  double jitter_sum = 0.0;
  int jitter_count = 0;
  int successes = 0;

  const int horizon_sim_steps = (traj.n_frames() - 1) * setup.params.control_decimation;
  for (int e = 0; e < n_episodes; ++e) {
    PerturbationSchedule<S> schedule;
    const PerturbationSchedule<S>* schedule_ptr = nullptr;
    if (setup.perturbation) {
      schedule = sample_perturbations<S>(derive_seed(seed, static_cast<std::uint64_t>(e)),
                                         horizon_sim_steps, *setup.perturbation,
                                         setup.perturbation_link);
      schedule_ptr = &schedule;
    }
    Controller<S> controller = make_controller();
    const RolloutResult<S> rollout = rollout_closed_loop(
        model, traj, baseline, controller, setup.gains, setup.params, schedule_ptr);

    if (rollout.success) ++successes;
    report.termination_steps.push_back(rollout.terminated_at);

    std::vector<Vec6<S>> wrenches;
    for (size_t k = 0; k < rollout.states.size(); ++k) {
      const int frame = static_cast<int>(k) + 1;
      pose_errors.push_back(
          static_cast<double>(pose_error(model, rollout.states[k].gs, traj.frames[frame])));
      vel_errors.push_back(
          static_cast<double>(velocity_error(rollout.states[k].gs, traj.frames[frame])));
      wrenches.push_back(rollout.telemetry[k].wrench);
    }
    for (const auto& a : rollout.applied) {
      all_applied.push_back(a);
      beta_lin.push_back(static_cast<double>(a.beta_lin));
      beta_ang.push_back(static_cast<double>(a.beta_ang));
    }
    if (wrenches.size() >= 3) {
      jitter_sum += jitter(wrenches);
      ++jitter_count;
    }
  }

  report.success_rate = n_episodes > 0 ? static_cast<double>(successes) / n_episodes : 0.0;
  report.e_pose = mean_std(pose_errors);
  report.e_vel = mean_std(vel_errors);
  if (!all_applied.empty()) report.impulse = impulse_statistics(all_applied);
  report.jitter_value = jitter_count > 0 ? jitter_sum / jitter_count : 0.0;
  if (!beta_lin.empty()) {
    report.gates.beta_lin_mean = mean_std(beta_lin).mean;
    report.gates.beta_ang_mean = mean_std(beta_ang).mean;
    report.gates.beta_lin_min = *std::min_element(beta_lin.begin(), beta_lin.end());
    report.gates.beta_lin_max = *std::max_element(beta_lin.begin(), beta_lin.end());
    report.gates.beta_ang_min = *std::min_element(beta_ang.begin(), beta_ang.end());
    report.gates.beta_ang_max = *std::max_element(beta_ang.begin(), beta_ang.end());
  }
  return report;
}

}  // namespace impulsekit
