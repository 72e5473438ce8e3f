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

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "impulsekit/decomp.hpp"
#include "impulsekit/metrics.hpp"
#include "impulsekit/motion.hpp"
#include "impulsekit/policy.hpp"
#include "impulsekit/rng.hpp"
#include "impulsekit/sim.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct AblationFlags {
  bool disable_compass = false;
  bool disable_sparsity = false;
  bool naive_mode = false;
};

template <typename S>
struct RewardWeights {
  S w_pose = S(0.4), w_vel = S(0.2), w_root = S(0.3), w_impulse = S(0.1);
  S a_pose = S(2), a_vel = S(0.1), a_root = S(10);
};

template <typename S>
struct TrainConfig {
  S gamma = S(0.99);
  S gae_lambda = S(0.95);
  S clip_eps = S(0.2);
  S learning_rate = S(3e-4);
  int epochs = 4;
  int minibatch = 256;
  int env_count = 16;
  int iterations = 500;
  S w_compass = S(0.5);
  S w_sparsity = S(0.1);
  S lambda_m = S(1);
  S lambda_g = S(0.1);
  S gate_anchor = S(1);
  S compass_epsilon = S(1);
  S value_coef = S(0.5);
  S grad_clip = S(1);
  AblationFlags ablation;
  std::uint64_t seed = 0;
  S early_stop_success = S(0.95);
  int early_stop_patience = 20;
  std::vector<int> widths = {128, 64};
  int history_len = 4;

  void validate() const {
    if (!(gamma > S(0) && gamma <= S(1)) || !(gae_lambda > S(0) && gae_lambda <= S(1))) {
      throw_usage("train: gamma and gae_lambda must lie in (0, 1]");
    }
    if (!(clip_eps > S(0))) throw_usage("train: clip_eps must be > 0");
  }
};

/// A tracking task: everything needed to roll a policy against a
/// reference.
template <typename S>
struct TrackingTask {
  CharacterModel<S> model;
  ReferenceTrajectory<S> traj;  // with derivatives
  ImpulseProfile<S> baseline;
  PDGains<S> gains;
  SimParams<S> params;
  ObservationSpec spec;
  RewardWeights<S> reward;
};

// ---------------------------------------------------------------------------
// Reward, GAE
// ---------------------------------------------------------------------------

/// Exponential tracking reward minus a quadratic penalty on the residual
/// impulse that was actually injected.
template <typename S>
S tracking_reward(const CharacterModel<S>& model, const GeneralizedState<S>& state,
                  const GeneralizedState<S>& ref_frame, const Vec6<S>& applied_residual,
                  const RewardWeights<S>& w) {
  const S e_pose = pose_error(model, state, ref_frame);
  const S e_vel = velocity_error(state, ref_frame);
  const S root_err2 = (state.base_pos - ref_frame.base_pos).squaredNorm();
  return w.w_pose * std::exp(-w.a_pose * e_pose) + w.w_vel * std::exp(-w.a_vel * e_vel) +
         w.w_root * std::exp(-w.a_root * root_err2) -
         w.w_impulse * applied_residual.squaredNorm();
}

struct GaeResult {
  VecXd advantages;
  VecXd value_targets;
};

/// Generalized advantage estimation over a (possibly multi-episode)
/// batch. dones mark episode ends; bootstrap_value is the value of the
/// state following the last step when the batch ends mid-episode.
inline GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
                     const std::vector<std::uint8_t>& dones, double gamma, double lam,
                     double bootstrap_value = 0.0) {
  const int n = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != n || static_cast<int>(dones.size()) != n) {
    throw_validation("gae: length mismatch");
  }
  GaeResult out;
  out.advantages = VecXd::Zero(n);
  out.value_targets = VecXd::Zero(n);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (int t = n - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * not_done - values[t];
    next_adv = delta + gamma * lam * not_done * next_adv;
    out.advantages(t) = next_adv;
    next_value = values[t];
  }
  for (int t = 0; t < n; ++t) out.value_targets(t) = out.advantages(t) + values[t];
  return out;
}

// ---------------------------------------------------------------------------
// Rollout collection
// ---------------------------------------------------------------------------

template <typename S>
struct RolloutBatch {
  std::vector<VecX<S>> obs;
  std::vector<VecX<S>> actions;  // sampled raw action (n + res_dim)
  std::vector<S> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<Vec6<S>> impulse_base;
  std::vector<Vec6<S>> wrench_ref;  // analytical wrench, compass source
  VecXd advantages;
  VecXd value_targets;

  int episodes = 0;
  int successes = 0;
  double mean_body_error = 0.0;  // averaged over episodes
  double mean_beta_lin = 0.0, mean_beta_ang = 0.0, mean_m = 0.0;

  int size() const { return static_cast<int>(obs.size()); }
};

namespace detail {

/// Assembles the distribution mean and (clamped) log-std for a forward.
template <typename S>
void action_distribution(const PolicyNet<S>& net, const typename PolicyNet<S>::Forward& fwd,
                         VecX<S>* mean, VecX<S>* log_std) {
  const int rd = net.res_dim();
  mean->resize(net.n_joints + rd);
  log_std->resize(net.n_joints + rd);
  mean->head(net.n_joints) = fwd.mu_kin;
  mean->tail(rd) = fwd.raw_res.head(rd);
  log_std->head(net.n_joints) = net.log_std_kin;
  log_std->tail(rd) = net.log_std_res.head(rd);
}

/// Decodes a sampled raw action into the control quantities.
template <typename S>
void decode_control(const PolicyNet<S>& net, const VecX<S>& action,
                    const ReferenceTrajectory<S>& traj, int target_frame,
                    ControllerOutput<S>* out, ResidualAction<S>* res_action) {
  const VecX<S> res_raw = action.tail(net.res_dim());
  out->joint_targets =
      traj.frames[target_frame].joint_pos + action.head(net.n_joints);
  if (net.naive_mode) {
    out->residual_impulse = naive_impulse(res_raw, net.sigma_lin, net.sigma_ang);
    out->beta_lin = S(0);
    out->beta_ang = S(0);
    if (res_action) *res_action = ResidualAction<S>{};
  } else {
    const ResidualAction<S> a = decode_residual(res_raw, net.sigma_lin, net.sigma_ang);
    out->residual_impulse = residual_impulse(a);
    out->beta_lin = a.beta_lin;
    out->beta_ang = a.beta_ang;
    if (res_action) *res_action = a;
  }
}

}  // namespace detail

/// The residual contribution that actually reaches the simulator: the
/// gated share of I_res per block (the full impulse in naive mode).
template <typename S>
Vec6<S> applied_residual_part(const ControllerOutput<S>& out) {
  Vec6<S> part;
  part.template head<3>() = (S(1) - out.beta_lin) * out.residual_impulse.template head<3>();
  part.template tail<3>() = (S(1) - out.beta_ang) * out.residual_impulse.template tail<3>();
  return part;
}

/// Runs one stochastic episode and appends it to the batch.
template <typename S>
void collect_episode(const PolicyNet<S>& policy, const CriticNet<S>& critic,
                     const TrackingTask<S>& task, std::uint64_t episode_seed,
                     RolloutBatch<S>& batch) {
  Pcg32 rng(episode_seed, 3u);
  const S dt_control = task.params.dt_control();

  SimState<S> state;
  state.gs = task.traj.frames[0];
  state.gs.set_velocity(task.traj.derived_vel[0]);
  state.last_pd_torques = VecX<S>::Zero(task.model.n_joints());
  std::deque<Vec6<S>> history;

  const int n_steps = task.traj.n_frames() - 1;
  double body_error_sum = 0.0;
  int steps_done = 0;
  bool terminated = false;

  for (int k = 0; k < n_steps; ++k) {
    const int target_frame = k + 1;
    const VecX<S> obs =
        build_observation(task.model, state, task.traj, k, history, task.spec);
    const auto fwd = policy.forward(obs);
    VecX<S> mean, log_std;
    detail::action_distribution(policy, fwd, &mean, &log_std);
    VecX<S> action(mean.size());
    for (int i = 0; i < mean.size(); ++i) {
      action(i) = mean(i) + std::exp(clamp_log_std(log_std(i))) * S(rng.normal());
    }

    ControllerOutput<S> out;
    ResidualAction<S> res_action;
    detail::decode_control(policy, action, task.traj, target_frame, &out, &res_action);

    const Vec6<S>& impulse_base = task.baseline.frames[k].impulse;
    const Vec6<S> impulse_total =
        compose_impulse(impulse_base, out.residual_impulse, out.beta_lin, out.beta_ang);
    const SpatialWrench<S> wrench = impulse_to_wrench(impulse_total, dt_control);

    for (int sub = 0; sub < task.params.control_decimation; ++sub) {
      const VecX<S> tau =
          pd_torques(state.gs.joint_pos, state.gs.joint_vel, out.joint_targets, task.gains);
      state = step(task.model, state, tau, wrench, task.params, &task.gains);
    }
    history.push_front(impulse_total);
    while (static_cast<int>(history.size()) > task.spec.history_len) history.pop_back();

    const auto& ref = task.traj.frames[target_frame];
    const S reward =
        tracking_reward(task.model, state.gs, ref, applied_residual_part(out), task.reward);
    terminated = termination_check(state, ref, task.params.termination);
    const bool done = terminated || k == n_steps - 1;

    batch.obs.push_back(obs);
    batch.actions.push_back(action);
    batch.log_probs.push_back(gaussian_log_prob(action, mean, log_std));
    batch.rewards.push_back(static_cast<double>(reward));
    batch.values.push_back(static_cast<double>(critic.value(obs)));
    batch.dones.push_back(done ? 1 : 0);
    batch.impulse_base.push_back(impulse_base);
    batch.wrench_ref.push_back(task.baseline.frames[k].wrench);
    batch.mean_beta_lin += static_cast<double>(out.beta_lin);
    batch.mean_beta_ang += static_cast<double>(out.beta_ang);
    batch.mean_m +=
        static_cast<double>(res_action.m_lin + res_action.m_ang) / 2.0;

    body_error_sum += static_cast<double>(
        mean_body_position_error(task.model, state.gs, ref));
    ++steps_done;
    if (done) break;
  }

  batch.episodes += 1;
  if (!terminated) batch.successes += 1;
  batch.mean_body_error += steps_done > 0 ? body_error_sum / steps_done : 0.0;
}

// ---------------------------------------------------------------------------
// PPO update
// ---------------------------------------------------------------------------

template <typename S>
struct Adam {
  VecX<S> m;
  VecX<S> v;
  S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
  int t = 0;

  void step(VecX<S>& params, const VecX<S>& grad, S lr) {
    if (m.size() != params.size()) {
      m = VecX<S>::Zero(params.size());
      v = VecX<S>::Zero(params.size());
    }
    ++t;
    m = beta1 * m + (S(1) - beta1) * grad;
    v = beta2 * v + (S(1) - beta2) * grad.cwiseProduct(grad);
    const S bc1 = S(1) - std::pow(beta1, S(t));
    const S bc2 = S(1) - std::pow(beta2, S(t));
    const VecX<S> denom =
        (v / bc2).cwiseSqrt() + VecX<S>::Constant(params.size(), eps);
    params -= (lr / bc1) * m.cwiseQuotient(denom);
  }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double compass_loss = 0.0;
  double sparsity_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

namespace detail {

/// Accumulates the gradient of the total objective for one sample into
/// policy/critic grads. Returns the per-sample loss terms.
template <typename S>
void sample_backward(const PolicyNet<S>& policy, const CriticNet<S>& critic,
                     const RolloutBatch<S>& batch, int idx, double advantage,
                     double value_target, const TrainConfig<S>& cfg, PolicyNet<S>& pgrad,
                     CriticNet<S>& cgrad, UpdateStats& stats) {
  const VecX<S>& obs = batch.obs[idx];
  const VecX<S>& action = batch.actions[idx];
  const auto fwd = policy.forward(obs);
  VecX<S> mean, log_std;
  action_distribution(policy, fwd, &mean, &log_std);

  const S logp_new = gaussian_log_prob(action, mean, log_std);
  const S ratio = std::exp(logp_new - batch.log_probs[idx]);
  const S clipped = std::min(std::max(ratio, S(1) - cfg.clip_eps), S(1) + cfg.clip_eps);
  const S adv = S(advantage);
  const S surr1 = ratio * adv;
  const S surr2 = clipped * adv;
  stats.policy_loss += static_cast<double>(-std::min(surr1, surr2));
  stats.approx_kl += static_cast<double>(batch.log_probs[idx] - logp_new);
  if (surr2 < surr1) stats.clip_fraction += 1.0;

  // d(-min(surr1, surr2)) / d logp_new
  S dlogp = S(0);
  if (surr1 <= surr2) {
    dlogp = -adv * ratio;
  } else if (ratio > S(1) - cfg.clip_eps && ratio < S(1) + cfg.clip_eps) {
    dlogp = -adv * ratio;
  }

  VecX<S> d_mean_lp, d_log_std_lp;
  gaussian_log_prob_grad(action, mean, log_std, &d_mean_lp, &d_log_std_lp);

  VecX<S> d_mu_kin = dlogp * d_mean_lp.head(policy.n_joints);
  VecX<S> d_raw = VecX<S>::Zero(kResidualRawDim);
  d_raw.head(policy.res_dim()) = dlogp * d_mean_lp.tail(policy.res_dim());
  pgrad.log_std_kin += dlogp * d_log_std_lp.head(policy.n_joints);
  pgrad.log_std_res.head(policy.res_dim()) += dlogp * d_log_std_lp.tail(policy.res_dim());

  // Auxiliary physics losses act on the deterministic head outputs.
  if (!policy.naive_mode) {
    if (!cfg.ablation.disable_compass && cfg.w_compass > S(0)) {
      Vec3<S> grad_lin, grad_ang;
      const Vec3<S> f_ref = batch.wrench_ref[idx].template head<3>();
      const Vec3<S> t_ref = batch.wrench_ref[idx].template tail<3>();
      const S loss_lin = compass_loss_raw<S>(fwd.raw_res.template head<3>(), f_ref,
                                             cfg.compass_epsilon, &grad_lin);
      const S loss_ang = compass_loss_raw<S>(fwd.raw_res.template segment<3>(3), t_ref,
                                             cfg.compass_epsilon, &grad_ang);
      stats.compass_loss += static_cast<double>(loss_lin + loss_ang);
      d_raw.template head<3>() += cfg.w_compass * grad_lin;
      d_raw.template segment<3>(3) += cfg.w_compass * grad_ang;
    }
    if (!cfg.ablation.disable_sparsity && cfg.w_sparsity > S(0)) {
      Eigen::Matrix<S, 4, 1> grad_ms;
      const S loss = sparsity_loss_raw<S>(fwd.raw_res.template segment<4>(6), cfg.lambda_m,
                                          cfg.lambda_g, cfg.gate_anchor, &grad_ms);
      stats.sparsity_loss += static_cast<double>(loss);
      d_raw.template segment<4>(6) += cfg.w_sparsity * grad_ms;
    }
  }

  // Heads -> trunk.
  VecX<S> d_hidden = policy.w_kin.transpose() * d_mu_kin;
  d_hidden += policy.w_res.transpose() * d_raw;
  pgrad.w_kin += d_mu_kin * fwd.trunk_cache.post.back().transpose();
  pgrad.b_kin += d_mu_kin;
  pgrad.w_res += d_raw * fwd.trunk_cache.post.back().transpose();
  pgrad.b_res += d_raw;
  policy.trunk.backward(fwd.trunk_cache, d_hidden, &pgrad.trunk);

  // Critic regression.
  typename Mlp<S>::Cache vcache;
  const S v = critic.value(obs, &vcache);
  const S dv = S(2) * cfg.value_coef * (v - S(value_target));
  stats.value_loss += static_cast<double>((v - S(value_target)) * (v - S(value_target)));
  const VecX<S> d_vh = critic.w_value.transpose() * VecX<S>::Constant(1, dv);
  cgrad.w_value += dv * vcache.post.back().transpose();
  cgrad.b_value(0) += dv;
  critic.trunk.backward(vcache, d_vh, &cgrad.trunk);
}

template <typename S>
void clip_and_apply(PolicyNet<S>& policy, CriticNet<S>& critic, PolicyNet<S>& pgrad,
                    CriticNet<S>& cgrad, Adam<S>& popt, Adam<S>& copt,
                    const TrainConfig<S>& cfg, int batch_size) {
  const S inv = S(1) / S(batch_size);
  VecX<S> pg = pgrad.to_vector() * inv;
  VecX<S> cg = cgrad.to_vector() * inv;
  if (!pg.allFinite() || !cg.allFinite()) {
    throw Error(ErrorKind::kDivergence, "ppo_update: non-finite gradient");
  }
  const S norm = std::sqrt(pg.squaredNorm() + cg.squaredNorm());
  if (norm > cfg.grad_clip) {
    pg *= cfg.grad_clip / norm;
    cg *= cfg.grad_clip / norm;
  }
  VecX<S> pparams = policy.to_vector();
  VecX<S> cparams = critic.to_vector();
  popt.step(pparams, pg, cfg.learning_rate);
  copt.step(cparams, cg, cfg.learning_rate);
  policy.from_vector(pparams);
  critic.from_vector(cparams);
}

}  // namespace detail

/// One PPO update over a collected batch: normalized advantages, clipped
/// surrogate, value regression, and the physics-regularization terms.
template <typename S>
UpdateStats ppo_update(PolicyNet<S>& policy, CriticNet<S>& critic, RolloutBatch<S>& batch,
                       const TrainConfig<S>& cfg, Adam<S>& popt, Adam<S>& copt,
                       std::uint64_t shuffle_seed) {
  if (batch.size() == 0) throw_usage("ppo_update: empty batch");
  const GaeResult g = gae(batch.rewards, batch.values, batch.dones,
                          static_cast<double>(cfg.gamma), static_cast<double>(cfg.gae_lambda));
  batch.value_targets = g.value_targets;

  // Normalize advantages (mean 0, std 1, floored).
  const double mean = g.advantages.mean();
  const double stdev =
      std::sqrt((g.advantages.array() - mean).square().sum() / g.advantages.size());
  batch.advantages = (g.advantages.array() - mean) / std::max(stdev, 1e-8);

  Pcg32 rng(shuffle_seed, 17u);
  std::vector<int> indices(batch.size());
  std::iota(indices.begin(), indices.end(), 0);

  UpdateStats total;
  int stat_samples = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own RNG, for cross-platform determinism.
    for (int i = batch.size() - 1; i > 0; --i) {
      std::swap(indices[i], indices[rng.uniform_int(0, i)]);
    }
    for (int start = 0; start < batch.size(); start += cfg.minibatch) {
      const int end = std::min(start + cfg.minibatch, batch.size());
      PolicyNet<S> pgrad = policy;
      CriticNet<S> cgrad = critic;
      pgrad.from_vector(VecX<S>::Zero(pgrad.param_count()));
      cgrad.from_vector(VecX<S>::Zero(cgrad.param_count()));
      UpdateStats stats;
      for (int i = start; i < end; ++i) {
        const int idx = indices[i];
        detail::sample_backward(policy, critic, batch, idx, batch.advantages(idx),
                                batch.value_targets(idx), cfg, pgrad, cgrad, stats);
      }
      detail::clip_and_apply(policy, critic, pgrad, cgrad, popt, copt, cfg, end - start);
      total.policy_loss += stats.policy_loss;
      total.value_loss += stats.value_loss;
      total.compass_loss += stats.compass_loss;
      total.sparsity_loss += stats.sparsity_loss;
      total.clip_fraction += stats.clip_fraction;
      total.approx_kl += stats.approx_kl;
      stat_samples += end - start;
    }
  }
  if (stat_samples > 0) {
    total.policy_loss /= stat_samples;
    total.value_loss /= stat_samples;
    total.compass_loss /= stat_samples;
    total.sparsity_loss /= stat_samples;
    total.clip_fraction /= stat_samples;
    total.approx_kl /= stat_samples;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct CurveRow {
  int iteration = 0;
  double success_rate = 0.0;
  double mean_body_pos_error = 0.0;
  double ppo_loss = 0.0;
  double value_loss = 0.0;
  double compass_loss = 0.0;
  double sparsity_loss = 0.0;
  double mean_beta_lin = 0.0;
  double mean_beta_ang = 0.0;
  double mean_m = 0.0;
};

template <typename S>
struct TrainResult {
  PolicyNet<S> policy;
  CriticNet<S> critic;
  std::vector<CurveRow> curves;
  bool diverged = false;
  int stopped_at = -1;  // early-stop iteration, -1 if ran to the budget
};

/// Full training run on a tracking task. Rollout workers use fixed
/// per-env seeds so a zero learning rate yields exactly flat curves and
/// identical seeds yield identical checkpoints.
template <typename S>
TrainResult<S> train_loop(const TrackingTask<S>& task, const TrainConfig<S>& cfg) {
  cfg.validate();
  TrainConfig<S> resolved = cfg;
  if (resolved.ablation.naive_mode) {
    resolved.ablation.disable_compass = true;
    resolved.ablation.disable_sparsity = true;
  }

  TrainResult<S> result;
  result.policy =
      PolicyNet<S>::init(task.spec, resolved.widths, resolved.seed, resolved.ablation.naive_mode);
  result.critic = CriticNet<S>::init(task.spec, resolved.widths, resolved.seed + 1);
  Adam<S> popt, copt;

  PolicyNet<S> last_good_policy = result.policy;
  CriticNet<S> last_good_critic = result.critic;
  int streak = 0;

  for (int iter = 0; iter < resolved.iterations; ++iter) {
    RolloutBatch<S> batch;
    try {
      for (int env = 0; env < resolved.env_count; ++env) {
        collect_episode(result.policy, result.critic, task,
                        derive_seed(resolved.seed, static_cast<std::uint64_t>(env)), batch);
      }
      last_good_policy = result.policy;
      last_good_critic = result.critic;
      const UpdateStats stats =
          ppo_update(result.policy, result.critic, batch, resolved,
                     popt, copt, derive_seed(resolved.seed, 0x5a5a5a5aULL + iter));

      CurveRow row;
      row.iteration = iter;
      row.success_rate = static_cast<double>(batch.successes) / batch.episodes;
      row.mean_body_pos_error = batch.mean_body_error / batch.episodes;
      row.ppo_loss = stats.policy_loss;
      row.value_loss = stats.value_loss;
      row.compass_loss = stats.compass_loss;
      row.sparsity_loss = stats.sparsity_loss;
      row.mean_beta_lin = batch.mean_beta_lin / batch.size();
      row.mean_beta_ang = batch.mean_beta_ang / batch.size();
      row.mean_m = batch.mean_m / batch.size();
      result.curves.push_back(row);

      if (row.success_rate >= static_cast<double>(resolved.early_stop_success)) {
        if (++streak >= resolved.early_stop_patience) {
          result.stopped_at = iter;
          break;
        }
      } else {
        streak = 0;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kDivergence) {
        result.policy = last_good_policy;
        result.critic = last_good_critic;
        result.diverged = true;
        break;
      }
      throw;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Deterministic policy controller for evaluation rollouts
// ---------------------------------------------------------------------------

template <typename S>
Controller<S> policy_controller(const PolicyNet<S>& net, const CharacterModel<S>& model,
                                const ReferenceTrajectory<S>& traj, const ObservationSpec& spec) {
  auto history = std::make_shared<std::deque<Vec6<S>>>();
  Controller<S> c;
  c.act = [&net, &model, &traj, spec, history](const SimState<S>& state, int k) {
    const VecX<S> obs = build_observation(model, state, traj, k, *history, spec);
    const auto fwd = net.forward(obs);
    VecX<S> action(net.action_dim());
    action.head(net.n_joints) = fwd.mu_kin;
    action.tail(net.res_dim()) = fwd.raw_res.head(net.res_dim());
    ControllerOutput<S> out;
    detail::decode_control<S>(net, action, traj, std::min(k + 1, traj.n_frames() - 1), &out,
                              nullptr);
    return out;
  };
  c.on_applied = [history, spec](const Vec6<S>& impulse) {
    history->push_front(impulse);
    while (static_cast<int>(history->size()) > spec.history_len) history->pop_back();
  };
  return c;
}

// ---------------------------------------------------------------------------
// Toy tasks
// ---------------------------------------------------------------------------

template <typename S>
CharacterModel<S> make_free_body_model(S mass = S(5), S inertia = S(0.1),
                                       const std::string& name = "body") {
  CharacterModel<S> model;
  LinkParams<S> link;
  link.name = name;
  link.mass = mass;
  link.inertia = Mat3<S>::Identity() * inertia;
  model.links.push_back(link);
  model.finalize();
  return model;
}

template <typename S>
CharacterModel<S> make_chain_model(int n_links, S link_mass = S(2), S link_length = S(0.4)) {
  CharacterModel<S> model;
  for (int i = 0; i < n_links; ++i) {
    LinkParams<S> link;
    link.name = "link" + std::to_string(i);
    link.mass = link_mass;
    link.inertia = (Vec3<S>(S(0.02), S(0.02), S(0.004))).asDiagonal();
    link.com_offset = Vec3<S>(S(0), S(0), -link_length / S(2));
    model.links.push_back(link);
  }
  for (int i = 1; i < n_links; ++i) {
    JointParams<S> joint;
    joint.name = "joint" + std::to_string(i - 1);
    joint.parent_link = i - 1;
    joint.child_link = i;
    joint.axis = i % 2 == 0 ? Vec3<S>::UnitY() : Vec3<S>::UnitX();
    joint.origin_pos = Vec3<S>(S(0), S(0), -link_length);
    model.joints.push_back(joint);
  }
  model.finalize();
  return model;
}

template <typename S>
TrackingTask<S> make_tracking_task(CharacterModel<S> model, MotionKind kind,
                                   const MotionParams<S>& motion, S kp, S kd) {
  TrackingTask<S> task;
  task.model = std::move(model);
  task.traj = finite_difference_derivatives(synthesize_exaggerated(kind, motion, task.model));

  AnalyzeParams<S> analyze_params;
  const auto analysis = analyze(task.model, task.traj, analyze_params);
  task.baseline = analysis.profile;

  task.gains = PDGains<S>::uniform(task.model.n_joints(), kp, kd, true);
  task.params.dt = motion.dt / S(2);
  task.params.control_decimation = 2;
  task.params.termination.max_root_error = S(0.5);
  task.params.termination.min_root_height =
      S(0.3) * std::max(task.traj.frames[0].base_pos.z(), S(0.1));
  task.spec.n_joints = task.model.n_joints();
  task.spec.n_links = task.model.n_links();
  return task;
}

/// Single free rigid body (5 kg) holding altitude through a horizontal
/// dash: entirely assist-driven, no contacts, no joints.
template <typename S>
TrackingTask<S> make_free_body_dash_task() {
  MotionParams<S> motion;
  motion.duration = S(2);
  motion.dt = S(1.0 / 30.0);
  motion.peak_speed = S(2);
  motion.dash_window = S(0.6);
  motion.apex_height = S(1);
  return make_tracking_task(make_free_body_model<S>(), MotionKind::kAerialDash, motion, S(0),
                            S(0));
}

/// 3-link chain tracking a dash with PD-actuated joints.
template <typename S>
TrackingTask<S> make_chain_dash_task() {
  MotionParams<S> motion;
  motion.duration = S(2);
  motion.dt = S(1.0 / 30.0);
  motion.peak_speed = S(2);
  motion.dash_window = S(0.6);
  motion.apex_height = S(1);
  return make_tracking_task(make_chain_model<S>(3), MotionKind::kAerialDash, motion, S(60),
                            S(3));
}

}  // namespace impulsekit
