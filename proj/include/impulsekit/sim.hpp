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

#include <functional>
#include <vector>

#include "impulsekit/contact.hpp"
#include "impulsekit/decomp.hpp"
#include "impulsekit/dynamics.hpp"
#include "impulsekit/fusion.hpp"
#include "impulsekit/kinematics.hpp"
#include "impulsekit/model.hpp"
#include "impulsekit/rng.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

template <typename S>
struct SimState {
  GeneralizedState<S> gs;
  S time = S(0);
  // Last applied actuation, for telemetry and observation building.
  VecX<S> last_pd_torques;
  Vec6<S> last_root_wrench = Vec6<S>::Zero();
  std::vector<Vec3<S>> last_contact_forces;
};

template <typename S>
struct PDGains {
  VecX<S> kp;
  VecX<S> kd;
  bool implicit_damping = false;

  static PDGains uniform(int n, S kp_val, S kd_val, bool implicit = false) {
    PDGains g;
    g.kp = VecX<S>::Constant(n, kp_val);
    g.kd = VecX<S>::Constant(n, kd_val);
    g.implicit_damping = implicit;
    return g;
  }
};

template <typename S>
struct GroundParams {
  S k_normal = S(2e4);    // N/m
  S d_normal = S(200);    // N*s/m
  S k_tangent = S(1e3);   // N*s/m, viscous slope before the Coulomb clamp
  S mu = S(0.8);
  std::vector<ContactSite<S>> sites;
};

template <typename S>
struct TerminationParams {
  S max_root_error = S(0.5);   // m
  S min_root_height = S(0);    // m, absolute
};

template <typename S>
struct SimParams {
  S dt = S(1.0 / 60.0);
  int control_decimation = 2;
  GroundParams<S> ground;
  TerminationParams<S> termination;

  S dt_control() const { return dt * S(control_decimation); }
};

/// Explicit PD law: tau_i = kp_i (target_i - q_i) - kd_i v_i.
template <typename S>
VecX<S> pd_torques(const VecX<S>& q_joints, const VecX<S>& v_joints, const VecX<S>& targets,
                   const PDGains<S>& gains) {
  const auto n = q_joints.size();
  if (v_joints.size() != n || targets.size() != n || gains.kp.size() != n ||
      gains.kd.size() != n) {
    throw_validation("pd_torques: dimension mismatch");
  }
  return gains.kp.cwiseProduct(targets - q_joints) - gains.kd.cwiseProduct(v_joints);
}

template <typename S>
struct ContactForce {
  int site = 0;
  Vec3<S> world_point = Vec3<S>::Zero();
  Vec3<S> force = Vec3<S>::Zero();
};

/// Penalty ground model: spring-damper normal force with a Coulomb-clamped
/// viscous tangential force, for every site below the z = 0 plane.
template <typename S>
std::vector<ContactForce<S>> ground_contact_forces(const CharacterModel<S>& model,
                                                   const GeneralizedState<S>& gs,
                                                   const GroundParams<S>& params) {
  std::vector<ContactForce<S>> forces;
  if (params.sites.empty()) return forces;
  const auto poses = forward_kinematics(model, gs);
  const VecX<S> v = gs.stacked_velocity();
  for (int i = 0; i < static_cast<int>(params.sites.size()); ++i) {
    const auto& site = params.sites[i];
    const Vec3<S> p =
        poses[site.link].position + poses[site.link].rotation * site.local_point;
    if (p.z() >= S(0)) continue;
    const Vec3<S> vel = point_jacobian(model, poses, site.link, site.local_point) * v;
    const S normal = std::max(S(0), -params.k_normal * p.z() - params.d_normal * vel.z());
    if (normal <= S(0)) continue;
    Vec3<S> f(S(0), S(0), normal);
    const Vec3<S> v_t(vel.x(), vel.y(), S(0));
    const S speed = v_t.norm();
    if (speed > S(1e-12)) {
      const S mag = std::min(params.mu * normal, params.k_tangent * speed);
      f -= (mag / speed) * v_t;
    }
    forces.push_back({i, p, f});
  }
  return forces;
}

/// One semi-implicit Euler step. Velocities update from the generalized
/// accelerations, positions integrate the new velocities; the base
/// quaternion advances by the exponential map of the new angular velocity
/// and is renormalized. When implicit_gains is given, joint damping acts on
/// the post-step velocity (the torques passed in must still contain the
/// explicit -kd v term).
template <typename S>
SimState<S> step(const CharacterModel<S>& model, const SimState<S>& state,
                 const VecX<S>& joint_torques, const SpatialWrench<S>& root_wrench,
                 const SimParams<S>& params, const PDGains<S>* implicit_gains = nullptr,
                 const VecX<S>* extra_generalized_force = nullptr) {
  const int n = model.n_joints();
  const int nv = model.n_vel();
  if (joint_torques.size() != n) throw_validation("step: torque dimension mismatch");
  if (!(params.dt > S(0))) throw_validation("step: dt must be > 0");

  const GeneralizedState<S>& gs = state.gs;
  const VecX<S> v = gs.stacked_velocity();

  VecX<S> gf = VecX<S>::Zero(nv);
  gf.template head<3>() = root_wrench.force;
  gf.template segment<3>(3) = root_wrench.torque;
  gf.tail(n) = joint_torques;
  if (extra_generalized_force) gf += *extra_generalized_force;

  const auto contact = ground_contact_forces(model, gs, params.ground);
  const auto poses = forward_kinematics(model, gs);
  for (const auto& cf : contact) {
    const auto& site = params.ground.sites[cf.site];
    gf += point_jacobian(model, poses, site.link, site.local_point).transpose() * cf.force;
  }

  MatX<S> m = mass_matrix(model, gs);
  if (implicit_gains && implicit_gains->implicit_damping) {
    for (int i = 0; i < n; ++i) m(6 + i, 6 + i) += params.dt * implicit_gains->kd(i);
  }
  Eigen::LDLT<MatX<S>> ldlt(m);
  const VecX<S> diag = ldlt.vectorD();
  if (!(diag.minCoeff() > S(0))) {
    const S cond = diag.maxCoeff() / std::max(diag.minCoeff(), S(1e-300));
    throw Error(ErrorKind::kNonConvergence,
                "step: singular mass matrix, condition ~" + std::to_string(cond));
  }
  const VecX<S> accel = ldlt.solve(gf - bias_forces(model, gs, v));

  SimState<S> next = state;
  const VecX<S> v_new = v + params.dt * accel;
  next.gs.set_velocity(v_new);
  next.gs.base_pos += params.dt * v_new.template head<3>();
  next.gs.base_quat =
      quat_exp<S>(Vec3<S>(params.dt * v_new.template segment<3>(3))) * gs.base_quat;
  next.gs.base_quat.normalize();
  next.gs.joint_pos += params.dt * v_new.tail(n);
  next.time += params.dt;

  next.last_pd_torques = joint_torques;
  if (implicit_gains && implicit_gains->implicit_damping) {
    next.last_pd_torques -= params.dt * implicit_gains->kd.cwiseProduct(accel.tail(n));
  }
  next.last_root_wrench = root_wrench.stacked();
  next.last_contact_forces.clear();
  for (const auto& cf : contact) next.last_contact_forces.push_back(cf.force);
  return next;
}

/// True iff the root has drifted past the error bound or fallen.
template <typename S>
bool termination_check(const SimState<S>& state, const GeneralizedState<S>& ref_frame,
                       const TerminationParams<S>& params) {
  if ((state.gs.base_pos - ref_frame.base_pos).norm() > params.max_root_error) return true;
  return state.gs.base_pos.z() < params.min_root_height;
}

// ---------------------------------------------------------------------------
// Perturbation harness
// ---------------------------------------------------------------------------

template <typename S>
struct PerturbationEvent {
  int start_step = 0;       // sim steps
  int duration_steps = 0;   // sim steps
  Vec3<S> force = Vec3<S>::Zero();
  Vec3<S> torque = Vec3<S>::Zero();
  int target_link = 0;
};

template <typename S>
struct PerturbationSchedule {
  std::vector<PerturbationEvent<S>> events;
};

struct PerturbationRanges {
  double gap_lo = 20, gap_hi = 80;        // steps
  double duration_lo = 3, duration_hi = 12;
  double force_lo = 100, force_hi = 500;  // N
  double torque_lo = 20, torque_hi = 50;  // N*m
};

template <typename S>
PerturbationSchedule<S> sample_perturbations(std::uint64_t seed, int horizon_steps,
                                             const PerturbationRanges& ranges = {},
                                             int target_link = 0) {
  if (horizon_steps < 0) throw_usage("sample_perturbations: empty horizon");
  PerturbationSchedule<S> schedule;
  Pcg32 rng(seed);
  int t = 0;
  while (true) {
    t += rng.uniform_int(static_cast<int>(ranges.gap_lo), static_cast<int>(ranges.gap_hi));
    if (t >= horizon_steps) break;
    PerturbationEvent<S> ev;
    ev.start_step = t;
    ev.duration_steps =
        rng.uniform_int(static_cast<int>(ranges.duration_lo), static_cast<int>(ranges.duration_hi));
    ev.force = Vec3<S>(rng.unit_vector().template cast<S>()) *
               S(rng.uniform(ranges.force_lo, ranges.force_hi));
    ev.torque = Vec3<S>(rng.unit_vector().template cast<S>()) *
                S(rng.uniform(ranges.torque_lo, ranges.torque_hi));
    ev.target_link = target_link;
    schedule.events.push_back(ev);
    t += ev.duration_steps;
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

template <typename S>
struct ControllerOutput {
  VecX<S> joint_targets;                    // empty -> track the reference
  Vec6<S> residual_impulse = Vec6<S>::Zero();
  S beta_lin = S(1);
  S beta_ang = S(1);
};

/// Closed-loop controller interface. `act` is queried once per control
/// step; `on_applied` (optional) reports the fused impulse that was
/// actually injected, letting policies maintain their impulse history.
template <typename S>
struct Controller {
  std::function<ControllerOutput<S>(const SimState<S>&, int)> act;
  std::function<void(const Vec6<S>&)> on_applied;
};

template <typename S>
Controller<S> open_loop_controller() {
  Controller<S> c;
  c.act = [](const SimState<S>&, int) { return ControllerOutput<S>{}; };
  return c;
}

template <typename S>
struct AppliedImpulse {
  Vec6<S> base = Vec6<S>::Zero();
  Vec6<S> res = Vec6<S>::Zero();
  Vec6<S> total = Vec6<S>::Zero();
  S beta_lin = S(1);
  S beta_ang = S(1);
};

template <typename S>
struct TelemetryRow {
  S t = S(0);
  S root_error = S(0);
  S cum_mean_body_error = S(0);
  Vec6<S> wrench = Vec6<S>::Zero();
  Vec3<S> contact_force_sum = Vec3<S>::Zero();
  bool terminated = false;
};

template <typename S>
struct RolloutResult {
  std::vector<SimState<S>> states;       // state after each control step
  std::vector<TelemetryRow<S>> telemetry;
  std::vector<AppliedImpulse<S>> applied;
  int terminated_at = -1;                // control step index, -1 if completed
  bool success = false;

  S final_cum_error() const {
    return telemetry.empty() ? S(0) : telemetry.back().cum_mean_body_error;
  }
};

/// Mean world-frame position error over all links.
template <typename S>
S mean_body_position_error(const CharacterModel<S>& model, const GeneralizedState<S>& sim_gs,
                           const GeneralizedState<S>& ref_gs) {
  const auto sim_poses = forward_kinematics(model, sim_gs);
  const auto ref_poses = forward_kinematics(model, ref_gs);
  S sum = S(0);
  for (int l = 0; l < model.n_links(); ++l) {
    sum += (sim_poses[l].position - ref_poses[l].position).norm();
  }
  return sum / S(model.n_links());
}

/// Runs the simulator against a reference trajectory, fusing the baseline
/// impulse with the controller's residual each control step. The baseline
/// profile must be sampled at the control rate (traj.dt == sim dt *
/// decimation). Deterministic for fixed inputs.
template <typename S>
RolloutResult<S> rollout_closed_loop(const CharacterModel<S>& model,
                                     const ReferenceTrajectory<S>& traj,
                                     const ImpulseProfile<S>& baseline,
                                     const Controller<S>& controller, const PDGains<S>& gains,
                                     const SimParams<S>& params,
                                     const PerturbationSchedule<S>* perturbations = nullptr,
                                     const SimState<S>* initial_state = nullptr) {
  if (!traj.has_derivatives()) {
    throw_validation("rollout: trajectory lacks derivatives");
  }
  if (baseline.n_frames() < traj.n_frames()) {
    throw_validation("rollout: baseline profile shorter than trajectory");
  }
  const S dt_control = params.dt_control();
  if (std::abs(traj.dt - dt_control) > S(1e-9)) {
    throw_validation("rollout: trajectory rate must equal the control rate");
  }

  RolloutResult<S> result;
  SimState<S> state;
  if (initial_state) {
    state = *initial_state;
  } else {
    state.gs = traj.frames[0];
    state.gs.set_velocity(traj.derived_vel[0]);
  }
  state.last_pd_torques = VecX<S>::Zero(model.n_joints());

  const int n_steps = traj.n_frames() - 1;
  S error_accum = S(0);
  int sim_step = 0;

  for (int k = 0; k < n_steps; ++k) {
    const int target_frame = k + 1;
    ControllerOutput<S> out = controller.act ? controller.act(state, k) : ControllerOutput<S>{};
    const Vec6<S>& impulse_base = baseline.frames[k].impulse;
    const Vec6<S> impulse_total =
        compose_impulse(impulse_base, out.residual_impulse, out.beta_lin, out.beta_ang);
    const SpatialWrench<S> wrench = impulse_to_wrench(impulse_total, dt_control);

    const VecX<S>& targets = out.joint_targets.size() == model.n_joints()
                                 ? out.joint_targets
                                 : traj.frames[target_frame].joint_pos;

    for (int sub = 0; sub < params.control_decimation; ++sub, ++sim_step) {
      VecX<S> extra;
      if (perturbations) {
        for (const auto& ev : perturbations->events) {
          if (sim_step >= ev.start_step && sim_step < ev.start_step + ev.duration_steps) {
            if (extra.size() == 0) extra = VecX<S>::Zero(model.n_vel());
            extra += wrench_to_generalized<S>(model, forward_kinematics(model, state.gs),
                                              ev.target_link, Vec3<S>::Zero(), ev.force,
                                              ev.torque);
          }
        }
      }
      const VecX<S> tau =
          pd_torques(state.gs.joint_pos, state.gs.joint_vel, targets, gains);
      state = step(model, state, tau, wrench, params, &gains,
                   extra.size() ? &extra : nullptr);
    }

    if (controller.on_applied) controller.on_applied(impulse_total);

    AppliedImpulse<S> applied;
    applied.base = impulse_base;
    applied.res = out.residual_impulse;
    applied.total = impulse_total;
    applied.beta_lin = out.beta_lin;
    applied.beta_ang = out.beta_ang;
    result.applied.push_back(applied);

    const auto& ref = traj.frames[target_frame];
    const S body_err = mean_body_position_error(model, state.gs, ref);
    error_accum += body_err;

    TelemetryRow<S> row;
    row.t = state.time;
    row.root_error = (state.gs.base_pos - ref.base_pos).norm();
    row.cum_mean_body_error = error_accum / S(k + 1);
    row.wrench = wrench.stacked();
    for (const auto& f : state.last_contact_forces) row.contact_force_sum += f;
    row.terminated = termination_check(state, ref, params.termination);
    result.telemetry.push_back(row);
    result.states.push_back(state);

    if (row.terminated) {
      result.terminated_at = k;
      break;
    }
  }
  result.success = result.terminated_at < 0;
  return result;
}

/// Open-loop replay: PD toward the reference plus the blind time-indexed
/// baseline wrench (gates closed, zero residual).
template <typename S>
RolloutResult<S> rollout_open_loop(const CharacterModel<S>& model,
                                   const ReferenceTrajectory<S>& traj,
                                   const ImpulseProfile<S>& baseline, const PDGains<S>& gains,
                                   const SimParams<S>& params,
                                   const PerturbationSchedule<S>* perturbations = nullptr) {
  return rollout_closed_loop(model, traj, baseline, open_loop_controller<S>(), gains, params,
                             perturbations);
}

// ---------------------------------------------------------------------------
// Built-in (non-neural) feedback controller
// ---------------------------------------------------------------------------

template <typename S>
struct FeedbackParams {
  S kp_lin = S(40);    // 1/s^2
  S kd_lin = S(12);    // 1/s
  S kp_ang = S(40);
  S kd_ang = S(12);
  S sigma_lin = S(25); // N*s
  S sigma_ang = S(8);  // N*m*s
  S beta = S(0.5);
};

/// Deterministic momentum-feedback controller used as the closed-loop
/// reference point in tests: the residual impulse is a clamped PD law on
/// root position/velocity error, scaled by the character's inertia.
template <typename S>
Controller<S> builtin_feedback_controller(const CharacterModel<S>& model,
                                          const ReferenceTrajectory<S>& traj,
                                          const FeedbackParams<S>& fb, S dt_control) {
  S inertia_scale = S(0);
  for (const auto& l : model.links) inertia_scale += l.inertia.trace() / S(3);
  const S mass = model.total_mass();

  Controller<S> c;
  c.act = [=, &model, &traj](const SimState<S>& state, int k) {
    const int target = std::min(k + 1, traj.n_frames() - 1);
    const auto& ref = traj.frames[target];
    const VecX<S>& ref_vel = traj.derived_vel[target];

    const Vec3<S> e_p = ref.base_pos - state.gs.base_pos;
    const Vec3<S> e_v = Vec3<S>(ref_vel.template head<3>()) - state.gs.base_lin_vel;
    const Vec3<S> e_rot = quat_log<S>(Quat<S>(ref.base_quat * state.gs.base_quat.conjugate()));
    const Vec3<S> e_w = Vec3<S>(ref_vel.template segment<3>(3)) - state.gs.base_ang_vel;

    Vec6<S> impulse;
    impulse.template head<3>() = mass * (fb.kp_lin * e_p + fb.kd_lin * e_v) * dt_control;
    impulse.template tail<3>() =
        inertia_scale * (fb.kp_ang * e_rot + fb.kd_ang * e_w) * dt_control;
    impulse = clamp_impulse(impulse, fb.sigma_lin, fb.sigma_ang);

    ControllerOutput<S> out;
    out.joint_targets = ref.joint_pos;
    out.residual_impulse = impulse;
    out.beta_lin = fb.beta;
    out.beta_ang = fb.beta;
    return out;
  };
  return c;
}

using SimStated = SimState<double>;
using SimParamsd = SimParams<double>;
using PDGainsd = PDGains<double>;

}  // namespace impulsekit
