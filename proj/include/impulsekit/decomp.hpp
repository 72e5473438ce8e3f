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

#include <string>
#include <vector>

#include "impulsekit/contact.hpp"
#include "impulsekit/dynamics.hpp"
#include "impulsekit/qp.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

/// Decomposition cost weights. The vertical wrench row carries a strictly
/// larger weight so the solver prefers ground support over levitation.
/// z_ridge is a small Tikhonov term on the pyramid coefficients that keeps
/// the reduced problem strictly convex.
template <typename S>
struct DecompWeights {
  Mat6<S> Q = (Vec6<S>() << S(1), S(1), S(10), S(1), S(1), S(1)).finished().asDiagonal();
  S lambda = S(1e-4);
  S z_ridge = S(1e-9);
};

/// Maps a point force to a wrench about the base origin: [f; r x f].
template <typename S>
Eigen::Matrix<S, 6, 3> base_contact_map(const Vec3<S>& world_point, const Vec3<S>& base_pos) {
  Eigen::Matrix<S, 6, 3> map;
  map.template topRows<3>() = Mat3<S>::Identity();
  map.template bottomRows<3>() = skew<S>(Vec3<S>(world_point - base_pos));
  return map;
}

/// Assembles the per-frame decomposition QP: contact forces (nonnegative
/// pyramid coefficients) plus the free assistive wrench must add up to the
/// base demand, while minimizing ||W||_Q^2 + lambda ||f_c||^2.
template <typename S>
QPProblem<S> build_qp(const Vec6<S>& demand_base, const std::vector<ContactPoint<S>>& contacts,
                      const std::vector<Eigen::Matrix<S, 6, 3>>& base_maps,
                      const DecompWeights<S>& weights) {
  if (contacts.size() != base_maps.size()) {
    throw_validation("build_qp: contact/jacobian count mismatch");
  }
  if (!(weights.lambda > S(0))) throw_validation("build_qp: lambda must be > 0");
  if ((weights.Q - weights.Q.transpose()).template lpNorm<Eigen::Infinity>() > S(1e-10)) {
    throw_validation("build_qp: Q must be symmetric");
  }
  {
    Eigen::SelfAdjointEigenSolver<Mat6<S>> es(weights.Q);
    if (es.eigenvalues().minCoeff() < S(-1e-12)) {
      throw_validation("build_qp: Q must be positive semidefinite");
    }
  }

  const int n_contacts = static_cast<int>(contacts.size());
  const int nb = 4 * n_contacts;
  const int nv = nb + 6;

  QPProblem<S> prob;
  prob.P = MatX<S>::Zero(nv, nv);
  prob.c = VecX<S>::Zero(nv);
  prob.A_eq = MatX<S>::Zero(6, nv);
  prob.b_eq = demand_base;
  prob.P.bottomRightCorner(6, 6) = weights.Q;
  for (int i = 0; i < n_contacts; ++i) {
    const auto& edges = contacts[i].pyramid_edges;
    prob.P.block(4 * i, 4 * i, 4, 4) =
        weights.lambda * (edges.transpose() * edges).eval() +
        weights.z_ridge * Eigen::Matrix<S, 4, 4>::Identity();
    prob.A_eq.block(0, 4 * i, 6, 4) = base_maps[i] * edges;
    prob.cone_blocks.push_back(ConeBlock<S>{4 * i, edges});
  }
  prob.A_eq.rightCols(6) = Mat6<S>::Identity();
  return prob;
}

/// Per-frame analytical impulse baseline and its force-space equivalent.
/// Invariant: I_base = W_assist * dt exactly, per frame.
template <typename S>
struct ImpulseProfile {
  struct Entry {
    Vec6<S> impulse = Vec6<S>::Zero();
    Vec6<S> wrench = Vec6<S>::Zero();
  };
  std::vector<Entry> frames;
  S dt = S(0);

  int n_frames() const { return static_cast<int>(frames.size()); }
};

template <typename S>
ImpulseProfile<S> impulse_baseline(const std::vector<Vec6<S>>& wrenches, S dt) {
  if (!(dt > S(0))) throw_validation("impulse_baseline: dt must be > 0");
  ImpulseProfile<S> profile;
  profile.dt = dt;
  profile.frames.reserve(wrenches.size());
  for (const auto& w : wrenches) {
    profile.frames.push_back({Vec6<S>(w * dt), w});
  }
  return profile;
}

/// Full per-frame decomposition output for one trajectory.
template <typename S>
struct AnalysisResult {
  ImpulseProfile<S> profile;
  std::vector<WrenchDemand<S>> demands;
  ContactSchedule<S> schedule;
  std::vector<QPSolution<S>> solutions;
  std::vector<std::vector<Vec3<S>>> contact_forces;  // per frame, per contact
  std::vector<int> non_converged_frames;
};

template <typename S>
struct AnalyzeParams {
  ContactParams<S> contact;
  DecompWeights<S> weights;
  SolverSettings solver;
  bool warm_start = true;
};

/// The analytical stream: derivatives -> per-frame demand -> contact
/// detection -> QP decomposition -> impulse baseline.
template <typename S>
AnalysisResult<S> analyze(const CharacterModel<S>& model, const ReferenceTrajectory<S>& traj_in,
                          const AnalyzeParams<S>& params) {
  const ReferenceTrajectory<S> traj =
      traj_in.has_derivatives() ? traj_in : finite_difference_derivatives(traj_in);

  AnalysisResult<S> result;
  result.demands = demand_trajectory(model, traj);
  result.schedule = detect_contacts(model, traj, params.contact);

  std::vector<Vec6<S>> wrenches;
  wrenches.reserve(traj.n_frames());
  VecX<S> warm;
  for (int t = 0; t < traj.n_frames(); ++t) {
    const auto& contacts = result.schedule.frames[t];
    const Vec3<S>& base_pos = traj.frames[t].base_pos;
    std::vector<Eigen::Matrix<S, 6, 3>> maps;
    maps.reserve(contacts.size());
    for (const auto& c : contacts) maps.push_back(base_contact_map<S>(c.world_point, base_pos));

    QPProblem<S> prob;
    QPSolution<S> sol;
    try {
      prob = build_qp<S>(result.demands[t].base_part(), contacts, maps, params.weights);
      const VecX<S>* ws =
          params.warm_start && warm.size() == prob.n_bounded() ? &warm : nullptr;
      sol = qp_solve(prob, params.solver, ws);
    } catch (const Error& e) {
      throw Error(e.kind(), "analyze: frame " + std::to_string(t) + ": " + e.what());
    }
    if (!sol.converged) result.non_converged_frames.push_back(t);
    warm = sol.x.head(prob.n_bounded());

    std::vector<Vec3<S>> forces;
    for (const auto& block : prob.cone_blocks) {
      forces.push_back(block.edges * sol.x.template segment<4>(block.offset));
    }
    result.contact_forces.push_back(std::move(forces));
    wrenches.push_back(sol.wrench());
    result.solutions.push_back(std::move(sol));
  }
  result.profile = impulse_baseline(wrenches, traj.dt);
  return result;
}

using ImpulseProfiled = ImpulseProfile<double>;

}  // namespace impulsekit
