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
#include <vector>

#include "impulsekit/types.hpp"

namespace impulsekit {

/// Slice of the decision vector holding one contact's pyramid coefficients.
template <typename S>
struct ConeBlock {
  int offset = 0;
  Eigen::Matrix<S, 3, 4> edges;
};

/// min x^T P x + c^T x  s.t.  A_eq x = b_eq, pyramid coefficients >= 0.
/// Layout: x = [z_1 .. z_C, W] with 4 coefficients per contact and the
/// 6-D assistive wrench last (free).
template <typename S>
struct QPProblem {
  MatX<S> P;
  VecX<S> c;
  MatX<S> A_eq;
  VecX<S> b_eq;
  std::vector<ConeBlock<S>> cone_blocks;

  int n_var() const { return static_cast<int>(P.rows()); }
  int n_bounded() const { return 4 * static_cast<int>(cone_blocks.size()); }
  int n_free() const { return n_var() - n_bounded(); }
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double complementarity = 0.0;
  double cone_violation = 0.0;

  double max() const {
    return std::max(std::max(stationarity, primal_eq),
                    std::max(complementarity, cone_violation));
  }
};

/// Result of one decomposition solve. `x` is the full primal iterate,
/// `nu` the equality multipliers, `mu` the bound multipliers.
template <typename S>
struct QPSolution {
  VecX<S> x;
  VecX<S> nu;
  VecX<S> mu;
  S objective = S(0);
  KktResiduals kkt;
  bool converged = false;
  int iterations = 0;

  Vec6<S> wrench() const { return x.template tail<6>(); }
};

struct SolverSettings {
  double tol = 1e-8;
  int max_iter = 5000;
  double over_relaxation = 1.6;
  int polish_interval = 50;
};

namespace detail {

/// Computes the duals consistent with stationarity on the free rows:
/// nu = -A_w^{-T} (2 P x + c)_free, mu = (2 P x + c + A^T nu)_bounded.
template <typename S>
void recover_duals(const QPProblem<S>& prob, QPSolution<S>& sol) {
  const int nb = prob.n_bounded();
  const int nfree = prob.n_free();
  const VecX<S> grad = S(2) * prob.P * sol.x + prob.c;
  const MatX<S> a_w = prob.A_eq.rightCols(nfree);
  sol.nu = -a_w.transpose().fullPivLu().solve(grad.tail(nfree));
  sol.mu = grad.head(nb) + prob.A_eq.leftCols(nb).transpose() * sol.nu;
}

}  // namespace detail

/// KKT residuals of a candidate solution, computed from the problem data
/// alone. Dual feasibility violations (negative bound multipliers) are
/// folded into the stationarity residual.
template <typename S>
KktResiduals kkt_check(const QPProblem<S>& prob, const QPSolution<S>& sol) {
  KktResiduals r;
  const int nb = prob.n_bounded();
  const VecX<S> grad = S(2) * prob.P * sol.x + prob.c + prob.A_eq.transpose() * sol.nu;

  double stat = grad.tail(prob.n_free()).template lpNorm<Eigen::Infinity>();
  double comp = 0.0;
  double cone = 0.0;
  for (int i = 0; i < nb; ++i) {
    const double s = static_cast<double>(grad(i));
    const double mu = std::max(s, 0.0);
    stat = std::max(stat, s < 0.0 ? -s : 0.0);
    comp = std::max(comp, std::abs(static_cast<double>(sol.x(i)) * mu));
    cone = std::max(cone, -static_cast<double>(sol.x(i)));
  }
  r.stationarity = stat;
  r.primal_eq = static_cast<double>(
      (prob.A_eq * sol.x - prob.b_eq).template lpNorm<Eigen::Infinity>());
  r.complementarity = comp;
  r.cone_violation = std::max(cone, 0.0);
  return r;
}

/// Solves the decomposition QP. The wrench block is eliminated through the
/// equality constraint, leaving a bound-constrained QP in the pyramid
/// coefficients, which is solved by over-relaxed ADMM with periodic
/// active-set polishing. With no contacts the solution is the equality
/// solve itself.
template <typename S>
QPSolution<S> qp_solve(const QPProblem<S>& prob, const SolverSettings& settings = {},
                       const VecX<S>* warm_start = nullptr) {
  const int nb = prob.n_bounded();
  const int nfree = prob.n_free();
  const int nv = prob.n_var();
  if (prob.A_eq.rows() != nfree) {
    throw_validation("qp_solve: equality row count must match the free block");
  }

  QPSolution<S> sol;
  sol.x = VecX<S>::Zero(nv);

  const MatX<S> a_w = prob.A_eq.rightCols(nfree);
  const auto a_w_lu = a_w.fullPivLu();
  if (a_w_lu.rank() < nfree) {
    throw_validation("qp_solve: singular free-variable block in A_eq");
  }

  if (nb == 0) {
    sol.x.tail(nfree) = a_w_lu.solve(prob.b_eq);
    detail::recover_duals(prob, sol);
    sol.mu.resize(0);
    sol.objective = sol.x.dot(prob.P * sol.x) + prob.c.dot(sol.x);
    sol.kkt = kkt_check(prob, sol);
    sol.converged = true;
    return sol;
  }

  // Eliminate the free block: x = x0 + T z.
  const MatX<S> a_z = prob.A_eq.leftCols(nb);
  MatX<S> t_map = MatX<S>::Zero(nv, nb);
  t_map.topRows(nb) = MatX<S>::Identity(nb, nb);
  t_map.bottomRows(nfree) = -a_w_lu.solve(a_z);
  VecX<S> x0 = VecX<S>::Zero(nv);
  x0.tail(nfree) = a_w_lu.solve(prob.b_eq);

  const MatX<S> h = S(2) * t_map.transpose() * prob.P * t_map;
  const VecX<S> g = S(2) * t_map.transpose() * prob.P * x0 + t_map.transpose() * prob.c;

  auto finish = [&](const VecX<S>& z, int iters) {
    sol.x = x0 + t_map * z;
    detail::recover_duals(prob, sol);
    sol.objective = sol.x.dot(prob.P * sol.x) + prob.c.dot(sol.x);
    sol.kkt = kkt_check(prob, sol);
    sol.iterations = iters;
  };

  // Active-set polish: exact solve with the guessed active set, accepted
  // only if primal and dual signs check out.
  auto try_polish = [&](const VecX<S>& w, VecX<S>& polished) {
    std::vector<int> free_idx;
    for (int i = 0; i < nb; ++i) {
      if (w(i) > S(1e-10)) free_idx.push_back(i);
    }
    polished = VecX<S>::Zero(nb);
    if (!free_idx.empty()) {
      const int k = static_cast<int>(free_idx.size());
      MatX<S> h_ff(k, k);
      VecX<S> g_f(k);
      for (int a = 0; a < k; ++a) {
        g_f(a) = g(free_idx[a]);
        for (int b = 0; b < k; ++b) h_ff(a, b) = h(free_idx[a], free_idx[b]);
      }
      const VecX<S> z_f = h_ff.ldlt().solve(-g_f);
      for (int a = 0; a < k; ++a) polished(free_idx[a]) = z_f(a);
    }
    if ((polished.array() < S(-1e-12)).any()) return false;
    const VecX<S> mu = h * polished + g;
    for (int i = 0; i < nb; ++i) {
      if (polished(i) <= S(0) && mu(i) < S(-1e-9)) return false;
    }
    polished = polished.cwiseMax(S(0));
    return true;
  };

  // ADMM iterations.
  const S rho0 = std::max(S(1e-4), S(0.1) * h.trace() / S(nb));
  S rho = rho0;
  Eigen::LDLT<MatX<S>> kkt_fac((h + rho * MatX<S>::Identity(nb, nb)).eval());

  VecX<S> w = warm_start && warm_start->size() == nb ? warm_start->cwiseMax(S(0))
                                                     : VecX<S>::Zero(nb);
  VecX<S> u = VecX<S>::Zero(nb);
  VecX<S> z = w;
  const S alpha = S(settings.over_relaxation);

  for (int it = 1; it <= settings.max_iter; ++it) {
    z = kkt_fac.solve(rho * (w - u) - g);
    const VecX<S> z_relaxed = alpha * z + (S(1) - alpha) * w;
    const VecX<S> w_prev = w;
    w = (z_relaxed + u).cwiseMax(S(0));
    u += z_relaxed - w;

    const S r_prim = (z - w).template lpNorm<Eigen::Infinity>();
    const S r_dual = rho * (w - w_prev).template lpNorm<Eigen::Infinity>();
    const S scale = S(1) + w.template lpNorm<Eigen::Infinity>();

    if (it % settings.polish_interval == 0 || (r_prim <= S(settings.tol) * scale &&
                                               r_dual <= S(settings.tol) * scale)) {
      VecX<S> polished;
      if (try_polish(w, polished)) {
        finish(polished, it);
        if (sol.kkt.max() <= settings.tol * (1.0 + static_cast<double>(
                                                       prob.b_eq.template lpNorm<Eigen::Infinity>()))) {
          sol.converged = true;
          return sol;
        }
      }
      if (r_prim <= S(settings.tol) * scale && r_dual <= S(settings.tol) * scale) {
        finish(w, it);
        sol.converged = sol.kkt.max() <=
                        10.0 * settings.tol *
                            (1.0 + static_cast<double>(
                                       prob.b_eq.template lpNorm<Eigen::Infinity>()));
        return sol;
      }
    }

    // Residual-balancing rho adaptation.
    if (it % 100 == 0) {
      if (r_prim > S(10) * r_dual) {
        rho *= S(2);
        kkt_fac.compute((h + rho * MatX<S>::Identity(nb, nb)).eval());
      } else if (r_dual > S(10) * r_prim) {
        rho *= S(0.5);
        kkt_fac.compute((h + rho * MatX<S>::Identity(nb, nb)).eval());
      }
    }
  }

  finish(w, settings.max_iter);
  sol.converged = false;
  return sol;
}

}  // namespace impulsekit
