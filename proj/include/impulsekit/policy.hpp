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
#include <deque>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "impulsekit/fusion.hpp"
#include "impulsekit/kinematics.hpp"
#include "impulsekit/model.hpp"
#include "impulsekit/rng.hpp"
#include "impulsekit/rotation.hpp"
#include "impulsekit/sim.hpp"
#include "impulsekit/types.hpp"

namespace impulsekit {

// ---------------------------------------------------------------------------
// Signed-log feature compression
// ---------------------------------------------------------------------------

template <typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
S signed_log(S x) {
  return x >= S(0) ? std::log1p(x) : -std::log1p(-x);
}

template <typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
S signed_log_inverse(S y) {
  return y >= S(0) ? std::expm1(y) : -std::expm1(-y);
}

/// Elementwise sgn(x) .* log(1 + |x|). Odd, monotone, exactly invertible.
template <typename Derived>
auto signed_log(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return signed_log(v); }).eval();
}

template <typename Derived>
auto signed_log_inverse(const Eigen::MatrixBase<Derived>& y) {
  using S = typename Derived::Scalar;
  return y.unaryExpr([](S v) { return signed_log_inverse(v); }).eval();
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

/// Fixed observation layout:
///   proprioceptive: root height (1), root orientation 6-D (6), root linear
///   velocity (3), root angular velocity (3), per non-root link the local
///   position (3) and local orientation 6-D (6) relative to the root, joint
///   velocities (n);
///   task: phase (1), next-frame target root delta in the root frame (3);
///   impulse history: the last H applied 6-D impulses, signed-log
///   compressed, newest first, zero-padded at episode start.
struct ObservationSpec {
  int n_joints = 0;
  int n_links = 1;
  int history_len = 4;

  int proprio_width() const { return 13 + 9 * (n_links - 1) + n_joints; }
  int task_width() const { return 4; }
  int history_width() const { return 6 * history_len; }
  int width() const { return proprio_width() + task_width() + history_width(); }

  std::string describe() const {
    return "obs-v1;joints=" + std::to_string(n_joints) + ";links=" + std::to_string(n_links) +
           ";history=" + std::to_string(history_len);
  }

  std::uint64_t hash() const {
    // FNV-1a over the layout description.
    std::uint64_t h = 14695981039346656037ULL;
    for (char ch : describe()) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    return h;
  }
};

template <typename S>
VecX<S> build_observation(const CharacterModel<S>& model, const SimState<S>& state,
                          const ReferenceTrajectory<S>& traj, int frame,
                          const std::deque<Vec6<S>>& impulse_history,
                          const ObservationSpec& spec) {
  if (spec.n_joints != model.n_joints() || spec.n_links != model.n_links()) {
    throw_validation("build_observation: spec does not match model");
  }
  VecX<S> obs = VecX<S>::Zero(spec.width());
  const auto poses = forward_kinematics(model, state.gs);
  const Mat3<S> root_rot = poses[model.base_link].rotation;
  const Mat3<S> root_rot_t = root_rot.transpose();
  const Vec3<S>& root_pos = poses[model.base_link].position;

  int at = 0;
  obs(at++) = state.gs.base_pos.z();
  obs.template segment<6>(at) = rotation_to_6d(root_rot);
  at += 6;
  obs.template segment<3>(at) = state.gs.base_lin_vel;
  at += 3;
  obs.template segment<3>(at) = state.gs.base_ang_vel;
  at += 3;
  for (int l = 0; l < model.n_links(); ++l) {
    if (l == model.base_link) continue;
    obs.template segment<3>(at) = root_rot_t * (poses[l].position - root_pos);
    at += 3;
    obs.template segment<6>(at) = rotation_to_6d<S>(Mat3<S>(root_rot_t * poses[l].rotation));
    at += 6;
  }
  obs.segment(at, spec.n_joints) = state.gs.joint_vel;
  at += spec.n_joints;

  const S phase = S(frame) / S(traj.n_frames());
  obs(at++) = phase;
  const int next = std::min(frame + 1, traj.n_frames() - 1);
  obs.template segment<3>(at) = root_rot_t * (traj.frames[next].base_pos - root_pos);
  at += 3;

  for (int h = 0; h < spec.history_len; ++h) {
    if (h < static_cast<int>(impulse_history.size())) {
      obs.template segment<6>(at) = signed_log(impulse_history[h]);
    }
    at += 6;
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

/// Plain MLP stack with ReLU after every layer. Forward caches the
/// activations needed by the manual backward pass.
template <typename S>
struct Mlp {
  std::vector<MatX<S>> weights;
  std::vector<VecX<S>> biases;

  struct Cache {
    VecX<S> input;
    std::vector<VecX<S>> post;  // post-ReLU activation per layer
  };

  static Mlp random(int in, const std::vector<int>& widths, Pcg32& rng) {
    Mlp net;
    int prev = in;
    for (int w : widths) {
      MatX<S> m(w, prev);
      const S scale = std::sqrt(S(2) / S(prev));
      for (int r = 0; r < w; ++r) {
        for (int c = 0; c < prev; ++c) m(r, c) = S(rng.normal()) * scale;
      }
      net.weights.push_back(std::move(m));
      net.biases.push_back(VecX<S>::Zero(w));
      prev = w;
    }
    return net;
  }

  static Mlp zeros_like(const Mlp& other) {
    Mlp net;
    for (size_t i = 0; i < other.weights.size(); ++i) {
      net.weights.push_back(MatX<S>::Zero(other.weights[i].rows(), other.weights[i].cols()));
      net.biases.push_back(VecX<S>::Zero(other.biases[i].size()));
    }
    return net;
  }

  int out_width() const { return static_cast<int>(biases.back().size()); }

  VecX<S> forward(const VecX<S>& x, Cache* cache = nullptr) const {
    VecX<S> h = x;
    if (cache) {
      cache->input = x;
      cache->post.clear();
    }
    for (size_t i = 0; i < weights.size(); ++i) {
      h = (weights[i] * h + biases[i]).cwiseMax(S(0));
      if (!h.allFinite()) {
        throw Error(ErrorKind::kDivergence,
                    "mlp: non-finite activation at layer " + std::to_string(i));
      }
      if (cache) cache->post.push_back(h);
    }
    return h;
  }

  /// Accumulates parameter gradients into `grads`; returns dL/d(input).
  VecX<S> backward(const Cache& cache, const VecX<S>& dout, Mlp* grads) const {
    VecX<S> d = dout;
    for (int i = static_cast<int>(weights.size()) - 1; i >= 0; --i) {
      // ReLU mask of layer i's output.
      d = d.cwiseProduct((cache.post[i].array() > S(0)).template cast<S>().matrix());
      const VecX<S>& in = i == 0 ? cache.input : cache.post[i - 1];
      grads->weights[i] += d * in.transpose();
      grads->biases[i] += d;
      d = (weights[i].transpose() * d).eval();
    }
    return d;
  }
};

/// Residual head raw output layout (12 values): [0..2] linear direction
/// logits, [3..5] angular direction logits, [6] m_lin, [7] m_ang,
/// [8] beta_lin, [9] beta_ang, [10..11] spare.
inline constexpr int kResidualRawDim = 12;
inline constexpr int kResidualSampledDim = 10;

template <typename S>
struct PolicyNet {
  Mlp<S> trunk;
  MatX<S> w_kin;
  VecX<S> b_kin;
  MatX<S> w_res;
  VecX<S> b_res;
  VecX<S> log_std_kin;  // n, state independent
  VecX<S> log_std_res;  // 10, state independent

  int n_joints = 0;
  S sigma_lin = S(25);  // N*s, maximum linear residual impulse
  S sigma_ang = S(8);   // N*m*s
  bool naive_mode = false;

  struct Forward {
    VecX<S> mu_kin;
    VecX<S> raw_res;  // 12
    typename Mlp<S>::Cache trunk_cache;
  };

  static PolicyNet init(const ObservationSpec& spec, const std::vector<int>& widths,
                        std::uint64_t seed, bool naive = false) {
    Pcg32 rng(seed, 7u);
    PolicyNet net;
    net.n_joints = spec.n_joints;
    net.naive_mode = naive;
    net.trunk = Mlp<S>::random(spec.width(), widths, rng);
    const int h = widths.back();
    auto init_mat = [&](int rows, int cols) {
      MatX<S> m(rows, cols);
      const S scale = std::sqrt(S(2) / S(cols));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = S(rng.normal()) * scale * S(0.1);
      return m;
    };
    net.w_kin = init_mat(spec.n_joints, h);
    net.b_kin = VecX<S>::Zero(spec.n_joints);
    net.w_res = init_mat(kResidualRawDim, h);
    net.b_res = VecX<S>::Zero(kResidualRawDim);
    // Bias magnitude and gate logits low so the policy starts with small,
    // mostly-residual-free interventions.
    for (int i = 6; i <= 9; ++i) net.b_res(i) = S(-2);
    net.log_std_kin = VecX<S>::Constant(spec.n_joints, S(-0.7));
    net.log_std_res = VecX<S>::Constant(kResidualSampledDim, S(-0.7));
    return net;
  }

  Forward forward(const VecX<S>& obs) const {
    Forward f;
    const VecX<S> h = trunk.forward(obs, &f.trunk_cache);
    f.mu_kin = w_kin * h + b_kin;
    f.raw_res = w_res * h + b_res;
    if (!f.mu_kin.allFinite() || !f.raw_res.allFinite()) {
      throw Error(ErrorKind::kDivergence, "policy: non-finite head output");
    }
    return f;
  }

  /// Distribution dimensionality: joint targets plus the sampled residual
  /// logits (6 in naive mode, 10 otherwise).
  int action_dim() const { return n_joints + res_dim(); }
  int res_dim() const { return naive_mode ? 6 : kResidualSampledDim; }

  int param_count() const {
    int count = 0;
    for (size_t i = 0; i < trunk.weights.size(); ++i) {
      count += static_cast<int>(trunk.weights[i].size() + trunk.biases[i].size());
    }
    count += static_cast<int>(w_kin.size() + b_kin.size() + w_res.size() + b_res.size());
    count += static_cast<int>(log_std_kin.size() + log_std_res.size());
    return count;
  }

  template <typename Fn>
  void visit(Fn&& fn) {
    for (size_t i = 0; i < trunk.weights.size(); ++i) {
      fn(trunk.weights[i]);
      fn(trunk.biases[i]);
    }
    fn(w_kin);
    fn(b_kin);
    fn(w_res);
    fn(b_res);
    fn(log_std_kin);
    fn(log_std_res);
  }

  VecX<S> to_vector() const {
    VecX<S> out(param_count());
    int at = 0;
    const_cast<PolicyNet*>(this)->visit([&](auto& block) {
      out.segment(at, block.size()) =
          Eigen::Map<const VecX<S>>(block.data(), block.size());
      at += static_cast<int>(block.size());
    });
    return out;
  }

  void from_vector(const VecX<S>& v) {
    int at = 0;
    visit([&](auto& block) {
      Eigen::Map<VecX<S>>(block.data(), block.size()) = v.segment(at, block.size());
      at += static_cast<int>(block.size());
    });
  }
};

template <typename S>
struct CriticNet {
  Mlp<S> trunk;
  MatX<S> w_value;  // 1 x h
  VecX<S> b_value;  // 1

  static CriticNet init(const ObservationSpec& spec, const std::vector<int>& widths,
                        std::uint64_t seed) {
    Pcg32 rng(seed, 11u);
    CriticNet net;
    net.trunk = Mlp<S>::random(spec.width(), widths, rng);
    net.w_value = MatX<S>::Zero(1, widths.back());
    const S scale = std::sqrt(S(1) / S(widths.back()));
    for (int c = 0; c < widths.back(); ++c) net.w_value(0, c) = S(rng.normal()) * scale;
    net.b_value = VecX<S>::Zero(1);
    return net;
  }

  S value(const VecX<S>& obs, typename Mlp<S>::Cache* cache = nullptr) const {
    const VecX<S> h = trunk.forward(obs, cache);
    return (w_value * h + b_value)(0);
  }

  int param_count() const {
    int count = 0;
    for (size_t i = 0; i < trunk.weights.size(); ++i) {
      count += static_cast<int>(trunk.weights[i].size() + trunk.biases[i].size());
    }
    return count + static_cast<int>(w_value.size() + b_value.size());
  }

  template <typename Fn>
  void visit(Fn&& fn) {
    for (size_t i = 0; i < trunk.weights.size(); ++i) {
      fn(trunk.weights[i]);
      fn(trunk.biases[i]);
    }
    fn(w_value);
    fn(b_value);
  }

  VecX<S> to_vector() const {
    VecX<S> out(param_count());
    int at = 0;
    const_cast<CriticNet*>(this)->visit([&](auto& block) {
      out.segment(at, block.size()) =
          Eigen::Map<const VecX<S>>(block.data(), block.size());
      at += static_cast<int>(block.size());
    });
    return out;
  }

  void from_vector(const VecX<S>& v) {
    int at = 0;
    visit([&](auto& block) {
      Eigen::Map<VecX<S>>(block.data(), block.size()) = v.segment(at, block.size());
      at += static_cast<int>(block.size());
    });
  }
};

// ---------------------------------------------------------------------------
// Action decoding
// ---------------------------------------------------------------------------

/// Direction-magnitude-gate decomposition of the residual head output.
template <typename S>
struct ResidualAction {
  Vec3<S> u_lin = Vec3<S>::UnitZ();
  Vec3<S> u_ang = Vec3<S>::UnitZ();
  S m_lin = S(0);
  S m_ang = S(0);
  S beta_lin = S(0.5);
  S beta_ang = S(0.5);
  S sigma_lin = S(25);
  S sigma_ang = S(8);
};

template <typename S>
Vec3<S> decode_direction(const Vec3<S>& raw) {
  const Vec3<S> w = raw.array().tanh().matrix();
  const S n = w.norm();
  if (n < S(1e-6)) return Vec3<S>::UnitZ();
  return w / n;
}

template <typename S>
S squash_unit(S raw) {
  return (std::tanh(raw) + S(1)) / S(2);
}

template <typename S>
ResidualAction<S> decode_residual(const VecX<S>& raw, S sigma_lin = S(25), S sigma_ang = S(8)) {
  if (raw.size() < kResidualSampledDim) {
    throw_validation("decode_residual: raw head output too short");
  }
  ResidualAction<S> a;
  a.u_lin = decode_direction<S>(raw.template head<3>());
  a.u_ang = decode_direction<S>(raw.template segment<3>(3));
  a.m_lin = squash_unit(raw(6));
  a.m_ang = squash_unit(raw(7));
  a.beta_lin = squash_unit(raw(8));
  a.beta_ang = squash_unit(raw(9));
  a.sigma_lin = sigma_lin;
  a.sigma_ang = sigma_ang;
  return a;
}

/// I_res = [sigma_lin m_lin u_lin; sigma_ang m_ang u_ang].
template <typename S>
Vec6<S> residual_impulse(const ResidualAction<S>& a) {
  Vec6<S> impulse;
  impulse.template head<3>() = a.sigma_lin * a.m_lin * a.u_lin;
  impulse.template tail<3>() = a.sigma_ang * a.m_ang * a.u_ang;
  return impulse;
}

/// Naive ("always-on") decoding: the first six logits map directly to a
/// capped 6-D impulse; no baseline, gates, or magnitude heads.
template <typename S>
Vec6<S> naive_impulse(const VecX<S>& raw, S sigma_lin = S(25), S sigma_ang = S(8)) {
  Vec6<S> impulse;
  impulse.template head<3>() = sigma_lin * raw.template head<3>().array().tanh().matrix();
  impulse.template tail<3>() = sigma_ang * raw.template segment<3>(3).array().tanh().matrix();
  return impulse;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Masked cosine alignment target: the reference force direction when it
/// is strong enough, vertical otherwise.
template <typename S>
Vec3<S> compass_target(const Vec3<S>& f_ref, S epsilon) {
  const S n = f_ref.norm();
  if (n > epsilon) return f_ref / n;
  return Vec3<S>::UnitZ();
}

/// 1 - cos(u, d_target). The target is treated as a constant.
template <typename S>
S compass_loss(const Vec3<S>& u, const Vec3<S>& f_ref, S epsilon) {
  if (!(epsilon > S(0))) throw_validation("compass_loss: epsilon must be > 0");
  return S(1) - u.dot(compass_target(f_ref, epsilon));
}

/// Loss plus gradient with respect to the raw direction logits (through
/// tanh and the sphere normalization; the fallback direction emits zero
/// gradient).
template <typename S>
S compass_loss_raw(const Vec3<S>& raw, const Vec3<S>& f_ref, S epsilon, Vec3<S>* grad_raw) {
  const Vec3<S> d = compass_target(f_ref, epsilon);
  const Vec3<S> w = raw.array().tanh().matrix();
  const S n = w.norm();
  if (n < S(1e-6)) {
    if (grad_raw) grad_raw->setZero();
    return S(1) - Vec3<S>::UnitZ().dot(d);
  }
  const Vec3<S> u = w / n;
  if (grad_raw) {
    const Vec3<S> dl_du = -d;
    const Vec3<S> dl_dw = (dl_du - u * u.dot(dl_du)) / n;
    *grad_raw = dl_dw.cwiseProduct((S(1) - w.array().square()).matrix());
  }
  return S(1) - u.dot(d);
}

/// lambda_m (m_lin^2 + m_ang^2) + lambda_g ((anchor - beta_lin)^2 +
/// (anchor - beta_ang)^2). The anchor is configurable; 1 keeps the policy
/// leaning on the analytical baseline.
template <typename S>
S sparsity_loss(S m_lin, S m_ang, S beta_lin, S beta_ang, S lambda_m, S lambda_g,
                S anchor = S(1)) {
  if (lambda_m < S(0) || lambda_g < S(0)) {
    throw_validation("sparsity_loss: weights must be >= 0");
  }
  const S gl = anchor - beta_lin;
  const S ga = anchor - beta_ang;
  return lambda_m * (m_lin * m_lin + m_ang * m_ang) + lambda_g * (gl * gl + ga * ga);
}

/// Sparsity loss plus gradient with respect to the four raw logits
/// [m_lin, m_ang, beta_lin, beta_ang].
template <typename S>
S sparsity_loss_raw(const Eigen::Matrix<S, 4, 1>& raw, S lambda_m, S lambda_g, S anchor,
                    Eigen::Matrix<S, 4, 1>* grad_raw) {
  Eigen::Matrix<S, 4, 1> squash, dsquash;
  for (int i = 0; i < 4; ++i) {
    const S t = std::tanh(raw(i));
    squash(i) = (t + S(1)) / S(2);
    dsquash(i) = (S(1) - t * t) / S(2);
  }
  const S loss = sparsity_loss(squash(0), squash(1), squash(2), squash(3), lambda_m, lambda_g,
                               anchor);
  if (grad_raw) {
    (*grad_raw)(0) = S(2) * lambda_m * squash(0) * dsquash(0);
    (*grad_raw)(1) = S(2) * lambda_m * squash(1) * dsquash(1);
    (*grad_raw)(2) = S(-2) * lambda_g * (anchor - squash(2)) * dsquash(2);
    (*grad_raw)(3) = S(-2) * lambda_g * (anchor - squash(3)) * dsquash(3);
  }
  return loss;
}

/// Diagonal Gaussian log density with state-independent log-std, clamped
/// to [-4, 1] where it is used.
template <typename S>
S clamp_log_std(S log_std) {
  return std::min(std::max(log_std, S(-4)), S(1));
}

template <typename S>
S gaussian_log_prob(const VecX<S>& action, const VecX<S>& mean, const VecX<S>& log_std) {
  S sum = S(0);
  for (int i = 0; i < action.size(); ++i) {
    const S ls = clamp_log_std(log_std(i));
    const S inv_sigma = std::exp(-ls);
    const S z = (action(i) - mean(i)) * inv_sigma;
    sum += S(-0.5) * z * z - ls - S(0.5) * std::log(S(2) * S(M_PI));
  }
  return sum;
}

/// d logp / d mean and d logp / d log_std (zero where the clamp binds).
template <typename S>
void gaussian_log_prob_grad(const VecX<S>& action, const VecX<S>& mean, const VecX<S>& log_std,
                            VecX<S>* d_mean, VecX<S>* d_log_std) {
  d_mean->resize(mean.size());
  d_log_std->resize(mean.size());
  for (int i = 0; i < action.size(); ++i) {
    const S ls = clamp_log_std(log_std(i));
    const S inv_var = std::exp(S(-2) * ls);
    const S diff = action(i) - mean(i);
    (*d_mean)(i) = diff * inv_var;
    const bool clamped = log_std(i) < S(-4) || log_std(i) > S(1);
    (*d_log_std)(i) = clamped ? S(0) : diff * diff * inv_var - S(1);
  }
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  bool passed = false;
};

/// Central-difference check of an analytic gradient. `value` evaluates the
/// scalar loss at a parameter vector; `grad` is the analytic gradient at
/// `params`. Relative error is measured against max(|fd|, |an|, floor).
inline GradCheckReport grad_check(const std::function<double(const VecXd&)>& value,
                                  const VecXd& params, const VecXd& grad, double h = 1e-5,
                                  double tol = 1e-5) {
  GradCheckReport report;
  VecXd p = params;
  for (int i = 0; i < params.size(); ++i) {
    const double orig = p(i);
    p(i) = orig + h;
    const double fp = value(p);
    p(i) = orig - h;
    const double fm = value(p);
    p(i) = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double an = grad(i);
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-4});
    const double rel = std::abs(fd - an) / scale;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

using PolicyNetd = PolicyNet<double>;
using CriticNetd = CriticNet<double>;
using ResidualActiond = ResidualAction<double>;

}  // namespace impulsekit
