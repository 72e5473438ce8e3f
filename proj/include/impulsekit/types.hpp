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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace impulsekit {

template <typename S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S> using Vec6 = Eigen::Matrix<S, 6, 1>;
template <typename S> using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S> using Mat6 = Eigen::Matrix<S, 6, 6>;
template <typename S> using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S> using Mat3X = Eigen::Matrix<S, 3, Eigen::Dynamic>;
template <typename S> using Quat = Eigen::Quaternion<S>;

using Vec3d = Vec3<double>;
using Vec6d = Vec6<double>;
using VecXd = VecX<double>;
using Mat3d = Mat3<double>;
using Mat6d = Mat6<double>;
using MatXd = MatX<double>;
using Quatd = Quat<double>;

inline constexpr double kGravityZ = -9.81;

/// Error category, used by the CLI to map failures onto exit codes.
enum class ErrorKind {
  kUsage,           // bad arguments, missing files, schema violations
  kValidation,      // data fails a model/trajectory invariant
  kNonConvergence,  // iterative solver hit its budget
  kDivergence,      // training produced non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::kUsage, msg);
}
[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(ErrorKind::kValidation, msg);
}

}  // namespace impulsekit
