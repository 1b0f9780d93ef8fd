// Copyright 2026 The mfpt-lab Authors
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

#include <Eigen/Dense>
#include <vector>

namespace mfpt {

struct DampedCosineFit {
  double gamma = 0.0;
  double omega = 0.0;
  /// Parameter covariance s^2 (J^T J)^{-1}, order (gamma, omega).
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double sigma_gamma = 0.0;
  double sigma_omega = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt least squares of y = (1 + exp(-gamma t) cos(omega t)) / 2.
DampedCosineFit fit_damped_cosine(const std::vector<double>& t, const std::vector<double>& y, double gamma_seed,
                                  double omega_seed);

}  // namespace mfpt
