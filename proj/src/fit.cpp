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

#include "mfpt/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace mfpt {

namespace {

struct Eval {
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  double cost = 0.0;
};

Eval evaluate(const std::vector<double>& t, const std::vector<double>& y, double gamma, double omega) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eval e{Eigen::VectorXd(n), Eigen::MatrixXd(n, 2)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = t[static_cast<std::size_t>(i)];
    const double decay = std::exp(-gamma * ti);
    const double c = std::cos(omega * ti), s = std::sin(omega * ti);
    e.r[i] = 0.5 * (1.0 + decay * c) - y[static_cast<std::size_t>(i)];
    e.j(i, 0) = -0.5 * ti * decay * c;
    e.j(i, 1) = -0.5 * ti * decay * s;
  }
  e.cost = e.r.squaredNorm();
  return e;
}

}  // namespace

DampedCosineFit fit_damped_cosine(const std::vector<double>& t, const std::vector<double>& y, double gamma_seed,
                                  double omega_seed) {
  if (t.size() != y.size()) throw std::invalid_argument("fit: t and y differ in length");
  if (t.size() < 3) throw std::invalid_argument("fit: need at least three samples");

  Eigen::Vector2d p(gamma_seed, omega_seed);
  Eval cur = evaluate(t, y, p[0], p[1]);
  double lambda = 1e-3;
  DampedCosineFit out;
  for (out.iterations = 1; out.iterations <= 500; ++out.iterations) {
    const Eigen::Matrix2d jtj = cur.j.transpose() * cur.j;
    const Eigen::Vector2d jtr = cur.j.transpose() * cur.r;
    Eigen::Matrix2d a = jtj;
    a.diagonal() += lambda * jtj.diagonal();
    const Eigen::Vector2d step = a.ldlt().solve(-jtr);
    const Eigen::Vector2d trial = p + step;
    Eval next = evaluate(t, y, trial[0], trial[1]);
    if (next.cost < cur.cost) {
      const bool small = step.norm() <= 1e-13 * (p.norm() + 1e-13);
      const bool flat = cur.cost - next.cost <= 1e-15 * cur.cost;
      p = trial;
      cur = std::move(next);
      lambda = std::max(lambda / 10.0, 1e-12);
      if (small || flat) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        out.converged = true;  // no downhill direction left
        break;
      }
    }
  }
  out.gamma = p[0];
  out.omega = p[1];
  const double dof = static_cast<double>(t.size()) - 2.0;
  const double s2 = cur.cost / dof;
  out.rms_residual = std::sqrt(cur.cost / static_cast<double>(t.size()));
  out.covariance = s2 * (cur.j.transpose() * cur.j).inverse();
  out.sigma_gamma = std::sqrt(std::max(0.0, out.covariance(0, 0)));
  out.sigma_omega = std::sqrt(std::max(0.0, out.covariance(1, 1)));
  return out;
}

}  // namespace mfpt
