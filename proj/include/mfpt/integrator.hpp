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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfpt {

enum class IntegrationMethod { RK4, DormandPrince };

struct EvolverConfig {
  IntegrationMethod method = IntegrationMethod::DormandPrince;
  /// Fixed step for RK4; initial trial step for the adaptive method.
  double dt = 1e-3;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double t_max = 1.0;
  double min_step = 1e-12;
  /// Upper bound on adaptive steps; 0 means unbounded.
  double max_step = 0.0;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("evolver: dt must be positive");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw std::invalid_argument("evolver: tolerances must be positive");
    if (!(t_max >= 0.0)) throw std::invalid_argument("evolver: t_max must be non-negative");
    if (!(min_step > 0.0)) throw std::invalid_argument("evolver: min_step must be positive");
    if (max_step < 0.0) throw std::invalid_argument("evolver: max_step must be non-negative");
  }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Integrates dy/dt = f(t, y) from t0 through every time in `samples`
/// (ascending, >= t0), calling observe(t, y) at each one. `State` is any
/// Eigen dense type; f has signature f(double t, const State& y, State& dy).
template <class State, class Rhs, class Observer>
IntegrationStats integrate(Rhs&& f, State y, double t0, const std::vector<double>& samples,
                           const EvolverConfig& cfg, Observer&& observe) {
  cfg.validate();
  if (!std::is_sorted(samples.begin(), samples.end())) throw std::invalid_argument("sample times must ascend");
  if (!samples.empty() && samples.front() < t0) throw std::invalid_argument("sample time precedes t0");

  IntegrationStats stats;
  double t = t0;
  std::size_t next = 0;
  while (next < samples.size() && samples[next] <= t0) observe(samples[next++], y);
  if (next == samples.size()) return stats;

  State k1, k2, k3, k4, k5, k6, k7, tmp;
  auto eval = [&](double tt, const State& yy, State& out) {
    f(tt, yy, out);
    ++stats.rhs_evaluations;
  };

  if (cfg.method == IntegrationMethod::RK4) {
    while (next < samples.size()) {
      const double target = samples[next];
      while (t < target) {
        double h = std::min(cfg.dt, target - t);
        // Absorb a sliver left by rounding instead of taking a tiny step.
        if (target - (t + h) < 1e-12 * std::max(1.0, std::abs(target))) h = target - t;
        eval(t, y, k1);
        tmp = y + (0.5 * h) * k1;
        eval(t + 0.5 * h, tmp, k2);
        tmp = y + (0.5 * h) * k2;
        eval(t + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        eval(t + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (h == target - t) ? target : t + h;
        ++stats.accepted;
      }
      observe(samples[next++], y);
    }
    return stats;
  }

  // Dormand-Prince 5(4) with first-same-as-last reuse.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double max_step = cfg.max_step > 0.0 ? cfg.max_step : std::numeric_limits<double>::infinity();
  double h = std::min(cfg.dt, max_step);
  State y_new;
  eval(t, y, k1);
  while (next < samples.size()) {
    const double target = samples[next];
    if (t >= target) {
      observe(samples[next++], y);
      continue;
    }
    bool clipped = false;
    double step = h;
    if (t + step >= target) {
      step = target - t;
      clipped = true;
    }
    if (step < cfg.min_step && !clipped) throw IntegrationError("step size underflow", t);

    tmp = y + step * (a21 * k1);
    eval(t + c2 * step, tmp, k2);
    tmp = y + step * (a31 * k1 + a32 * k2);
    eval(t + c3 * step, tmp, k3);
    tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
    eval(t + c4 * step, tmp, k4);
    tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    eval(t + c5 * step, tmp, k5);
    tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    eval(t + step, tmp, k6);
    y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    eval(t + step, y_new, k7);

    tmp = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const auto scale = (cfg.abs_tol + cfg.rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).eval();
    const double err = std::sqrt((tmp.cwiseAbs().array() / scale).square().mean());
    if (!std::isfinite(err)) throw IntegrationError("non-finite error estimate", t);

    if (err <= 1.0) {
      t = clipped ? target : t + step;
      y.swap(y_new);
      k1.swap(k7);
      ++stats.accepted;
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      // A clipped step says nothing about the natural step; keep h unless it failed.
      if (!clipped || step >= h) h = std::min(step * fac, max_step);
      if (clipped) observe(samples[next++], y);
    } else {
      ++stats.rejected;
      h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < cfg.min_step) throw IntegrationError("step size underflow", t);
    }
  }
  return stats;
}

}  // namespace mfpt
