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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mfpt/lindblad.hpp"

using namespace mfpt;

namespace {

const OperatorPolynomial a = OperatorPolynomial::annihilation(0);
const OperatorPolynomial ad = OperatorPolynomial::creation(0);

LindbladModel damped_mode(std::size_t dim, double kappa,
                          DissipatorConvention c = DissipatorConvention::HalfKappa) {
  LindbladModel m{ProductSpace({{"a", dim}}), {}, {}, {{a, kappa}}, c};
  return m;
}

// H = E a^dag + E^* a, damped at rate kappa; <a>_ss = -2iE/kappa (HalfKappa).
LindbladModel driven_mode(std::size_t dim, cplx e, double kappa) {
  LindbladModel m = damped_mode(dim, kappa);
  m.hamiltonian = e * ad + std::conj(e) * a;
  return m;
}

DensityMatrix fock(const ProductSpace& s, std::size_t n) {
  const std::size_t occ[] = {n};
  return DensityMatrix::fock(s, occ);
}

DensityMatrix random_state(const ProductSpace& s, std::mt19937& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(s.dimension());
  DenseMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cplx(d(rng), d(rng));
  }
  DenseMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(s, rho);
}

double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("an empty model generates nothing") {
  const LindbladModel m{ProductSpace({{"a", 4}}), {}, {}, {}, DissipatorConvention::HalfKappa};
  std::mt19937 rng(1);
  const DensityMatrix rho = random_state(m.space, rng);
  CHECK(max_abs(apply_liouvillian(m, rho).matrix()) == 0.0);
}

TEST_CASE("number decay rate follows the dissipator convention") {
  const DensityMatrix one = fock(ProductSpace({{"a", 4}}), 1);
  const SparseMatrix n = build_sparse(OperatorPolynomial::number(0), one.space());
  const DensityMatrix half = apply_liouvillian(damped_mode(4, 2.0), one);
  CHECK(expectation(half, n).real() == doctest::Approx(-2.0));
  const DensityMatrix full = apply_liouvillian(damped_mode(4, 2.0, DissipatorConvention::FullKappa), one);
  CHECK(expectation(full, n).real() == doctest::Approx(-4.0));
}

TEST_CASE("the generator preserves trace and Hermiticity") {
  LindbladModel m = driven_mode(5, cplx(0.3, -0.7), 1.3);
  m.jumps.push_back({OperatorPolynomial::number(0), 0.4});
  const Liouvillian L(m);
  std::mt19937 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix rho = random_state(m.space, rng);
    const DenseMatrix out = L.apply(0.0, rho.matrix());
    CHECK(std::abs(out.trace()) < 1e-12);
    CHECK(max_abs(out - out.adjoint()) < 1e-12);
  }
}

TEST_CASE("the Hermitian fast path matches the general action") {
  LindbladModel m = driven_mode(5, cplx(0.3, -0.7), 1.3);
  m.jumps.push_back({a + 0.5 * ad, 0.4});  // several entries per row
  m.jumps.push_back({OperatorPolynomial::number(0), 0.2});
  m.driven.push_back({ad * ad, [](double t) { return cplx(std::cos(t), 0.3); }});
  const Liouvillian L(m);
  std::mt19937 rng(8);
  const DensityMatrix rho = random_state(m.space, rng);
  const DenseMatrix h = 0.5 * (rho.matrix() + rho.matrix().adjoint());
  DenseMatrix fast;
  L.apply_hermitian(0.4, h, fast);
  CHECK(max_abs(fast - L.apply(0.4, h)) < 1e-13);
  CHECK(max_abs(fast - fast.adjoint()) == 0.0);
}

TEST_CASE("vectorized generator matches the action on matrices") {
  LindbladModel m = driven_mode(4, cplx(0.5, 0.2), 0.9);
  const Liouvillian L(m);
  std::mt19937 rng(3);
  const DensityMatrix rho = random_state(m.space, rng);
  const DenseMatrix x = rho.matrix();
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(x.data(), x.size());
  const Eigen::VectorXcd lv = L.vectorized() * v;
  const DenseMatrix lx = L.apply(0.0, x);
  CHECK((lv - Eigen::Map<const Eigen::VectorXcd>(lx.data(), lx.size())).norm() < 1e-12);
}

TEST_CASE("single excitation decays as exp(-kappa t)") {
  const LindbladModel m = damped_mode(3, 2.0);
  EvolverConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-10;
  const Trajectory tr = evolve(m, fock(m.space, 1), cfg, {0.0, 0.5, 1.0});
  const SparseMatrix n = build_sparse(OperatorPolynomial::number(0), m.space);
  CHECK(expectation(tr.states[2], n).real() == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
  CHECK(expectation(tr.states[1], n).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(tr.max_trace_drift < 1e-10);
}

TEST_CASE("two-level Rabi oscillation") {
  // On dim 2, a + a^dag is sigma_x; H = (Omega/2) sigma_x gives P0 = cos^2(Omega t / 2).
  const double omega = 1.7;
  LindbladModel m{ProductSpace({{"a", 2}}), 0.5 * omega * (a + ad), {}, {}, DissipatorConvention::HalfKappa};
  EvolverConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-10;
  const std::vector<double> times = uniform_times(4.0, 9);
  const Trajectory tr = evolve(m, fock(m.space, 0), cfg, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double p0 = tr.states[k].matrix()(0, 0).real();
    CHECK(p0 == doctest::Approx(std::pow(std::cos(0.5 * omega * times[k]), 2)).epsilon(1e-8));
  }
}

TEST_CASE("a constant driven term matches the static Hamiltonian") {
  const cplx e(0.4, -0.3);
  const LindbladModel stat = driven_mode(6, e, 1.0);
  LindbladModel drv = damped_mode(6, 1.0);
  drv.driven.push_back({ad, [e](double) { return e; }});
  EvolverConfig cfg;
  const Trajectory x = evolve(stat, fock(stat.space, 0), cfg, {1.5});
  const Trajectory y = evolve(drv, fock(drv.space, 0), cfg, {1.5});
  CHECK(max_abs(x.states[0].matrix() - y.states[0].matrix()) < 1e-7);
}

TEST_CASE("RK4 converges at fourth order") {
  const LindbladModel m = driven_mode(4, cplx(0.8, 0.0), 0.7);
  EvolverConfig ref;
  ref.abs_tol = 1e-14;
  ref.rel_tol = 1e-13;
  const DenseMatrix exact = evolve(m, fock(m.space, 0), ref, {1.0}).states[0].matrix();
  auto error = [&](double dt) {
    EvolverConfig c;
    c.method = IntegrationMethod::RK4;
    c.dt = dt;
    return max_abs(evolve(m, fock(m.space, 0), c, {1.0}).states[0].matrix() - exact);
  };
  const double ratio = error(0.1) / error(0.05);
  CHECK(ratio > 13.0);
  CHECK(ratio < 19.0);
}

TEST_CASE("truncation warnings flag a populated top level") {
  const LindbladModel m = driven_mode(3, cplx(2.0, 0.0), 0.5);
  const Trajectory tr = evolve(m, fock(m.space, 0), EvolverConfig{}, {2.0});
  CHECK(tr.max_top_population[0] > kTruncationWarningLevel);
  CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("steady state of a damped mode is the vacuum") {
  const DensityMatrix ss = steady_state(damped_mode(5, 1.0));
  CHECK(std::abs(ss.matrix()(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(ss.trace() - 1.0) < 1e-12);
}

TEST_CASE("driven damped mode settles at -2iE/kappa") {
  const LindbladModel m = driven_mode(30, cplx(2.0, 0.0), 2.0);
  const DensityMatrix ss = steady_state(m);
  CHECK(std::abs(expectation(ss, build_sparse(a, m.space)) - cplx(0, -2)) < 1e-6);
  CHECK(ss.hermiticity_error() < 1e-12);

  // The displaced frame carries the coherent state to the vacuum.
  const DensityMatrix disp = steady_state(displace_mode(m, 0, cplx(0, -2)));
  CHECK(std::abs(disp.matrix()(0, 0) - 1.0) < 1e-10);
}

TEST_CASE("steady state agrees with long-time evolution") {
  LindbladModel m = driven_mode(8, cplx(0.6, 0.2), 1.5);
  m.jumps.push_back({OperatorPolynomial::number(0), 0.3});
  const DensityMatrix ss = steady_state(m);
  EvolverConfig cfg;
  cfg.abs_tol = 1e-13;
  cfg.rel_tol = 1e-11;
  const Trajectory tr = evolve(m, fock(m.space, 0), cfg, {40.0});
  CHECK(max_abs(tr.states[0].matrix() - ss.matrix()) < 1e-8);
}

TEST_CASE("direct and iterative stationary solvers agree") {
  LindbladModel m{ProductSpace({{"a", 6}, {"b", 5}}), {}, {}, {}, DissipatorConvention::HalfKappa};
  const OperatorPolynomial b = OperatorPolynomial::annihilation(1);
  m.hamiltonian = 0.7 * ad * b + 0.7 * OperatorPolynomial::creation(1) * a + cplx(0.5, 0) * (a + ad);
  m.jumps = {{a, 1.0}, {b, 0.6}};
  StationaryOptions direct, iterative;
  direct.method = StationaryMethod::Direct;
  iterative.method = StationaryMethod::Iterative;
  const Liouvillian L(m);
  const StationarySolver sd(L, direct), si(L, iterative);
  CHECK(sd.direct());
  CHECK_FALSE(si.direct());
  CHECK(max_abs(sd.steady_state().matrix() - si.steady_state().matrix()) < 1e-10);

  // A traceless source: x solves L x + source = 0 with Tr x = 0.3.
  const DenseMatrix h = DenseMatrix(build_sparse(a * a + ad * ad, m.space));
  const DenseMatrix source = h * sd.steady_state().matrix() - sd.steady_state().matrix() * h;
  const DenseMatrix xd = sd.solve(source, 0.3), xi = si.solve(source, 0.3);
  CHECK(max_abs(L.apply(0.0, xd) + source) < 1e-10);
  CHECK(std::abs(xd.trace() - 0.3) < 1e-12);
  CHECK(max_abs(xd - xi) < 1e-8);
}

TEST_CASE("a degenerate kernel is reported") {
  // No dissipation: every Fock projector is stationary.
  const LindbladModel m{ProductSpace({{"a", 4}}), OperatorPolynomial::number(0), {}, {},
                        DissipatorConvention::HalfKappa};
  CHECK_THROWS_AS(steady_state(m), SteadyStateError);
  StationaryOptions it;
  it.method = StationaryMethod::Iterative;
  CHECK_THROWS_AS(steady_state(m, it), SteadyStateError);
}

TEST_CASE("time-dependent generators have no stationary solve") {
  LindbladModel m = damped_mode(3, 1.0);
  m.driven.push_back({ad, [](double t) { return cplx(std::cos(t), 0.0); }});
  CHECK_THROWS(steady_state(m));
}

TEST_CASE("model validation") {
  LindbladModel m = damped_mode(3, -1.0);
  CHECK_THROWS_AS(m.validate(), ModelError);
  m = damped_mode(3, 1.0);
  m.hamiltonian = cplx(0, 1) * ad;
  CHECK_THROWS_AS(m.validate(), ModelError);
}

TEST_CASE("trajectory CSV splits complex observables") {
  const LindbladModel m = driven_mode(4, cplx(0.5, 0.0), 1.0);
  const Trajectory tr = evolve(m, fock(m.space, 0), EvolverConfig{}, {0.0, 0.5});
  std::ostringstream os;
  write_trajectory_csv(os, tr,
                       {{"n", build_sparse(OperatorPolynomial::number(0), m.space)}, {"a", build_sparse(a, m.space)}});
  const std::string out = os.str();
  CHECK(out.substr(0, out.find('\n')) == "t,n,a.re,a.im");
  CHECK(std::count(out.begin(), out.end(), '\n') == 3);
}
