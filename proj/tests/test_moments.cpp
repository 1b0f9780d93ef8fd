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

#include "doctest.h"
#include "mfpt/moments.hpp"
#include "mfpt/sfg.hpp"

using namespace mfpt;

namespace {

const OperatorPolynomial a = OperatorPolynomial::annihilation(0);
const OperatorPolynomial ad = OperatorPolynomial::creation(0);
const OperatorPolynomial one = OperatorPolynomial::identity();

MomentModel driven_mode(double e, double kappa) { return {e * (ad + a), {}, {{a, kappa}}}; }

sfg::Params unit_kappa(double g, double e_a) {
  sfg::Params p;
  p.g = g;
  p.e_a = e_a;
  p.e_b = 0.1;
  p.kappa_a = p.kappa_b = p.kappa_c = 2.0;
  p.initial_b = 0;
  return p;
}

}  // namespace

TEST_CASE("closure check") {
  CHECK(closure_check(ad * a + 0.3 * (a + ad), {{a, 1.0}}).ok);
  CHECK(closure_check(a * a + ad * ad, {}).ok);
  const OperatorPolynomial b = OperatorPolynomial::annihilation(1), cd = OperatorPolynomial::creation(2);
  const ClosureReport cubic = closure_check(ad * b * cd + adjoint(ad * b * cd), {}, {"a", "b", "c"});
  CHECK_FALSE(cubic.ok);
  CHECK_FALSE(cubic.violation.empty());
  CHECK_FALSE(closure_check(ad * a, {{a * a, 1.0}}).ok);
  CHECK_FALSE(closure_check(ad * a, {{OperatorPolynomial::number(0), 1.0}}).ok);
}

TEST_CASE("Heisenberg generator of a driven damped mode") {
  const MomentHierarchy h(driven_mode(1.5, 2.0), {Monomial::annihilator(0)}, 0);
  // i[E(a + a^dag), a] = -iE and the damping gives -(kappa/2) a.
  CHECK(h.adjoint_generator(a).approx_equal(cplx(0, -1.5) * one - 1.0 * a, 1e-15));
  CHECK(h.feed_term(a).is_zero());
}

TEST_CASE("driven damped mode: steady value and transient") {
  const MomentHierarchy h(driven_mode(2.0, 2.0), {Monomial::annihilator(0), Monomial({{1, 1}})}, 0);
  const SteadyMoments sm = h.solve_steady();
  CHECK(std::abs(sm.value(0, Monomial::annihilator(0)) - cplx(0, -2)) < 1e-12);
  CHECK(std::abs(sm.value(0, OperatorPolynomial::number(0)) - 4.0) < 1e-12);

  const auto& basis = h.system(0).basis;
  const DenseVector zero = DenseVector::Zero(static_cast<Eigen::Index>(basis.size()));
  EvolverConfig cfg;
  cfg.abs_tol = 1e-13;
  cfg.rel_tol = 1e-11;
  const MomentTrajectory tr = h.evolve(zero, cfg, {0.0, 0.7});
  const auto it = std::find(basis.begin(), basis.end(), Monomial::annihilator(0));
  REQUIRE(it != basis.end());
  const cplx at = tr.values[1][0][it - basis.begin()];
  CHECK(std::abs(at - cplx(0, -2) * (1.0 - std::exp(-0.7))) < 1e-10);
}

TEST_CASE("a system without damping is refused") {
  const MomentHierarchy h({0.0 * ad * a, {}, {}}, {Monomial::annihilator(0)}, 0);
  CHECK_THROWS_AS(h.solve_steady(), MomentError);
}

TEST_CASE("moments of a coherent state") {
  const ProductSpace s({{"a", 30}});
  const cplx alpha(0.5, -1.0);
  const DensityMatrix rho = DensityMatrix::from_ket(s, coherent_ket(30, alpha));
  const DenseVector m = moments_of(rho, {Monomial::annihilator(0), Monomial({{1, 1}}), Monomial::creator(0, 2)});
  CHECK(std::abs(m[0] - alpha) < 1e-10);
  CHECK(std::abs(m[1] - std::norm(alpha)) < 1e-10);
  CHECK(std::abs(m[2] - std::conj(alpha * alpha)) < 1e-10);
}

TEST_CASE("asymmetric first-order indicator at a Fig. 2 point") {
  // |G|^2 = g^2 |alpha|^2 = 1, so 4 E_b^2 g^2 / ((1 + 1)^2 * 2 * 2) = 6.25e-4.
  const sfg::Params p = unit_kappa(0.5, 2.0);
  const MomentHierarchy h(sfg::moment_model(p, SplitKind::Asymmetric), {Monomial::annihilator(sfg::kPump)}, 1);
  const auto ind = indicator(h.solve_steady(), Monomial::annihilator(sfg::kPump), 1);
  REQUIRE(ind.has_value());
  CHECK(*ind == doctest::Approx(6.25e-4).epsilon(1e-10));
  CHECK(sfg::indicator_asym_first(p) == doctest::Approx(6.25e-4).epsilon(1e-12));
}

TEST_CASE("moment hierarchy matches the density-matrix hierarchy") {
  sfg::Params p = unit_kappa(0.3, 1.5);
  p.dim_a = 8;
  p.dim_b = p.dim_c = 5;
  const MomentHierarchy h(sfg::moment_model(p, SplitKind::Asymmetric),
                          {Monomial::annihilator(sfg::kPump), Monomial::annihilator(sfg::kSignal)}, 2);
  const SteadyMoments sm = h.solve_steady();
  const MfptSetup setup =
      sfg::mfpt_setup(p, SplitKind::Asymmetric, MeanFieldMode::Constant, sfg::PumpFrame::Displaced);
  const std::vector<DensityMatrix> orders = steady_hierarchy(setup, 2);
  const SparseMatrix ma = build_sparse(a, orders[0].space());
  const SparseMatrix mb = build_sparse(OperatorPolynomial::annihilation(sfg::kSignal), orders[0].space());
  const cplx shift = sfg::asymmetric_pump_amplitude(p);
  for (std::size_t j = 0; j <= 2; ++j) {
    const cplx a_dm = expectation(orders[j], ma) + (j == 0 ? shift : cplx(0.0));
    CHECK(std::abs(a_dm - sm.value(j, Monomial::annihilator(sfg::kPump))) < 1e-6);
    CHECK(std::abs(expectation(orders[j], mb) - sm.value(j, Monomial::annihilator(sfg::kSignal))) < 1e-6);
  }
}

TEST_CASE("indicator handles a vanishing denominator") {
  const MomentHierarchy h(driven_mode(0.0, 2.0), {Monomial::annihilator(0)}, 1);
  CHECK_FALSE(indicator(h.solve_steady(), Monomial::annihilator(0), 1).has_value());
}

TEST_CASE("self-consistent symmetric means solve the pump relation") {
  const sfg::Params p = unit_kappa(0.5, 4.0);
  const sfg::SymmetricPump pump = sfg::symmetric_pump_amplitude(p);
  const MeanFields means = sfg::steady_means(p, SplitKind::Symmetric);
  CHECK(std::abs(means.a[1] - pump.alpha) < 1e-10);
  CHECK(std::abs(means.a[0] - std::conj(pump.alpha)) < 1e-10);
}
