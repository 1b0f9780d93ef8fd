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
#include <numbers>

#include "doctest.h"
#include "mfpt/sfg.hpp"

using namespace mfpt;

namespace {

sfg::Params unit_kappa(double g, double e_a) {
  sfg::Params p;
  p.g = g;
  p.e_a = e_a;
  p.e_b = 0.1;
  p.kappa_a = p.kappa_b = p.kappa_c = 2.0;
  p.initial_b = 0;
  return p;
}

// Independent evaluation of alpha = -i E_a + E_b^2 g^2 alpha / (1 + |alpha|^2 g^2)^2.
cplx cubic_rhs(const sfg::Params& p, cplx alpha) {
  const double s = 1.0 + std::norm(alpha) * p.g * p.g;
  return cplx(0.0, -p.e_a) + p.e_b * p.e_b * p.g * p.g * alpha / (s * s);
}

}  // namespace

TEST_CASE("analytic rates at the default parameters") {
  const sfg::Params p;  // g = 0.5, E_a = 20, kappa_a = 20: alpha = -2i, |G| = 1
  const sfg::Rates r = sfg::analytic_rates(p);
  CHECK(std::abs(r.alpha - cplx(0, -2)) < 1e-15);
  CHECK(std::abs(r.coupling) == doctest::Approx(1.0));
  CHECK(r.gamma1 == doctest::Approx(6.25e-3).epsilon(1e-12));
  CHECK(r.gamma2 == doctest::Approx(5.0 / 1664.0).epsilon(1e-12));
  CHECK(r.delta == doctest::Approx(-0.5 / 416.0).epsilon(1e-12));
}

TEST_CASE("rates use k = 2w under the full-kappa convention") {
  sfg::Params p;
  p.convention = DissipatorConvention::FullKappa;
  const sfg::Rates r = sfg::analytic_rates(p);
  CHECK(std::abs(r.alpha - cplx(0, -1)) < 1e-15);
  CHECK(r.gamma1 == doctest::Approx(0.25 / 80.0).epsilon(1e-12));
}

TEST_CASE("signal population after half a period") {
  const sfg::Params p;
  const double omega = 2.0 + 2.0 * 0.5 / 416.0;
  const double t = std::numbers::pi / omega;
  const double decay = 4.0 * (6.25e-3 + 5.0 / 1664.0);
  CHECK(sfg::population_b(t, p) == doctest::Approx(0.5 * (1.0 - std::exp(-decay * t))).epsilon(1e-12));
  CHECK(sfg::population_b(t, p) == doctest::Approx(0.0282).epsilon(1e-2));
  CHECK(sfg::population_b(0.0, p) == doctest::Approx(1.0));
}

TEST_CASE("generalized Pauli operators") {
  const ProductSpace bc({{"b", 2}, {"c", 2}});
  const OperatorPolynomial bdc = OperatorPolynomial(Monomial({{1, 0}, {0, 1}}), 1.0);
  for (const cplx g : {cplx(0, -1.3), cplx(0.4, 0.9), cplx(-2.0, 0.1)}) {
    const sfg::GeneralizedPauli s = sfg::generalized_pauli(bc, g);
    const DenseMatrix h(build_sparse(g * bdc + std::conj(g) * adjoint(bdc), bc));
    CHECK((h - DenseMatrix(cplx(0, -std::abs(g)) * s.x)).norm() < 1e-14);
    // Single-excitation subspace: states |0,1> and |1,0> (indices 1, 2).
    const DenseMatrix x(s.x), y(s.y), z(s.z);
    const DenseMatrix x2 = (x * x).block(1, 1, 2, 2), y2 = (y * y).block(1, 1, 2, 2), z2 = (z * z).block(1, 1, 2, 2);
    CHECK((x2 + DenseMatrix::Identity(2, 2)).norm() < 1e-14);
    CHECK((y2 - DenseMatrix::Identity(2, 2)).norm() < 1e-14);
    CHECK((z2 - DenseMatrix::Identity(2, 2)).norm() < 1e-14);
    CHECK((x + DenseMatrix(x.adjoint())).norm() < 1e-14);
    CHECK((y - DenseMatrix(y.adjoint())).norm() < 1e-14);
  }
  const sfg::GeneralizedPauli s = sfg::generalized_pauli(bc, cplx(0, -1));
  CHECK((DenseMatrix(s.r) - DenseMatrix(build_sparse(bdc, bc))).norm() < 1e-15);
}

TEST_CASE("the full model conserves signal plus idler excitations") {
  sfg::Params p;
  p.e_a = 2.0;
  p.kappa_a = 2.0;
  const LindbladModel m = sfg::build_full_model(p, sfg::PumpFrame::Displaced);
  const Trajectory tr = evolve(m, sfg::initial_state(p, sfg::PumpFrame::Displaced), EvolverConfig{},
                               uniform_times(2.0, 5));
  const SparseMatrix n = build_sparse(OperatorPolynomial::number(sfg::kSignal) + OperatorPolynomial::number(sfg::kIdler),
                                      m.space);
  for (const auto& rho : tr.states) CHECK(expectation(rho, n).real() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("initial state and frames") {
  sfg::Params p;
  p.e_a = 2.0;
  p.kappa_a = 2.0;
  const DensityMatrix lab = sfg::initial_state(p);
  const DensityMatrix disp = sfg::initial_state(p, sfg::PumpFrame::Displaced);
  CHECK(std::abs(sfg::pump_mean(lab, p, sfg::PumpFrame::Lab) - cplx(0, -2)) < 1e-8);
  CHECK(std::abs(sfg::pump_mean(disp, p, sfg::PumpFrame::Displaced) - cplx(0, -2)) < 1e-14);
  CHECK(sfg::full_space(p, sfg::PumpFrame::Lab).dim(sfg::kSignal) == 3);
  sfg::Params driven = p;
  driven.e_b = 0.1;
  CHECK(sfg::full_space(driven, sfg::PumpFrame::Lab).dim(sfg::kSignal) == 5);
  driven.dim_b = 7;
  CHECK(sfg::full_space(driven, sfg::PumpFrame::Lab).dim(sfg::kSignal) == 7);
}

TEST_CASE("symmetric pump amplitude") {
  const sfg::Params p = unit_kappa(1.0, 4.0);
  const sfg::SymmetricPump pump = sfg::symmetric_pump_amplitude(p);
  CHECK(std::abs(pump.alpha - cubic_rhs(p, pump.alpha)) <= 1e-12);
  CHECK(std::abs(pump.alpha - sfg::symmetric_relation_rhs(p, pump.alpha)) <= 1e-12);
  CHECK(pump.residual <= 1e-12);
  CHECK(pump.alpha.imag() == doctest::Approx(-4.00014).epsilon(1e-6));
  CHECK(std::abs(pump.alpha.real()) < 1e-12);

  sfg::Params undriven = p;
  undriven.e_b = 0.0;
  CHECK(std::abs(sfg::symmetric_pump_amplitude(undriven).alpha - cplx(0, -4)) < 1e-14);
}

TEST_CASE("closed-form indicators") {
  CHECK(sfg::indicator_asym_first(unit_kappa(0.5, 2.0)) == doctest::Approx(6.25e-4).epsilon(1e-12));
  CHECK(sfg::indicator_asym_first(unit_kappa(1.0, 2.0)) == doctest::Approx(4e-4).epsilon(1e-12));

  const sfg::Params p = unit_kappa(1.0, 4.0);
  const double x = std::norm(sfg::symmetric_pump_amplitude(p).alpha);
  const auto sym = sfg::indicator_sym_second(p);
  REQUIRE(sym.signal.has_value());
  CHECK(*sym.signal == doctest::Approx(2.0 / ((1.0 + x) * (x - 4.0))).epsilon(1e-12));

  sfg::Params other = p;
  other.kappa_b = 1.0;
  CHECK_THROWS_AS(sfg::indicator_sym_second(other), std::invalid_argument);
}

TEST_CASE("parameter validation names the field") {
  sfg::Params p;
  p.kappa_a = -1.0;
  try {
    p.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("kappa_a") != std::string::npos);
  }
}

TEST_CASE("effective model stays in the single-excitation sector") {
  const sfg::Params p;
  std::vector<std::string> warnings;
  const Liouvillian l = sfg::effective_signal_liouvillian(p, &warnings);
  CHECK(warnings.empty());
  const Trajectory tr = evolve(l, sfg::effective_initial_state(p), EvolverConfig{}, uniform_times(3.0, 4));
  const SparseMatrix n = build_sparse(OperatorPolynomial::number(0) + OperatorPolynomial::number(1), l.space());
  for (const auto& rho : tr.states) CHECK(expectation(rho, n).real() == doctest::Approx(1.0).epsilon(1e-9));

  sfg::Params weak = p;
  weak.g = 1.0;
  weak.e_a = 0.01;  // |G| = 1e-3 against gamma1 = 0.025
  warnings.clear();
  sfg::effective_signal_liouvillian(weak, &warnings);
  CHECK_FALSE(warnings.empty());
}
