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

#include "mfpt/sfg.hpp"

#include <unsupported/Eigen/Polynomials>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mfpt/csv.hpp"
#include "mfpt/operator_parser.hpp"

namespace mfpt::sfg {

namespace {

constexpr cplx kI{0.0, 1.0};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument(field + ": " + what);
}

// Polynomials in one real variable, lowest power first.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& p, const Poly& q) {
  Poly r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

Poly poly_add(Poly p, const Poly& q, double s = 1.0) {
  if (q.size() > p.size()) p.resize(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) p[i] += s * q[i];
  return p;
}

OperatorPolynomial jump(std::size_t mode) { return OperatorPolynomial::annihilation(mode); }

std::size_t signal_dim(const Params& p, std::size_t explicit_dim) {
  if (explicit_dim) return explicit_dim;
  return p.initial_b + 2 + (p.e_b != 0.0 ? 2 : 0);
}

}  // namespace

void Params::validate() const {
  require(std::isfinite(g) && g >= 0.0, "g", "must be finite and non-negative");
  require(std::isfinite(e_a), "E_a", "must be finite");
  require(std::isfinite(e_b), "E_b", "must be finite");
  require(std::isfinite(kappa_a) && kappa_a >= 0.0, "kappa_a", "must be finite and non-negative");
  require(std::isfinite(kappa_b) && kappa_b >= 0.0, "kappa_b", "must be finite and non-negative");
  require(std::isfinite(kappa_c) && kappa_c >= 0.0, "kappa_c", "must be finite and non-negative");
  require(dim_a == 0 || dim_a >= 2, "dim_a", "must be 0 (default) or >= 2");
  require(dim_b == 0 || dim_b >= 2, "dim_b", "must be 0 (default) or >= 2");
  require(dim_c == 0 || dim_c >= 2, "dim_c", "must be 0 (default) or >= 2");
  require(dim_b == 0 || initial_b < dim_b, "initial_b", "must fit inside the b truncation");
}

cplx asymmetric_pump_amplitude(const Params& p) {
  require(p.kappa_a > 0.0, "kappa_a", "must be positive for a steady pump");
  return -kI * p.e_a / p.weight_a();
}

ProductSpace full_space(const Params& p, PumpFrame frame) {
  p.validate();
  std::size_t na = p.dim_a;
  if (na == 0) {
    const double nbar = frame == PumpFrame::Lab ? std::norm(asymmetric_pump_amplitude(p)) : 0.0;
    na = truncation_for_population(nbar);
  }
  return ProductSpace({{"a", na}, {"b", signal_dim(p, p.dim_b)}, {"c", signal_dim(p, p.dim_c)}});
}

LindbladModel build_full_model(const Params& p, PumpFrame frame) {
  LindbladModel m;
  m.space = full_space(p, frame);
  const std::map<std::string, cplx, std::less<>> constants{{"g", p.g}, {"Ea", p.e_a}, {"Eb", p.e_b}};
  const std::string text = p.e_b != 0.0 ? "g*(ad*b*cd + a*bd*c) + Ea*(ad + a) + Eb*(bd + b)"
                                        : "g*(ad*b*cd + a*bd*c) + Ea*(ad + a)";
  m.hamiltonian = parse_operator(text, {"a", "b", "c"}, constants);
  m.jumps = {{jump(kPump), p.kappa_a}, {jump(kSignal), p.kappa_b}, {jump(kIdler), p.kappa_c}};
  m.convention = p.convention;
  if (frame == PumpFrame::Displaced) return displace_mode(m, kPump, asymmetric_pump_amplitude(p));
  return m;
}

DensityMatrix initial_state(const Params& p, PumpFrame frame) {
  const ProductSpace space = full_space(p, frame);
  const cplx alpha = frame == PumpFrame::Lab ? asymmetric_pump_amplitude(p) : cplx(0.0);
  const DenseVector pump = coherent_ket(space.dim(kPump), alpha);
  DenseVector ket = DenseVector::Zero(static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t n = 0; n < space.dim(kPump); ++n) {
    const std::size_t occ[] = {n, p.initial_b, 0};
    ket[static_cast<Eigen::Index>(space.index(occ))] = pump[static_cast<Eigen::Index>(n)];
  }
  return DensityMatrix::from_ket(space, ket);
}

cplx pump_mean(const DensityMatrix& rho, const Params& p, PumpFrame frame) {
  const cplx a = expectation(rho, build_sparse(jump(kPump), rho.space()));
  return frame == PumpFrame::Displaced ? a + asymmetric_pump_amplitude(p) : a;
}

// ---------------------------------------------------------- symmetric pump

cplx symmetric_relation_rhs(const Params& p, cplx alpha) {
  const double wa = p.weight_a(), wb = p.weight_b(), wc = p.weight_c();
  if (p.g == 0.0 || p.e_b == 0.0) return -kI * p.e_a / wa;
  require(wa > 0.0 && wc > 0.0, "kappa", "symmetric pump needs kappa_a, kappa_c > 0");
  const double k = p.g * p.g * p.e_b * p.e_b / wc;
  const double u = wb + p.g * p.g * std::norm(alpha) / wc;
  return (-kI * p.e_a + k * alpha / (u * u)) / wa;
}

SymmetricPump symmetric_pump_amplitude(const Params& p) {
  p.validate();
  require(p.kappa_a > 0.0, "kappa_a", "must be positive");
  SymmetricPump out;
  cplx alpha = -kI * p.e_a / p.weight_a();
  constexpr double kMix = 0.5;
  for (out.iterations = 1; out.iterations <= 10000; ++out.iterations) {
    const cplx next = symmetric_relation_rhs(p, alpha);
    const double step = std::abs(next - alpha);
    alpha += kMix * (next - alpha);
    if (step <= 1e-15 * std::max(1.0, std::abs(alpha))) break;
  }
  out.alpha = alpha;
  out.residual = std::abs(alpha - symmetric_relation_rhs(p, alpha));
  if (out.residual <= 1e-12) return out;

  // s = |alpha|^2 solves  s (w_a u^2 - K)^2 = E_a^2 u^4  with u = w_b + g^2 s / w_c.
  out.used_polynomial = true;
  const double wa = p.weight_a(), wb = p.weight_b(), wc = p.weight_c();
  const double k = p.g * p.g * p.e_b * p.e_b / wc;
  const Poly u{wb, p.g * p.g / wc};
  const Poly u2 = poly_mul(u, u);
  const Poly inner = poly_add(poly_mul({wa}, u2), {-k});
  const Poly lhs = poly_mul({0.0, 1.0}, poly_mul(inner, inner));
  const Poly rhs = poly_mul({p.e_a * p.e_a}, poly_mul(u2, u2));
  Poly f = poly_add(lhs, rhs, -1.0);
  while (f.size() > 1 && f.back() == 0.0) f.pop_back();
  Eigen::VectorXd coeffs = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);

  const cplx free = -kI * p.e_a / wa;
  double best_res = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
    const cplx root = solver.roots()[i];
    if (std::abs(root.imag()) > 1e-8 * std::max(1.0, std::abs(root)) || root.real() < 0.0) continue;
    const double s = root.real();
    const double uu = wb + p.g * p.g * s / wc;
    cplx cand = -kI * p.e_a / (wa - k / (uu * uu));
    // A few fixed-point polishing steps on the exact relation.
    for (int it = 0; it < 3; ++it) cand = symmetric_relation_rhs(p, cand);
    const double res = std::abs(cand - symmetric_relation_rhs(p, cand));
    if (res > 1e-12) continue;
    out.roots.push_back(cand);
    if (out.roots.size() == 1 || std::abs(cand - free) < std::abs(out.alpha - free)) {
      out.alpha = cand;
      best_res = res;
    }
  }
  if (out.roots.empty()) throw std::runtime_error("symmetric pump amplitude: no root meets the 1e-12 residual");
  out.residual = best_res;
  return out;
}

// ------------------------------------------------------------------- rates

Rates analytic_rates(const Params& p) {
  Rates r;
  r.alpha = asymmetric_pump_amplitude(p);
  r.nbar_a = std::norm(r.alpha);
  r.coupling = p.g * r.alpha;
  const double k = 2.0 * p.weight_a();
  const double g2 = p.g * p.g;
  const double den = k * k + 16.0 * g2 * r.nbar_a;
  r.gamma1 = g2 / (2.0 * k);
  r.gamma2 = g2 * k / (4.0 * den);
  r.delta = -2.0 * g2 * std::abs(r.coupling) / den;
  return r;
}

double population_b(double t, const Params& p) {
  const Rates r = analytic_rates(p);
  return 0.5 * (1.0 + std::exp(-r.decay() * t) * std::cos(r.frequency() * t));
}

// ------------------------------------------------------- effective B model

ProductSpace signal_space(const Params& p) {
  p.validate();
  return ProductSpace({{"b", signal_dim(p, p.dim_b)}, {"c", signal_dim(p, p.dim_c)}});
}

GeneralizedPauli generalized_pauli(const ProductSpace& bc, cplx coupling) {
  if (bc.mode_count() != 2) throw std::invalid_argument("generalized Pauli operators need a (b, c) space");
  const double theta = std::abs(coupling) > 0.0 ? std::arg(coupling) : -0.5 * std::numbers::pi;
  const cplx phase = kI * std::exp(kI * theta);
  GeneralizedPauli out;
  out.r = build_sparse(OperatorPolynomial(Monomial({{1, 0}, {0, 1}}), phase), bc);
  const SparseMatrix rd = out.r.adjoint();
  out.x = out.r - rd;
  out.y = out.r + rd;
  out.z = build_sparse(OperatorPolynomial::number(0) - OperatorPolynomial::number(1), bc);
  out.w = 0.5 * (out.y - kI * out.z);
  return out;
}

Liouvillian effective_signal_liouvillian(const Params& p, std::vector<std::string>* warnings) {
  const Rates r = analytic_rates(p);
  const ProductSpace bc = signal_space(p);
  LindbladModel bare;
  bare.space = bc;
  bare.convention = p.convention;
  OperatorPolynomial h = r.coupling * OperatorPolynomial(Monomial({{1, 0}, {0, 1}}), 1.0);
  h += std::conj(r.coupling) * OperatorPolynomial(Monomial({{0, 1}, {1, 0}}), 1.0);
  if (p.e_b != 0.0) h += p.e_b * (OperatorPolynomial::creation(0) + OperatorPolynomial::annihilation(0));
  bare.hamiltonian = h;
  bare.jumps = {{jump(0), p.kappa_b}, {jump(1), p.kappa_c}};

  Liouvillian l(bare);
  const GeneralizedPauli pauli = generalized_pauli(bc, r.coupling);
  l.add_hamiltonian(r.delta * kI * pauli.x);
  if (r.gamma1 > 0.0) l.add_dissipator(pauli.x, r.gamma1);
  if (r.gamma2 > 0.0) {
    l.add_dissipator(pauli.y, r.gamma2);
    l.add_dissipator(pauli.z, r.gamma2);
  }
  if (warnings && std::abs(r.coupling) < 10.0 * r.gamma1) {
    warnings->push_back("|G| = " + format_number(std::abs(r.coupling)) + " is not large against gamma1 = " +
                        format_number(r.gamma1));
  }
  return l;
}

DensityMatrix effective_initial_state(const Params& p) {
  const ProductSpace bc = signal_space(p);
  const std::size_t occ[] = {p.initial_b, 0};
  return DensityMatrix::fock(bc, occ);
}

// -------------------------------------------------------------- indicators

double indicator_asym_first(const Params& p) {
  require(p.kappa_a > 0.0, "kappa_a", "must be positive");
  require(p.kappa_c > 0.0, "kappa_c", "must be positive");
  const double ka = 2.0 * p.weight_a(), kb = 2.0 * p.weight_b(), kc = 2.0 * p.weight_c();
  const double g_abs2 = std::norm(p.g * asymmetric_pump_amplitude(p));
  const double den = kb / 2.0 + 2.0 * g_abs2 / kc;
  return 4.0 * p.e_b * p.e_b * p.g * p.g / (den * den * ka * kc);
}

SymmetricIndicators indicator_sym_second(const Params& p) {
  const auto unit = [](double w) { return std::abs(w - 1.0) < 1e-12; };
  if (!unit(p.weight_a()) || !unit(p.weight_b()) || !unit(p.weight_c())) {
    throw std::invalid_argument("closed-form symmetric indicators need unit dissipator weights (kappa = 2)");
  }
  SymmetricIndicators out;
  const double x = p.g * p.g * std::norm(symmetric_pump_amplitude(p).alpha);
  if (std::abs(4.0 - x) < 1e-9) return out;
  out.signal = std::abs(2.0 * p.g * p.g / ((1.0 + x) * (4.0 - x)));
  return out;
}

// ------------------------------------------------------------ MFPT plumbing

Partition partition() { return {{kPump}, {kSignal, kIdler}}; }

InteractionDecomposition decomposition(double g) {
  InteractionDecomposition d;
  d.terms.push_back({OperatorPolynomial::creation(kPump), OperatorPolynomial(Monomial({{0, 0}, {0, 1}, {1, 0}}), g)});
  d.terms.push_back({OperatorPolynomial::annihilation(kPump), OperatorPolynomial(Monomial({{0, 0}, {1, 0}, {0, 1}}), g)});
  return d;
}

MeanFields steady_means(const Params& p, SplitKind kind) {
  const cplx alpha = asymmetric_pump_amplitude(p);
  MeanFields guess{{std::conj(alpha), alpha}, {0.0, 0.0}};
  if (kind == SplitKind::Asymmetric) return guess;
  const LindbladModel lab = build_full_model(p, PumpFrame::Lab);
  return self_consistent_means(lab.hamiltonian, lab.jumps, p.convention, partition(), decomposition(p.g), kind,
                               guess)
      .means;
}

MfptSetup mfpt_setup(const Params& p, SplitKind kind, MeanFieldMode mode, PumpFrame frame) {
  MfptSetup s;
  s.model = build_full_model(p, frame);
  s.partition = partition();
  s.decomposition = decomposition(p.g);
  s.kind = kind;
  s.mean_field_mode = mode;
  if (mode != MeanFieldMode::Constant) return s;
  s.constant_means = steady_means(p, kind);
  if (frame == PumpFrame::Displaced) {
    const cplx shift = asymmetric_pump_amplitude(p);
    s.constant_means.a[0] -= std::conj(shift);
    s.constant_means.a[1] -= shift;
  }
  return s;
}

MomentModel moment_model(const Params& p, SplitKind kind) {
  const LindbladModel lab = build_full_model(p, PumpFrame::Lab);
  const SplitResult split =
      split_hamiltonian(lab.hamiltonian, partition(), decomposition(p.g), kind, steady_means(p, kind));
  return {split.h_mft, split.delta_h, lab.jumps, p.convention};
}

}  // namespace mfpt::sfg
