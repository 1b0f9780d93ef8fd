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

// Sum-frequency conversion: pump a, signal b, idler c with
//   H = g (a^dag b c^dag + a b^dag c) + E_a (a^dag + a) + E_b (b^dag + b).

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfpt/fockspace.hpp"
#include "mfpt/hierarchy.hpp"
#include "mfpt/lindblad.hpp"
#include "mfpt/moments.hpp"

namespace mfpt::sfg {

inline constexpr std::size_t kPump = 0;
inline constexpr std::size_t kSignal = 1;
inline constexpr std::size_t kIdler = 2;

/// Lab keeps the pump as is; Displaced shifts it by its free steady
/// amplitude, a = a' + alpha, which removes the pump drive and leaves only
/// fluctuations in mode a'.
enum class PumpFrame { Lab, Displaced };

struct Params {
  double g = 0.5;
  double e_a = 20.0;
  double e_b = 0.0;
  double kappa_a = 20.0;
  double kappa_b = 0.0;
  double kappa_c = 0.0;
  /// 0 selects the default truncation.
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::size_t dim_c = 0;
  /// Fock occupation of b at t = 0; a starts in its free steady state, c empty.
  std::size_t initial_b = 1;
  DissipatorConvention convention = DissipatorConvention::HalfKappa;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  double weight_a() const { return dissipator_weight(kappa_a, convention); }
  double weight_b() const { return dissipator_weight(kappa_b, convention); }
  double weight_c() const { return dissipator_weight(kappa_c, convention); }
};

/// Free steady pump amplitude  -i E_a / w_a  (= -2i E_a / kappa_a for HalfKappa).
cplx asymmetric_pump_amplitude(const Params& p);

/// Truncations actually used: explicit ones win, otherwise the pump gets
/// ceil(n + 6 sqrt(n) + 6) for its mean population in the chosen frame and
/// b, c get initial_b + 2 (+2 more when b is driven).
ProductSpace full_space(const Params& p, PumpFrame frame);

LindbladModel build_full_model(const Params& p, PumpFrame frame = PumpFrame::Lab);
/// Pump coherent state (vacuum in the displaced frame) x |initial_b> x |0>.
DensityMatrix initial_state(const Params& p, PumpFrame frame = PumpFrame::Lab);
/// <a> in the lab frame from a state of the given frame.
cplx pump_mean(const DensityMatrix& rho, const Params& p, PumpFrame frame);

struct SymmetricPump {
  cplx alpha;
  /// |alpha - rhs(alpha)| of the defining relation.
  double residual = 0.0;
  std::size_t iterations = 0;
  bool used_polynomial = false;
  /// Every admissible solution found by the polynomial route (empty if the
  /// fixed-point iteration converged).
  std::vector<cplx> roots;
};

/// Right-hand side of the symmetric mean-pump relation
///   alpha w_a = -i E_a + (g^2 E_b^2 / w_c) alpha / (w_b + g^2 |alpha|^2 / w_c)^2,
/// which for kappa_a = kappa_b = kappa_c = 2 (HalfKappa) is the cubic
///   alpha = -i E_a + E_b^2 g^2 alpha / (1 + |alpha|^2 g^2)^2.
cplx symmetric_relation_rhs(const Params& p, cplx alpha);

/// Damped fixed point; falls back to the quintic in |alpha|^2 when the
/// iteration stalls. Throws std::runtime_error if no root meets 1e-12.
SymmetricPump symmetric_pump_amplitude(const Params& p);

struct Rates {
  cplx alpha;
  double nbar_a = 0.0;
  cplx coupling;  // G = g alpha
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double delta = 0.0;

  double decay() const { return 4.0 * (gamma1 + gamma2); }
  double frequency() const { return 2.0 * std::abs(coupling) - 2.0 * delta; }
};

/// gamma1 = g^2/(2k), gamma2 = g^2 k / (4(k^2 + 16 g^2 n)), Delta = -2 g^2 |G| / (k^2 + 16 g^2 n)
/// with k = 2 w_a (kappa_a for HalfKappa) and n = |alpha|^2.
Rates analytic_rates(const Params& p);

/// N_b(t) = (1 + exp(-4(gamma1+gamma2) t) cos((2|G| - 2 Delta) t)) / 2.
double population_b(double t, const Params& p);

/// Operators on the (b, c) space built from R = i e^{i theta} b^dag c,
/// theta = arg G, so that G b^dag c + h.c. = -i|G| (R - R^dag). For G = -i|G|
/// this is R = b^dag c.
struct GeneralizedPauli {
  SparseMatrix r, x, y, z, w;
};

ProductSpace signal_space(const Params& p);
GeneralizedPauli generalized_pauli(const ProductSpace& bc, cplx coupling);

/// B-only model: H_B = G b^dag c + G^* b c^dag (+ E_b drive) + Delta iX, the
/// dissipators gamma1 L_X, gamma2 (L_Y + L_Z) and the bare b, c losses.
/// Appends a warning when |G| < 10 gamma1.
Liouvillian effective_signal_liouvillian(const Params& p, std::vector<std::string>* warnings = nullptr);
DensityMatrix effective_initial_state(const Params& p);

/// 4 E_b^2 g^2 / ((k_b/2 + 2|G|^2/k_c)^2 k_a k_c) with k = 2w.
double indicator_asym_first(const Params& p);

struct SymmetricIndicators {
  double pump = 0.0;
  /// Undefined at the pole g^2 |alpha|^2 = 4.
  std::optional<double> signal;
};

/// Closed forms for kappa_a = kappa_b = kappa_c = 2 (HalfKappa weights of 1);
/// throws std::invalid_argument otherwise.
SymmetricIndicators indicator_sym_second(const Params& p);

Partition partition();
/// F_1^A = a^dag, F_1^B = g b c^dag; F_2^A = a, F_2^B = g b^dag c.
InteractionDecomposition decomposition(double g);

/// Hierarchy problem with the given mean-field handling. For Constant mode
/// the means are the asymmetric pump amplitude or the symmetric steady
/// values, shifted into the chosen frame; other modes leave them empty. The
/// split commutes with the pump displacement, so both frames describe the
/// same hierarchy.
MfptSetup mfpt_setup(const Params& p, SplitKind kind, MeanFieldMode mode, PumpFrame frame = PumpFrame::Lab);

/// Steady mean fields of the chosen split, from the moment equations.
MeanFields steady_means(const Params& p, SplitKind kind);

/// H_MFT, delta_H and jumps for the moment equations of the chosen split.
MomentModel moment_model(const Params& p, SplitKind kind);

}  // namespace mfpt::sfg
