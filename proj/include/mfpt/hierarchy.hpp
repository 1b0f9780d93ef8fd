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

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfpt/fockspace.hpp"
#include "mfpt/lindblad.hpp"
#include "mfpt/opalg.hpp"

namespace mfpt {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two disjoint mode sets (mode ordinals of the model space).
struct Partition {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;

  /// Throws SplitError if the sets overlap, are empty or name modes
  /// outside a space of `mode_count` modes.
  void validate(std::size_t mode_count) const;
};

/// One product F^A F^B of the interaction Hamiltonian.
struct InteractionTerm {
  OperatorPolynomial fa;
  OperatorPolynomial fb;
};

struct InteractionDecomposition {
  std::vector<InteractionTerm> terms;

  /// sum_j F_j^A F_j^B.
  OperatorPolynomial interaction() const;
};

/// Asymmetric replaces only the A-side factors by their means.
enum class SplitKind { Symmetric, Asymmetric };

/// <F_j^A> and <F_j^B>, one entry per interaction term. The B entries are
/// ignored for an asymmetric split.
struct MeanFields {
  std::vector<cplx> a;
  std::vector<cplx> b;
};

struct SplitResult {
  OperatorPolynomial h_mft;
  OperatorPolynomial delta_h;
  /// c-number c with h_mft + delta_h = H + c; only nonzero for a symmetric
  /// split. It commutes with everything and is kept as a global phase.
  cplx constant_offset = 0.0;
};

/// Splits H = H_0 + sum_j F_j^A F_j^B into the mean-field Hamiltonian and the
/// perturbation. Throws SplitError if the decomposition does not reproduce
/// the cross-subsystem part of H or a factor leaves its subsystem.
SplitResult split_hamiltonian(const OperatorPolynomial& h, const Partition& partition,
                              const InteractionDecomposition& decomposition, SplitKind kind,
                              const MeanFields& means);

/// Where the hierarchy takes its mean fields from.
///   Constant       fixed values (steady-state means)
///   SelfConsistent read from the current zeroth-order state at every stage
///   Callback       an arbitrary function of time
enum class MeanFieldMode { Constant, SelfConsistent, Callback };

struct MfptSetup {
  LindbladModel model;
  Partition partition;
  InteractionDecomposition decomposition;
  SplitKind kind = SplitKind::Asymmetric;
  MeanFieldMode mean_field_mode = MeanFieldMode::SelfConsistent;
  MeanFields constant_means;
  std::function<MeanFields(double)> mean_callback;
  /// lambda in delta_H -> lambda * delta_H.
  double perturbation_scale = 1.0;
};

/// Matrices of one split, shared by the time-dependent and steady solvers.
class HierarchyGenerator {
 public:
  explicit HierarchyGenerator(const MfptSetup& setup);

  const ProductSpace& space() const { return base_.space(); }
  SplitKind kind() const { return kind_; }
  std::size_t term_count() const { return fa_.size(); }

  MeanFields mean_fields(double t, const DenseMatrix& rho0) const;
  MeanFields means_of(const DenseMatrix& rho0) const;

  /// Mean-field part of the interaction:  sum_j <F_j^A> F_j^B (+ F_j^A <F_j^B>).
  SparseMatrix mean_field_hamiltonian(const MeanFields& m) const;
  /// delta_H without the c-number offset, not scaled by lambda.
  SparseMatrix perturbation(const MeanFields& m) const;
  Liouvillian mean_field_liouvillian(const MeanFields& m) const;
  const Liouvillian& full_liouvillian() const { return full_; }

  /// d/dt of the stacked hierarchy [rho_0 | rho_1 | ... | rho_n].
  void rhs(double t, const DenseMatrix& stacked, DenseMatrix& out) const;

 private:
  Liouvillian base_;  // H_0 plus every jump
  Liouvillian full_;
  std::vector<SparseMatrix> fa_, fb_, products_;
  SparseMatrix interaction_;
  SplitKind kind_;
  MeanFieldMode mode_;
  MeanFields constant_;
  std::function<MeanFields(double)> callback_;
  double scale_;
};

struct HierarchyTrajectory {
  std::size_t order = 0;
  std::vector<double> times;
  /// states[k][i] is rho_i at times[k].
  std::vector<std::vector<DensityMatrix>> states;
  std::vector<MeanFields> mean_fields;
  /// Per order, max |Tr rho_i(t) - Tr rho_i(0)| over samples.
  std::vector<double> max_trace_drift;
  std::vector<double> max_top_population;
  std::vector<std::string> warnings;
  IntegrationStats stats;
};

/// Trace drift above which evolve_hierarchy fails.
inline constexpr double kHierarchyTraceTolerance = 1e-6;

HierarchyTrajectory evolve_hierarchy(const MfptSetup& setup, const DensityMatrix& rho0, std::size_t order,
                                     const EvolverConfig& cfg, const std::vector<double>& sample_times);

/// Stationary hierarchy under constant mean fields: rho_0 the steady state of
/// the mean-field generator, rho_i traceless solutions of
/// L_MFT rho_i - i[delta_H, rho_{i-1}] = 0.
std::vector<DensityMatrix> steady_hierarchy(const MfptSetup& setup, std::size_t order);

/// rho_0 + ... + rho_upto (all orders by default).
DensityMatrix resum(const std::vector<DensityMatrix>& orders, std::size_t upto = static_cast<std::size_t>(-1));

/// Partial trace of rho_i onto the modes in `keep`.
DensityMatrix reduced_order(const std::vector<DensityMatrix>& orders, const std::vector<std::size_t>& keep,
                            std::size_t i);

/// Frobenius norm of d(rho)/dt - L rho for rho = resum(orders, n), where
/// d/dt is taken from the hierarchy equations and L is the full generator.
double resummation_defect(const HierarchyGenerator& gen, double t, const std::vector<DensityMatrix>& orders,
                          std::size_t n);

/// Long-format CSV `t,order,<name>.re,<name>.im,...`.
void write_hierarchy_csv(std::ostream& os, const HierarchyTrajectory& traj,
                         const std::vector<NamedObservable>& observables);

}  // namespace mfpt
