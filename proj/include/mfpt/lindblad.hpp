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
#include <memory>
#include <string>
#include <vector>

#include "mfpt/fockspace.hpp"
#include "mfpt/integrator.hpp"
#include "mfpt/opalg.hpp"

namespace mfpt {

/// How a jump rate kappa maps onto the weight w of
///   w * (2 d rho d^dag - d^dag d rho - rho d^dag d).
/// HalfKappa (w = kappa/2) makes kappa the energy decay rate of a mode;
/// FullKappa (w = kappa) takes the generator literally with kappa as weight.
enum class DissipatorConvention { HalfKappa, FullKappa };

inline double dissipator_weight(double rate, DissipatorConvention c) {
  return c == DissipatorConvention::HalfKappa ? 0.5 * rate : rate;
}

struct JumpTerm {
  OperatorPolynomial op;
  double rate = 0.0;
};

/// Time-dependent Hamiltonian piece  c(t) op + conj(c(t)) op^dag.
struct DrivenTerm {
  OperatorPolynomial op;
  std::function<cplx(double)> coefficient;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LindbladModel {
  ProductSpace space;
  OperatorPolynomial hamiltonian;
  std::vector<DrivenTerm> driven;
  std::vector<JumpTerm> jumps;
  DissipatorConvention convention = DissipatorConvention::HalfKappa;

  /// Throws ModelError for a non-Hermitian Hamiltonian, a negative rate or
  /// an operator outside the space.
  void validate() const;
};

/// The same dynamics for rho' = D^dag(shift) rho D(shift) on `mode`
/// (a = a' + shift). A jump d = e + c with c-number c becomes e plus the
/// Hamiltonian i w (c^* e - c e^dag); c-number energies are dropped.
LindbladModel displace_mode(const LindbladModel& model, std::size_t mode, cplx shift);

/// Numerical generator  L rho = K rho + rho K^dag + sum_k 2 w_k d_k rho d_k^dag
/// with K = -iH - sum_k w_k d_k^dag d_k.
class Liouvillian {
 public:
  Liouvillian() = default;
  explicit Liouvillian(const LindbladModel& model);
  explicit Liouvillian(ProductSpace space);

  void add_hamiltonian(const SparseMatrix& h);
  void add_dissipator(const SparseMatrix& op, double weight);
  void add_driven(const SparseMatrix& op, std::function<cplx(double)> coefficient);

  const ProductSpace& space() const { return space_; }
  bool time_dependent() const { return !driven_.empty(); }
  const SparseMatrix& static_hamiltonian() const { return hamiltonian_; }
  /// K = -iH - sum_k w_k d_k^dag d_k of the static part.
  const SparseMatrix& generator() const { return generator_; }
  SparseMatrix hamiltonian_at(double t) const;

  /// out = L(t) rho. `out` must not alias `rho`.
  void apply(double t, const DenseMatrix& rho, DenseMatrix& out) const;
  DenseMatrix apply(double t, const DenseMatrix& rho) const;
  /// Same as apply for a Hermitian rho, using L(rho) = X + X^dag.
  void apply_hermitian(double t, const DenseMatrix& rho, DenseMatrix& out) const;
  /// x = X = K rho - i h_driven(t) rho + sum_k w_k d_k rho d_k^dag, the half
  /// of L(rho) = X + X^dag for a Hermitian rho. `x` must not alias `rho`.
  void hermitian_half(double t, const DenseMatrix& rho, DenseMatrix& x) const;

  /// Column-stacked D^2 x D^2 matrix of the time-independent generator.
  SparseMatrix vectorized() const;

 private:
  struct Dissipator {
    SparseMatrix op;
    SparseMatrix op_adj;
    double weight;
    /// For operators with at most one entry per row (ladder monomials):
    /// column and value of that entry, column -1 for an empty row. Empty
    /// when some row has more entries.
    std::vector<Eigen::Index> row_col;
    std::vector<cplx> row_val;
  };

  static Dissipator make_dissipator(const SparseMatrix& op, double weight);
  /// out += scale * d rho d^dag.
  static void add_jump(const Dissipator& d, const DenseMatrix& rho, double scale, DenseMatrix& out);
  struct Driven {
    SparseMatrix op;
    SparseMatrix op_adj;
    std::function<cplx(double)> coefficient;
  };

  void rebuild_generator();

  ProductSpace space_;
  SparseMatrix hamiltonian_;
  SparseMatrix generator_;      // K
  SparseMatrix generator_adj_;  // K^dag
  std::vector<Dissipator> dissipators_;
  std::vector<Driven> driven_;
};

/// out += factor * (h rho - rho h).
void add_commutator(const SparseMatrix& h, const DenseMatrix& rho, cplx factor, DenseMatrix& out);

DensityMatrix apply_liouvillian(const LindbladModel& model, const DensityMatrix& rho, double t = 0.0);

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  double max_trace_drift = 0.0;
  /// Per mode, max over samples of the top Fock-level population.
  std::vector<double> max_top_population;
  std::vector<std::string> warnings;
  IntegrationStats stats;
};

/// Top-level population above which a run flags a truncation warning.
inline constexpr double kTruncationWarningLevel = 1e-6;

Trajectory evolve(const Liouvillian& L, const DensityMatrix& rho0, const EvolverConfig& cfg,
                  const std::vector<double>& sample_times);
Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0, const EvolverConfig& cfg,
                  const std::vector<double>& sample_times);

/// `count` evenly spaced times covering [0, t_max] inclusive.
std::vector<double> uniform_times(double t_max, std::size_t count);

class SteadyStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Direct: sparse LU of the vectorized generator with the trace condition in
/// place of the (0,0) row; a second factorization with the last diagonal row
/// replaced detects a degenerate kernel. Memory and time grow quickly with
/// D^2, so it suits small spaces.
/// Iterative: restarted GMRES on K^{-1} L, where K^{-1} inverts the no-jump
/// part X -> K X + X K^dag by a Schur-based Sylvester solve. Two solves from
/// different starting states detect a degenerate kernel.
/// Auto picks Direct for D <= kDirectStationaryLimit.
enum class StationaryMethod { Auto, Direct, Iterative };

inline constexpr std::size_t kDirectStationaryLimit = 40;

struct StationaryOptions {
  StationaryMethod method = StationaryMethod::Auto;
  double tolerance = 1e-12;  // relative residual of the iterative solve
  std::size_t restart = 60;
  std::size_t max_iterations = 4000;
};

/// Stationary problems L x + source = 0 with a prescribed trace for a
/// time-independent generator.
class StationarySolver {
 public:
  explicit StationarySolver(const Liouvillian& L, const StationaryOptions& opts = {});
  ~StationarySolver();
  StationarySolver(StationarySolver&&) noexcept;
  StationarySolver& operator=(StationarySolver&&) noexcept;

  const DensityMatrix& steady_state() const { return steady_; }
  DenseMatrix solve(const DenseMatrix& source, cplx trace_value) const;
  bool direct() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  DensityMatrix steady_;
};

/// Unique trace-one kernel vector of the vectorized generator. Throws
/// SteadyStateError when the kernel is degenerate or the solve fails.
DensityMatrix steady_state(const Liouvillian& L, const StationaryOptions& opts = {});
DensityMatrix steady_state(const LindbladModel& model, const StationaryOptions& opts = {});

struct NamedObservable {
  std::string name;
  SparseMatrix op;
};

/// CSV with header `t,<name>...`; non-Hermitian observables are split into
/// `<name>.re,<name>.im`.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<NamedObservable>& observables);

}  // namespace mfpt
