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

#include <optional>
#include <string>
#include <vector>

#include "mfpt/fockspace.hpp"
#include "mfpt/hierarchy.hpp"
#include "mfpt/integrator.hpp"
#include "mfpt/lindblad.hpp"
#include "mfpt/opalg.hpp"

namespace mfpt {

class MomentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClosureReport {
  bool ok = true;
  std::string violation;
};

/// Moment equations close exactly when H_MFT is at most quadratic and every
/// jump operator is linear in ladder operators.
ClosureReport closure_check(const OperatorPolynomial& h_mft, const std::vector<JumpTerm>& jumps,
                            const std::vector<std::string>& mode_names = {});

/// Mean-field model the moment equations are derived from.
struct MomentModel {
  OperatorPolynomial h_mft;
  OperatorPolynomial delta_h;
  std::vector<JumpTerm> jumps;
  DissipatorConvention convention = DissipatorConvention::HalfKappa;
};

struct MomentOptions {
  unsigned max_degree = 4;
  /// Steady solves are refused above this 2-norm condition number.
  double max_condition = 1e12;
  double residual_tolerance = 1e-10;
};

/// d m_j/dt = A m_j + constant * <1>_j + feed * m_{j-1} + feed_constant * <1>_{j-1}
/// for the moments m_j of one perturbation order j; <1>_0 = 1 and <1>_j = 0
/// for j >= 1.
struct MomentSystem {
  std::size_t order = 0;
  std::vector<Monomial> basis;
  Eigen::MatrixXcd a;
  DenseVector constant;
  Eigen::MatrixXcd feed;  // rows: basis, cols: basis of order j-1
  DenseVector feed_constant;
};

struct SteadyMoments {
  std::vector<std::vector<Monomial>> basis;  // per order
  std::vector<DenseVector> values;           // per order
  std::vector<double> condition;             // per order
  std::vector<double> residual;              // per order

  std::size_t order() const { return values.size() - 1; }
  /// <m>_j; throws MomentError if m is not tracked at order j.
  cplx value(std::size_t j, const Monomial& m) const;
  /// <p>_j for a polynomial, using <1>_j for its constant term.
  cplx value(std::size_t j, const OperatorPolynomial& p) const;
};

struct MomentTrajectory {
  std::vector<double> times;
  /// values[k][j] holds the order-j moments at times[k].
  std::vector<std::vector<DenseVector>> values;
  IntegrationStats stats;
};

/// Moment systems for orders 0..n, generated by closing the targets under the
/// mean-field generator and, going down one order, under the delta_H feed.
class MomentHierarchy {
 public:
  MomentHierarchy(MomentModel model, const std::vector<Monomial>& targets, std::size_t order,
                  MomentOptions opts = {});

  std::size_t order() const { return systems_.size() - 1; }
  const MomentSystem& system(std::size_t j) const { return systems_.at(j); }

  /// Throws MomentError on an ill-conditioned system or a large residual.
  SteadyMoments solve_steady() const;

  /// Integrates all orders from order-0 initial moments (higher orders start
  /// at zero). `initial` is indexed like system(0).basis.
  MomentTrajectory evolve(const DenseVector& initial, const EvolverConfig& cfg,
                          const std::vector<double>& sample_times) const;

  /// Heisenberg-picture generator  i[H_MFT, R] + sum_k w_k L'_k[R].
  OperatorPolynomial adjoint_generator(const OperatorPolynomial& r) const;
  /// i[delta_H, R].
  OperatorPolynomial feed_term(const OperatorPolynomial& r) const;

 private:
  std::vector<Monomial> close_basis(std::vector<Monomial> seeds) const;

  MomentModel model_;
  MomentOptions opts_;
  std::vector<MomentSystem> systems_;
};

/// Moment expectations evaluated on a density matrix.
DenseVector moments_of(const DensityMatrix& rho, const std::vector<Monomial>& basis);

/// |<R>_n / sum_{j<n} <R>_j|; nullopt when the denominator vanishes.
std::optional<double> indicator(const SteadyMoments& moments, const Monomial& r, std::size_t n);

struct SelfConsistentOptions {
  /// Weight of the new iterate in  m <- (1 - mixing) m + mixing * F(m).
  double mixing = 0.5;
  double tolerance = 1e-13;
  std::size_t max_iterations = 10000;
  MomentOptions moments;
};

struct SelfConsistentMeans {
  MeanFields means;
  std::size_t iterations = 0;
  double change = 0.0;
};

/// Steady mean fields that reproduce themselves: <F_j>_0 evaluated on the
/// steady moments of the H_MFT they define. Damped fixed-point iteration.
SelfConsistentMeans self_consistent_means(const OperatorPolynomial& h, const std::vector<JumpTerm>& jumps,
                                          DissipatorConvention convention, const Partition& partition,
                                          const InteractionDecomposition& decomposition, SplitKind kind,
                                          MeanFields guess, const SelfConsistentOptions& opts = {});

}  // namespace mfpt
