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

#include "mfpt/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mfpt/csv.hpp"

namespace mfpt {

namespace {

constexpr cplx kI{0.0, 1.0};

bool touches_both(const Monomial& m, const Partition& p) {
  const auto on = [&](const std::vector<std::size_t>& set) {
    return std::any_of(set.begin(), set.end(), [&](std::size_t k) { return m.acts_on(k); });
  };
  return on(p.a) && on(p.b);
}

void check_means(const InteractionDecomposition& d, const MeanFields& m, SplitKind kind) {
  if (m.a.size() != d.terms.size()) throw SplitError("need one A-side mean field per interaction term");
  if (kind == SplitKind::Symmetric && m.b.size() != d.terms.size()) {
    throw SplitError("symmetric split needs one B-side mean field per interaction term");
  }
}

// H_0 = H - sum_j F^A F^B, checked to have no cross-subsystem terms.
OperatorPolynomial local_part(const OperatorPolynomial& h, const Partition& partition,
                              const InteractionDecomposition& decomposition) {
  for (std::size_t j = 0; j < decomposition.terms.size(); ++j) {
    const auto& t = decomposition.terms[j];
    if (!supported_on(t.fa, partition.a)) {
      throw SplitError("interaction term " + std::to_string(j) + ": F^A acts outside subsystem A");
    }
    if (!supported_on(t.fb, partition.b)) {
      throw SplitError("interaction term " + std::to_string(j) + ": F^B acts outside subsystem B");
    }
  }
  OperatorPolynomial rest = h - decomposition.interaction();
  double scale = 1.0;
  for (const auto& [m, c] : h.terms()) scale = std::max(scale, std::abs(c));
  for (const auto& [m, c] : rest.terms()) {
    if (touches_both(m, partition) && std::abs(c) > 1e-12 * scale) {
      throw SplitError("decomposition does not reproduce the interaction Hamiltonian");
    }
  }
  OperatorPolynomial clean;
  for (const auto& [m, c] : rest.terms()) {
    if (!touches_both(m, partition)) clean.add_term(m, c);
  }
  return clean;
}

std::vector<DensityMatrix> unstack(const ProductSpace& space, const DenseMatrix& stacked) {
  const Eigen::Index d = static_cast<Eigen::Index>(space.dimension());
  std::vector<DensityMatrix> out;
  for (Eigen::Index i = 0; i < stacked.cols() / d; ++i) out.emplace_back(space, stacked.middleCols(i * d, d));
  return out;
}

}  // namespace

void Partition::validate(std::size_t mode_count) const {
  if (a.empty() || b.empty()) throw SplitError("both subsystems need at least one mode");
  for (std::size_t k : a) {
    if (k >= mode_count) throw SplitError("subsystem A names mode " + std::to_string(k) + " outside the space");
    if (std::find(b.begin(), b.end(), k) != b.end()) throw SplitError("subsystems overlap");
  }
  for (std::size_t k : b) {
    if (k >= mode_count) throw SplitError("subsystem B names mode " + std::to_string(k) + " outside the space");
  }
}

OperatorPolynomial InteractionDecomposition::interaction() const {
  OperatorPolynomial sum;
  for (const auto& t : terms) sum += multiply(t.fa, t.fb);
  return sum;
}

SplitResult split_hamiltonian(const OperatorPolynomial& h, const Partition& partition,
                              const InteractionDecomposition& decomposition, SplitKind kind,
                              const MeanFields& means) {
  check_means(decomposition, means, kind);
  SplitResult out;
  out.h_mft = local_part(h, partition, decomposition);
  for (std::size_t j = 0; j < decomposition.terms.size(); ++j) {
    const auto& t = decomposition.terms[j];
    const cplx ma = means.a[j];
    out.h_mft += ma * t.fb;
    OperatorPolynomial dfa = t.fa - OperatorPolynomial::identity(ma);
    if (kind == SplitKind::Asymmetric) {
      out.delta_h += multiply(dfa, t.fb);
    } else {
      const cplx mb = means.b[j];
      out.h_mft += mb * t.fa;
      out.delta_h += multiply(dfa, t.fb - OperatorPolynomial::identity(mb));
      out.constant_offset += ma * mb;
    }
  }
  return out;
}

// ------------------------------------------------------- HierarchyGenerator

HierarchyGenerator::HierarchyGenerator(const MfptSetup& setup)
    : kind_(setup.kind),
      mode_(setup.mean_field_mode),
      constant_(setup.constant_means),
      callback_(setup.mean_callback),
      scale_(setup.perturbation_scale) {
  const LindbladModel& model = setup.model;
  model.validate();
  setup.partition.validate(model.space.mode_count());
  if (setup.decomposition.terms.empty()) throw SplitError("decomposition has no interaction terms");
  for (const auto& j : model.jumps) {
    if (!supported_on(j.op, setup.partition.a) && !supported_on(j.op, setup.partition.b)) {
      throw SplitError("jump operator couples the two subsystems");
    }
  }
  if (mode_ == MeanFieldMode::Constant) check_means(setup.decomposition, constant_, kind_);
  if (mode_ == MeanFieldMode::Callback && !callback_) throw SplitError("callback mean-field mode needs a callback");
  if (!std::isfinite(scale_)) throw SplitError("perturbation scale must be finite");

  LindbladModel local = model;
  local.hamiltonian = local_part(model.hamiltonian, setup.partition, setup.decomposition);
  base_ = Liouvillian(local);
  full_ = Liouvillian(model);

  const ProductSpace& space = model.space;
  interaction_ = SparseMatrix(static_cast<Eigen::Index>(space.dimension()), static_cast<Eigen::Index>(space.dimension()));
  for (const auto& t : setup.decomposition.terms) {
    fa_.push_back(build_sparse(t.fa, space));
    fb_.push_back(build_sparse(t.fb, space));
    products_.push_back(build_sparse(multiply(t.fa, t.fb), space));
    interaction_ += products_.back();
  }
}

MeanFields HierarchyGenerator::means_of(const DenseMatrix& rho0) const {
  const DensityMatrix state(space(), rho0);
  MeanFields m;
  for (std::size_t j = 0; j < fa_.size(); ++j) {
    m.a.push_back(expectation(state, fa_[j]));
    m.b.push_back(expectation(state, fb_[j]));
  }
  return m;
}

MeanFields HierarchyGenerator::mean_fields(double t, const DenseMatrix& rho0) const {
  MeanFields m;
  switch (mode_) {
    case MeanFieldMode::Constant:
      m = constant_;
      break;
    case MeanFieldMode::SelfConsistent:
      return means_of(rho0);
    case MeanFieldMode::Callback:
      m = callback_(t);
      break;
  }
  if (m.a.size() != fa_.size() || (kind_ == SplitKind::Symmetric && m.b.size() != fa_.size())) {
    throw SplitError("mean-field source returned the wrong number of values");
  }
  return m;
}

SparseMatrix HierarchyGenerator::mean_field_hamiltonian(const MeanFields& m) const {
  SparseMatrix h(interaction_.rows(), interaction_.cols());
  for (std::size_t j = 0; j < fa_.size(); ++j) {
    h += m.a[j] * fb_[j];
    if (kind_ == SplitKind::Symmetric) h += m.b[j] * fa_[j];
  }
  return h;
}

SparseMatrix HierarchyGenerator::perturbation(const MeanFields& m) const {
  // Both splits give delta_H = sum_j F^A F^B - H_mean up to the c-number.
  return interaction_ - mean_field_hamiltonian(m);
}

Liouvillian HierarchyGenerator::mean_field_liouvillian(const MeanFields& m) const {
  Liouvillian l = base_;
  l.add_hamiltonian(mean_field_hamiltonian(m));
  return l;
}

namespace {

// Mean fields read from a Hermitian state make H_mean Hermitian up to rounding.
bool hermitian_to_rounding(const SparseMatrix& h) {
  return (h - SparseMatrix(h.adjoint())).norm() <= 1e-13 * (1.0 + h.norm());
}

bool exactly_hermitian(const DenseMatrix& stacked, Eigen::Index d) {
  for (Eigen::Index i = 0; i < stacked.cols(); i += d) {
    const auto block = stacked.middleCols(i, d);
    if ((block - block.adjoint()).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

}  // namespace

void HierarchyGenerator::rhs(double t, const DenseMatrix& stacked, DenseMatrix& out) const {
  const Eigen::Index d = static_cast<Eigen::Index>(space().dimension());
  const Eigen::Index n = stacked.cols() / d;
  if (out.rows() != stacked.rows() || out.cols() != stacked.cols()) out.resize(stacked.rows(), stacked.cols());

  thread_local DenseMatrix block, prev, acc;
  block = stacked.leftCols(d);
  const MeanFields m = mean_fields(t, block);
  const SparseMatrix h_mean = mean_field_hamiltonian(m);
  const SparseMatrix delta = perturbation(m);

  // For Hermitian blocks and Hamiltonians every term is X + X^dag, which
  // replaces each right multiplication by an adjoint and keeps the blocks
  // exactly Hermitian.
  const bool hermitian =
      hermitian_to_rounding(h_mean) && hermitian_to_rounding(delta) && exactly_hermitian(stacked, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) {
      prev.swap(block);
      block = stacked.middleCols(i * d, d);
    }
    if (hermitian) {
      base_.hermitian_half(t, block, acc);
      acc.noalias() += (-kI) * (h_mean * block);
      if (i > 0) acc.noalias() += (-kI * scale_) * (delta * prev);
      out.middleCols(i * d, d) = acc + acc.adjoint();
    } else {
      base_.apply(t, block, acc);
      add_commutator(h_mean, block, -kI, acc);
      if (i > 0) add_commutator(delta, prev, -kI * scale_, acc);
      out.middleCols(i * d, d) = acc;
    }
  }
}

// --------------------------------------------------------------- evolution

HierarchyTrajectory evolve_hierarchy(const MfptSetup& setup, const DensityMatrix& rho0, std::size_t order,
                                     const EvolverConfig& cfg, const std::vector<double>& sample_times) {
  const HierarchyGenerator gen(setup);
  const ProductSpace& space = gen.space();
  if (!(rho0.space() == space)) throw ModelError("initial state and model live on different spaces");
  const Eigen::Index d = static_cast<Eigen::Index>(space.dimension());

  DenseMatrix y0 = DenseMatrix::Zero(d, d * static_cast<Eigen::Index>(order + 1));
  y0.leftCols(d) = rho0.matrix();

  HierarchyTrajectory traj;
  traj.order = order;
  traj.max_trace_drift.assign(order + 1, 0.0);
  traj.max_top_population.assign(space.mode_count(), 0.0);
  const cplx tr0 = rho0.trace();

  auto rhs = [&](double t, const DenseMatrix& y, DenseMatrix& dy) { gen.rhs(t, y, dy); };
  auto observe = [&](double t, const DenseMatrix& y) {
    auto orders = unstack(space, y);
    for (std::size_t i = 0; i <= order; ++i) {
      const cplx expected = i == 0 ? tr0 : cplx(0.0);
      traj.max_trace_drift[i] = std::max(traj.max_trace_drift[i], std::abs(orders[i].trace() - expected));
    }
    for (std::size_t k = 0; k < space.mode_count(); ++k) {
      traj.max_top_population[k] = std::max(traj.max_top_population[k], orders[0].top_level_population(k));
    }
    traj.times.push_back(t);
    traj.mean_fields.push_back(gen.mean_fields(t, orders[0].matrix()));
    traj.states.push_back(std::move(orders));
  };
  traj.stats = integrate(rhs, std::move(y0), 0.0, sample_times, cfg, observe);

  for (std::size_t i = 0; i <= order; ++i) {
    if (traj.max_trace_drift[i] > kHierarchyTraceTolerance) {
      throw IntegrationError("order " + std::to_string(i) + " trace drift " + format_number(traj.max_trace_drift[i]),
                             traj.times.empty() ? 0.0 : traj.times.back());
    }
  }
  for (std::size_t k = 0; k < space.mode_count(); ++k) {
    if (traj.max_top_population[k] > kTruncationWarningLevel) {
      traj.warnings.push_back("mode '" + space.mode_name(k) + "' top-level population " +
                              format_number(traj.max_top_population[k]) + " exceeds " +
                              format_number(kTruncationWarningLevel));
    }
  }
  return traj;
}

std::vector<DensityMatrix> steady_hierarchy(const MfptSetup& setup, std::size_t order) {
  if (setup.mean_field_mode != MeanFieldMode::Constant) {
    throw SplitError("steady hierarchy needs constant mean fields");
  }
  const HierarchyGenerator gen(setup);
  const MeanFields& m = setup.constant_means;
  const StationarySolver solver(gen.mean_field_liouvillian(m));
  const SparseMatrix delta = setup.perturbation_scale * gen.perturbation(m);

  std::vector<DensityMatrix> out{solver.steady_state()};
  const Eigen::Index d = static_cast<Eigen::Index>(gen.space().dimension());
  for (std::size_t i = 1; i <= order; ++i) {
    DenseMatrix source = DenseMatrix::Zero(d, d);
    add_commutator(delta, out.back().matrix(), -kI, source);
    out.emplace_back(gen.space(), solver.solve(source, 0.0));
  }
  return out;
}

DensityMatrix resum(const std::vector<DensityMatrix>& orders, std::size_t upto) {
  if (orders.empty()) throw SplitError("resum needs at least one order");
  const std::size_t last = std::min(upto, orders.size() - 1);
  DensityMatrix sum = orders[0];
  for (std::size_t i = 1; i <= last; ++i) sum += orders[i];
  return sum;
}

DensityMatrix reduced_order(const std::vector<DensityMatrix>& orders, const std::vector<std::size_t>& keep,
                            std::size_t i) {
  if (i >= orders.size()) {
    throw SplitError("order " + std::to_string(i) + " not available (have " + std::to_string(orders.size()) + ")");
  }
  return partial_trace(orders[i], keep);
}

double resummation_defect(const HierarchyGenerator& gen, double t, const std::vector<DensityMatrix>& orders,
                          std::size_t n) {
  if (n >= orders.size()) throw SplitError("resummation order exceeds the hierarchy");
  const Eigen::Index d = static_cast<Eigen::Index>(gen.space().dimension());
  DenseMatrix stacked(d, d * static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i <= n; ++i) stacked.middleCols(static_cast<Eigen::Index>(i) * d, d) = orders[i].matrix();
  DenseMatrix rates;
  gen.rhs(t, stacked, rates);
  DenseMatrix drho = DenseMatrix::Zero(d, d);
  for (std::size_t i = 0; i <= n; ++i) drho += rates.middleCols(static_cast<Eigen::Index>(i) * d, d);
  const DenseMatrix rho = resum(orders, n).matrix();
  return (drho - gen.full_liouvillian().apply(t, rho)).norm();
}

void write_hierarchy_csv(std::ostream& os, const HierarchyTrajectory& traj,
                         const std::vector<NamedObservable>& observables) {
  std::vector<std::string> columns{"t", "order"};
  for (const auto& o : observables) {
    columns.push_back(o.name + ".re");
    columns.push_back(o.name + ".im");
  }
  CsvWriter csv(os, columns);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t i = 0; i < traj.states[k].size(); ++i) {
      std::vector<double> row{traj.times[k], static_cast<double>(i)};
      for (const auto& o : observables) {
        const cplx v = expectation(traj.states[k][i], o.op);
        row.push_back(v.real());
        row.push_back(v.imag());
      }
      csv.row(row);
    }
  }
}

}  // namespace mfpt
