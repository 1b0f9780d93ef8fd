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

#include "mfpt/moments.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mfpt/csv.hpp"

namespace mfpt {

namespace {

constexpr cplx kI{0.0, 1.0};

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n; ++k) names.push_back("m" + std::to_string(k));
  return names;
}

std::map<Monomial, Eigen::Index> index_of(const std::vector<Monomial>& basis) {
  std::map<Monomial, Eigen::Index> idx;
  for (std::size_t i = 0; i < basis.size(); ++i) idx.emplace(basis[i], static_cast<Eigen::Index>(i));
  return idx;
}

}  // namespace

ClosureReport closure_check(const OperatorPolynomial& h_mft, const std::vector<JumpTerm>& jumps,
                            const std::vector<std::string>& mode_names) {
  const auto names = [&](std::size_t span) { return mode_names.empty() ? default_names(span) : mode_names; };
  for (const auto& [m, c] : h_mft.terms()) {
    if (m.degree() > 2) {
      return {false, "hamiltonian term " + to_string(OperatorPolynomial(m, c), names(m.mode_span())) +
                         " has degree " + std::to_string(m.degree())};
    }
  }
  for (const auto& j : jumps) {
    for (const auto& [m, c] : j.op.terms()) {
      if (m.degree() != 1) {
        return {false, "jump operator " + to_string(j.op, names(j.op.mode_span())) + " is not linear"};
      }
    }
  }
  return {};
}

// ------------------------------------------------------------ SteadyMoments

cplx SteadyMoments::value(std::size_t j, const Monomial& m) const {
  if (j >= values.size()) throw MomentError("order " + std::to_string(j) + " not solved");
  if (m.is_identity()) return j == 0 ? 1.0 : 0.0;
  const auto& b = basis[j];
  const auto it = std::find(b.begin(), b.end(), m);
  if (it == b.end()) throw MomentError("moment not tracked at order " + std::to_string(j));
  return values[j][it - b.begin()];
}

cplx SteadyMoments::value(std::size_t j, const OperatorPolynomial& p) const {
  cplx sum = 0.0;
  for (const auto& [m, c] : p.terms()) sum += c * value(j, m);
  return sum;
}

// ---------------------------------------------------------- MomentHierarchy

OperatorPolynomial MomentHierarchy::adjoint_generator(const OperatorPolynomial& r) const {
  OperatorPolynomial out = kI * commutator(model_.h_mft, r);
  for (const auto& j : model_.jumps) {
    const double w = dissipator_weight(j.rate, model_.convention);
    if (w == 0.0) continue;
    const OperatorPolynomial dd = adjoint(j.op);
    const OperatorPolynomial n = dd * j.op;
    OperatorPolynomial term = 2.0 * (dd * r * j.op);
    term -= n * r;
    term -= r * n;
    out += w * term;
  }
  return out;
}

OperatorPolynomial MomentHierarchy::feed_term(const OperatorPolynomial& r) const {
  return kI * commutator(model_.delta_h, r);
}

std::vector<Monomial> MomentHierarchy::close_basis(std::vector<Monomial> seeds) const {
  std::set<Monomial> seen;
  std::vector<Monomial> queue;
  const auto push = [&](const Monomial& m) {
    if (m.is_identity()) return;
    if (m.degree() > opts_.max_degree) {
      throw MomentError("moment basis exceeds degree cap " + std::to_string(opts_.max_degree));
    }
    if (seen.insert(m).second) queue.push_back(m);
  };
  for (const auto& s : seeds) {
    push(s);
    push(s.adjoint());
  }
  while (!queue.empty()) {
    const Monomial m = queue.back();
    queue.pop_back();
    const OperatorPolynomial image = adjoint_generator(OperatorPolynomial(m, 1.0));
    for (const auto& [t, c] : image.terms()) {
      push(t);
      push(t.adjoint());
    }
  }
  return {seen.begin(), seen.end()};
}

MomentHierarchy::MomentHierarchy(MomentModel model, const std::vector<Monomial>& targets, std::size_t order,
                                 MomentOptions opts)
    : model_(std::move(model)), opts_(opts) {
  const ClosureReport report = closure_check(model_.h_mft, model_.jumps);
  if (!report.ok) throw MomentError("moment equations do not close: " + report.violation);
  for (const auto& j : model_.jumps) {
    if (!std::isfinite(j.rate) || j.rate < 0.0) throw MomentError("jump rate must be finite and non-negative");
  }
  if (targets.empty()) throw MomentError("no target moments");

  std::vector<std::vector<Monomial>> bases(order + 1);
  bases[order] = close_basis(targets);
  for (std::size_t j = order; j-- > 0;) {
    std::vector<Monomial> seeds = targets;
    for (const auto& m : bases[j + 1]) {
      const OperatorPolynomial fed = feed_term(OperatorPolynomial(m, 1.0));
      for (const auto& [t, c] : fed.terms()) seeds.push_back(t);
    }
    bases[j] = close_basis(std::move(seeds));
  }

  systems_.resize(order + 1);
  for (std::size_t j = 0; j <= order; ++j) {
    MomentSystem& s = systems_[j];
    s.order = j;
    s.basis = bases[j];
    const auto n = static_cast<Eigen::Index>(s.basis.size());
    const auto idx = index_of(s.basis);
    s.a = Eigen::MatrixXcd::Zero(n, n);
    s.constant = DenseVector::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const OperatorPolynomial image = adjoint_generator(OperatorPolynomial(s.basis[r], 1.0));
      for (const auto& [t, c] : image.terms()) {
        if (t.is_identity()) {
          s.constant[r] += c;
        } else {
          s.a(r, idx.at(t)) += c;
        }
      }
    }
    if (j == 0) continue;
    const auto lower = index_of(bases[j - 1]);
    s.feed = Eigen::MatrixXcd::Zero(n, static_cast<Eigen::Index>(bases[j - 1].size()));
    s.feed_constant = DenseVector::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const OperatorPolynomial fed = feed_term(OperatorPolynomial(s.basis[r], 1.0));
      for (const auto& [t, c] : fed.terms()) {
        if (t.is_identity()) {
          s.feed_constant[r] += c;
        } else {
          s.feed(r, lower.at(t)) += c;
        }
      }
    }
  }
}

SteadyMoments MomentHierarchy::solve_steady() const {
  SteadyMoments out;
  for (const auto& s : systems_) {
    DenseVector b = s.order == 0 ? DenseVector(s.constant) : DenseVector::Zero(s.constant.size());
    if (s.order > 0) {
      b += s.feed * out.values.back();
      if (s.order == 1) b += s.feed_constant;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv.size() == 0 ? 1.0 : (sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                                                         : std::numeric_limits<double>::infinity());
    if (!(cond <= opts_.max_condition)) {
      throw MomentError("order-" + std::to_string(s.order) + " moment system is ill-conditioned (cond " +
                        format_number(cond) + ")");
    }
    DenseVector m = svd.solve(-b);
    const double scale = std::max(1.0, b.norm());
    double res = (s.a * m + b).norm();
    if (res > opts_.residual_tolerance * scale) {
      m += svd.solve(-(s.a * m + b));
      res = (s.a * m + b).norm();
    }
    if (res > opts_.residual_tolerance * scale) {
      throw MomentError("order-" + std::to_string(s.order) + " steady residual " + format_number(res));
    }
    out.basis.push_back(s.basis);
    out.values.push_back(std::move(m));
    out.condition.push_back(cond);
    out.residual.push_back(res);
  }
  return out;
}

MomentTrajectory MomentHierarchy::evolve(const DenseVector& initial, const EvolverConfig& cfg,
                                         const std::vector<double>& sample_times) const {
  if (initial.size() != static_cast<Eigen::Index>(systems_[0].basis.size())) {
    throw MomentError("initial moments do not match the order-0 basis");
  }
  std::vector<Eigen::Index> offset{0};
  for (const auto& s : systems_) offset.push_back(offset.back() + static_cast<Eigen::Index>(s.basis.size()));
  DenseVector y0 = DenseVector::Zero(offset.back());
  y0.head(initial.size()) = initial;

  auto rhs = [&](double, const DenseVector& y, DenseVector& dy) {
    dy.resize(y.size());
    for (std::size_t j = 0; j < systems_.size(); ++j) {
      const auto& s = systems_[j];
      const Eigen::Index n = offset[j + 1] - offset[j];
      auto out = dy.segment(offset[j], n);
      out.noalias() = s.a * y.segment(offset[j], n);
      if (j == 0) out += s.constant;
      if (j > 0) out.noalias() += s.feed * y.segment(offset[j - 1], offset[j] - offset[j - 1]);
      if (j == 1) out += s.feed_constant;
    }
  };
  MomentTrajectory traj;
  auto observe = [&](double t, const DenseVector& y) {
    std::vector<DenseVector> per_order;
    for (std::size_t j = 0; j < systems_.size(); ++j) per_order.push_back(y.segment(offset[j], offset[j + 1] - offset[j]));
    traj.times.push_back(t);
    traj.values.push_back(std::move(per_order));
  };
  traj.stats = integrate(rhs, std::move(y0), 0.0, sample_times, cfg, observe);
  return traj;
}

DenseVector moments_of(const DensityMatrix& rho, const std::vector<Monomial>& basis) {
  DenseVector out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = expectation(rho, build_sparse(OperatorPolynomial(basis[i], 1.0), rho.space()));
  }
  return out;
}

std::optional<double> indicator(const SteadyMoments& moments, const Monomial& r, std::size_t n) {
  if (n == 0 || n > moments.order()) throw MomentError("indicator order must be in [1, solved order]");
  cplx den = 0.0;
  for (std::size_t j = 0; j < n; ++j) den += moments.value(j, r);
  const cplx num = moments.value(n, r);
  if (std::abs(den) < 1e-14) return std::nullopt;
  return std::abs(num / den);
}

SelfConsistentMeans self_consistent_means(const OperatorPolynomial& h, const std::vector<JumpTerm>& jumps,
                                          DissipatorConvention convention, const Partition& partition,
                                          const InteractionDecomposition& decomposition, SplitKind kind,
                                          MeanFields guess, const SelfConsistentOptions& opts) {
  const std::size_t terms = decomposition.terms.size();
  if (kind == SplitKind::Asymmetric && guess.b.size() != terms) guess.b.assign(terms, 0.0);
  if (!(opts.mixing > 0.0 && opts.mixing <= 1.0)) throw MomentError("mixing must lie in (0, 1]");

  std::vector<Monomial> targets;
  for (const auto& t : decomposition.terms) {
    for (const auto& [m, c] : t.fa.terms()) targets.push_back(m);
    if (kind == SplitKind::Symmetric) {
      for (const auto& [m, c] : t.fb.terms()) targets.push_back(m);
    }
  }

  SelfConsistentMeans out;
  out.means = std::move(guess);
  for (out.iterations = 1; out.iterations <= opts.max_iterations; ++out.iterations) {
    const SplitResult split = split_hamiltonian(h, partition, decomposition, kind, out.means);
    const MomentHierarchy mh(MomentModel{split.h_mft, {}, jumps, convention}, targets, 0, opts.moments);
    const SteadyMoments sm = mh.solve_steady();
    out.change = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < terms; ++j) {
      const cplx na = sm.value(0, decomposition.terms[j].fa);
      out.change = std::max(out.change, std::abs(na - out.means.a[j]));
      scale = std::max(scale, std::abs(na));
      out.means.a[j] += opts.mixing * (na - out.means.a[j]);
      if (kind == SplitKind::Symmetric) {
        const cplx nb = sm.value(0, decomposition.terms[j].fb);
        out.change = std::max(out.change, std::abs(nb - out.means.b[j]));
        scale = std::max(scale, std::abs(nb));
        out.means.b[j] += opts.mixing * (nb - out.means.b[j]);
      }
    }
    if (out.change <= opts.tolerance * scale) return out;
  }
  throw MomentError("self-consistent mean fields did not converge after " + std::to_string(opts.max_iterations) +
                    " iterations");
}

}  // namespace mfpt
