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

#include "mfpt/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <ostream>

#include "mfpt/csv.hpp"

namespace mfpt {

namespace {

constexpr cplx kI{0.0, 1.0};

SparseMatrix sparse_identity(std::size_t d) {
  SparseMatrix id(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  id.setIdentity();
  return id;
}

// Column-stacked Kronecker product a (x) b.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  const Eigen::Index br = b.rows(), bc = b.cols();
  for (Eigen::Index ka = 0; ka < a.outerSize(); ++ka) {
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia) {
      for (Eigen::Index kb = 0; kb < b.outerSize(); ++kb) {
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib) {
          triplets.emplace_back(ia.row() * br + ib.row(), ia.col() * bc + ib.col(), ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix out(a.rows() * br, a.cols() * bc);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Eigen::Map<const DenseVector> as_vector(const DenseMatrix& m) { return {m.data(), m.size()}; }

}  // namespace

// ------------------------------------------------------------------ model

void LindbladModel::validate() const {
  if (space.mode_count() == 0) throw ModelError("model has an empty space");
  const std::size_t modes = space.mode_count();
  if (hamiltonian.mode_span() > modes) throw ModelError("hamiltonian references a mode outside the space");
  double scale = 1.0;
  for (const auto& [m, c] : hamiltonian.terms()) scale = std::max(scale, std::abs(c));
  if (hermiticity_defect(hamiltonian) > 1e-12 * scale) throw ModelError("hamiltonian is not Hermitian");
  for (const auto& d : driven) {
    if (d.op.mode_span() > modes) throw ModelError("driven term references a mode outside the space");
    if (!d.coefficient) throw ModelError("driven term has no coefficient function");
  }
  for (const auto& j : jumps) {
    if (j.op.mode_span() > modes) throw ModelError("jump operator references a mode outside the space");
    if (!std::isfinite(j.rate) || j.rate < 0.0) throw ModelError("jump rate must be finite and non-negative");
  }
}

LindbladModel displace_mode(const LindbladModel& model, std::size_t mode, cplx shift) {
  if (mode >= model.space.mode_count()) throw ModelError("displaced mode outside the space");
  const auto strip = [](OperatorPolynomial p) {
    p -= OperatorPolynomial::identity(p.constant());
    return p;
  };
  LindbladModel out = model;
  out.hamiltonian = strip(displace(model.hamiltonian, mode, shift));
  for (auto& d : out.driven) d.op = strip(displace(d.op, mode, shift));
  for (auto& j : out.jumps) {
    const OperatorPolynomial shifted = displace(j.op, mode, shift);
    const cplx c = shifted.constant();
    j.op = strip(shifted);
    const double w = dissipator_weight(j.rate, model.convention);
    out.hamiltonian += kI * w * (std::conj(c) * j.op - c * adjoint(j.op));
  }
  return out;
}

// ------------------------------------------------------------- Liouvillian

Liouvillian::Liouvillian(ProductSpace space) : space_(std::move(space)) {
  const auto d = static_cast<Eigen::Index>(space_.dimension());
  hamiltonian_ = SparseMatrix(d, d);
  rebuild_generator();
}

Liouvillian::Liouvillian(const LindbladModel& model) : Liouvillian(model.space) {
  model.validate();
  hamiltonian_ = build_sparse(model.hamiltonian, space_);
  for (const auto& d : model.driven) driven_.push_back({build_sparse(d.op, space_), {}, d.coefficient});
  for (auto& d : driven_) d.op_adj = d.op.adjoint();
  for (const auto& j : model.jumps) {
    const double w = dissipator_weight(j.rate, model.convention);
    if (w == 0.0) continue;
    dissipators_.push_back(make_dissipator(build_sparse(j.op, space_), w));
  }
  rebuild_generator();
}

void Liouvillian::add_hamiltonian(const SparseMatrix& h) {
  hamiltonian_ += h;
  rebuild_generator();
}

void Liouvillian::add_dissipator(const SparseMatrix& op, double weight) {
  if (!std::isfinite(weight) || weight < 0.0) throw ModelError("dissipator weight must be non-negative");
  dissipators_.push_back(make_dissipator(op, weight));
  rebuild_generator();
}

void Liouvillian::add_driven(const SparseMatrix& op, std::function<cplx(double)> coefficient) {
  driven_.push_back({op, op.adjoint(), std::move(coefficient)});
}

Liouvillian::Dissipator Liouvillian::make_dissipator(const SparseMatrix& op, double weight) {
  Dissipator d{op, op.adjoint(), weight, {}, {}};
  const Eigen::SparseMatrix<cplx, Eigen::RowMajor> rows(op);
  d.row_col.assign(static_cast<std::size_t>(rows.rows()), -1);
  d.row_val.assign(static_cast<std::size_t>(rows.rows()), 0.0);
  for (Eigen::Index i = 0; i < rows.outerSize(); ++i) {
    std::size_t count = 0;
    for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      if (++count > 1) {
        d.row_col.clear();
        d.row_val.clear();
        return d;
      }
      d.row_col[static_cast<std::size_t>(i)] = it.col();
      d.row_val[static_cast<std::size_t>(i)] = it.value();
    }
  }
  return d;
}

void Liouvillian::add_jump(const Dissipator& d, const DenseMatrix& rho, double scale, DenseMatrix& out) {
  if (d.row_col.empty()) {
    // d rho d^dag = (d (d rho)^dag)^dag keeps the sparse factor on the left.
    const DenseMatrix left = d.op * rho;
    const DenseMatrix right = d.op * left.adjoint();
    out.noalias() += scale * right.adjoint();
    return;
  }
  // (d rho d^dag)_ij = v_i conj(v_j) rho(c_i, c_j)
  const auto n = static_cast<Eigen::Index>(d.row_col.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index cj = d.row_col[static_cast<std::size_t>(j)];
    if (cj < 0) continue;
    const cplx vj = scale * std::conj(d.row_val[static_cast<std::size_t>(j)]);
    const cplx* src = rho.col(cj).data();
    cplx* dst = out.col(j).data();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index ci = d.row_col[static_cast<std::size_t>(i)];
      if (ci >= 0) dst[i] += d.row_val[static_cast<std::size_t>(i)] * vj * src[ci];
    }
  }
}

void Liouvillian::rebuild_generator() {
  generator_ = -kI * hamiltonian_;
  for (const auto& d : dissipators_) generator_ -= d.weight * SparseMatrix(d.op_adj * d.op);
  generator_.prune(cplx(0.0));
  generator_adj_ = generator_.adjoint();
}

SparseMatrix Liouvillian::hamiltonian_at(double t) const {
  SparseMatrix h = hamiltonian_;
  for (const auto& d : driven_) {
    const cplx c = d.coefficient(t);
    h += c * d.op + std::conj(c) * d.op_adj;
  }
  return h;
}

namespace {

// Dense x sparse products are several times slower in Eigen than sparse x
// dense, so right multiplications are taken as adjoints: X S = (S^dag X^dag)^dag.
struct ApplyScratch {
  DenseMatrix adj, tmp;
};

ApplyScratch& apply_scratch() {
  thread_local ApplyScratch s;
  return s;
}

// out += factor (h rho - rho h), given h^dag and rho^dag.
void add_commutator_with(const SparseMatrix& h, const SparseMatrix& h_adj, const DenseMatrix& rho,
                         const DenseMatrix& rho_adj, cplx factor, DenseMatrix& out, DenseMatrix& tmp) {
  out.noalias() += factor * (h * rho);
  tmp.noalias() = h_adj * rho_adj;
  out.noalias() -= factor * tmp.adjoint();
}

}  // namespace

void Liouvillian::apply(double t, const DenseMatrix& rho, DenseMatrix& out) const {
  ApplyScratch& s = apply_scratch();
  s.adj = rho.adjoint();
  out.noalias() = generator_ * rho;
  s.tmp.noalias() = generator_ * s.adj;
  out.noalias() += s.tmp.adjoint();
  for (const auto& d : dissipators_) add_jump(d, rho, 2.0 * d.weight, out);
  for (const auto& d : driven_) {
    const cplx c = d.coefficient(t);
    add_commutator_with(d.op, d.op_adj, rho, s.adj, -kI * c, out, s.tmp);
    add_commutator_with(d.op_adj, d.op, rho, s.adj, -kI * std::conj(c), out, s.tmp);
  }
}

void Liouvillian::hermitian_half(double t, const DenseMatrix& rho, DenseMatrix& x) const {
  x.noalias() = generator_ * rho;
  for (const auto& d : driven_) {
    const cplx c = d.coefficient(t);
    x.noalias() += (-kI * c) * (d.op * rho);
    x.noalias() += (-kI * std::conj(c)) * (d.op_adj * rho);
  }
  // Each jump term is Hermitian, so it enters X with half its weight.
  for (const auto& d : dissipators_) add_jump(d, rho, d.weight, x);
}

void Liouvillian::apply_hermitian(double t, const DenseMatrix& rho, DenseMatrix& out) const {
  ApplyScratch& s = apply_scratch();
  hermitian_half(t, rho, s.tmp);
  out.noalias() = s.tmp + s.tmp.adjoint();
}

DenseMatrix Liouvillian::apply(double t, const DenseMatrix& rho) const {
  DenseMatrix out(rho.rows(), rho.cols());
  apply(t, rho, out);
  return out;
}

SparseMatrix Liouvillian::vectorized() const {
  if (time_dependent()) throw ModelError("vectorized generator needs a time-independent model");
  const SparseMatrix id = sparse_identity(space_.dimension());
  // vec(A X B) = (B^T (x) A) vec(X) for column stacking.
  SparseMatrix l = kron(id, generator_);
  l += kron(SparseMatrix(generator_.conjugate()), id);
  for (const auto& d : dissipators_) l += (2.0 * d.weight) * kron(SparseMatrix(d.op.conjugate()), d.op);
  l.prune(cplx(0.0));
  return l;
}

void add_commutator(const SparseMatrix& h, const DenseMatrix& rho, cplx factor, DenseMatrix& out) {
  if (factor == cplx(0.0)) return;
  thread_local DenseMatrix rho_adj, tmp;
  rho_adj = rho.adjoint();
  add_commutator_with(h, SparseMatrix(h.adjoint()), rho, rho_adj, factor, out, tmp);
}

DensityMatrix apply_liouvillian(const LindbladModel& model, const DensityMatrix& rho, double t) {
  Liouvillian l(model);
  if (!(rho.space() == model.space)) throw ModelError("state and model live on different spaces");
  return {model.space, l.apply(t, rho.matrix())};
}

// --------------------------------------------------------------- evolution

Trajectory evolve(const Liouvillian& L, const DensityMatrix& rho0, const EvolverConfig& cfg,
                  const std::vector<double>& sample_times) {
  if (!(rho0.space() == L.space())) throw ModelError("initial state and generator live on different spaces");
  const ProductSpace& space = L.space();
  Trajectory traj;
  traj.max_top_population.assign(space.mode_count(), 0.0);
  const cplx tr0 = rho0.trace();

  // L preserves Hermiticity, so a Hermitian start stays Hermitian.
  const bool hermitian = rho0.hermiticity_error() == 0.0;
  auto rhs = [&](double t, const DenseMatrix& y, DenseMatrix& dy) {
    if (dy.rows() != y.rows() || dy.cols() != y.cols()) dy.resize(y.rows(), y.cols());
    if (hermitian) {
      L.apply_hermitian(t, y, dy);
    } else {
      L.apply(t, y, dy);
    }
  };
  auto observe = [&](double t, const DenseMatrix& y) {
    DensityMatrix state(space, y);
    traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(state.trace() - tr0));
    for (std::size_t k = 0; k < space.mode_count(); ++k) {
      traj.max_top_population[k] = std::max(traj.max_top_population[k], state.top_level_population(k));
    }
    traj.times.push_back(t);
    traj.states.push_back(std::move(state));
  };
  traj.stats = integrate(rhs, DenseMatrix(rho0.matrix()), 0.0, sample_times, cfg, observe);

  for (std::size_t k = 0; k < space.mode_count(); ++k) {
    if (traj.max_top_population[k] > kTruncationWarningLevel) {
      traj.warnings.push_back("mode '" + space.mode_name(k) + "' top-level population " +
                              format_number(traj.max_top_population[k]) + " exceeds " +
                              format_number(kTruncationWarningLevel));
    }
  }
  return traj;
}

Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0, const EvolverConfig& cfg,
                  const std::vector<double>& sample_times) {
  return evolve(Liouvillian(model), rho0, cfg, sample_times);
}

std::vector<double> uniform_times(double t_max, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {0.0};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = t_max * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = t_max;
  return out;
}

// ------------------------------------------------------------ steady state

struct StationarySolver::Impl {
  using Solver = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

  Liouvillian l;
  StationaryOptions opts;
  std::size_t dim = 0;
  bool direct = true;

  // Direct backend.
  SparseMatrix full;
  SparseMatrix replaced;
  Solver lu;

  // Iterative backend: K = U T U^dag.
  DenseMatrix schur_u;
  DenseMatrix schur_t;
  double shift = 0.0;
  double generator_norm = 1.0;

  // Copy of `m` with row `row` replaced by the trace functional.
  static SparseMatrix with_trace_row(const SparseMatrix& m, std::size_t d, Eigen::Index row) {
    std::vector<Eigen::Triplet<cplx>> triplets;
    triplets.reserve(static_cast<std::size_t>(m.nonZeros()) + d);
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        if (it.row() != row) triplets.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (std::size_t i = 0; i < d; ++i) triplets.emplace_back(row, static_cast<Eigen::Index>(i * (d + 1)), 1.0);
    SparseMatrix out(m.rows(), m.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
  }

  static void factorize(Solver& solver, const SparseMatrix& m) {
    solver.analyzePattern(m);
    solver.factorize(m);
    if (solver.info() != Eigen::Success) {
      throw SteadyStateError("stationary factorization failed: " + solver.lastErrorMessage());
    }
  }

  // One solve plus one step of iterative refinement.
  static DenseVector solve_refined(const Solver& solver, const SparseMatrix& m, const DenseVector& b) {
    DenseVector x = solver.solve(b);
    const DenseVector r = b - m * x;
    x += solver.solve(r);
    return x;
  }

  // X with (K - s/2) X + X (K - s/2)^dag = c, by back substitution on the Schur form.
  DenseMatrix sylvester(const DenseMatrix& c) const {
    const Eigen::Index n = schur_t.rows();
    const DenseMatrix ct = schur_u.adjoint() * c * schur_u;
    DenseMatrix y(n, n);
    for (Eigen::Index j = n; j-- > 0;) {
      DenseVector col = ct.col(j);
      const Eigen::Index m = n - j - 1;
      if (m > 0) col.noalias() -= y.rightCols(m) * schur_t.row(j).tail(m).adjoint();
      const cplx sj = std::conj(schur_t(j, j)) - shift;
      for (Eigen::Index i = n; i-- > 0;) {
        col[i] /= schur_t(i, i) + sj;
        if (i > 0) col.head(i) -= schur_t.col(i).head(i) * col[i];
      }
      y.col(j) = col;
    }
    return schur_u * y * schur_u.adjoint();
  }

  // A x = L x + Tr(x) I/D is invertible exactly when L has a one-dimensional
  // kernel, since the range of L is traceless.
  DenseMatrix bordered(const DenseMatrix& x) const {
    DenseMatrix out = l.apply(0.0, x);
    out.diagonal().array() += x.trace() / static_cast<double>(dim);
    return out;
  }

  DenseMatrix preconditioned(const DenseMatrix& x) const { return sylvester(bordered(x)); }

  // Restarted GMRES for preconditioned(x) = b.
  DenseMatrix gmres(const DenseMatrix& b, DenseMatrix x) const {
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;
    const std::size_t m = std::max<std::size_t>(opts.restart, 2);
    std::size_t iterations = 0;
    while (iterations < opts.max_iterations) {
      DenseMatrix r = b - preconditioned(x);
      double beta = r.norm();
      if (beta <= opts.tolerance * bnorm) return x;
      std::vector<DenseMatrix> v{r / beta};
      Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m));
      std::vector<double> cs(m);
      std::vector<cplx> sn(m);
      DenseVector g = DenseVector::Zero(static_cast<Eigen::Index>(m + 1));
      g[0] = beta;
      std::size_t k = 0;
      for (; k < m && iterations < opts.max_iterations; ++k, ++iterations) {
        DenseMatrix w = preconditioned(v[k]);
        const auto kk = static_cast<Eigen::Index>(k);
        for (std::size_t i = 0; i <= k; ++i) {
          const cplx hij = as_vector(v[i]).dot(as_vector(w));
          h(static_cast<Eigen::Index>(i), kk) = hij;
          w -= hij * v[i];
        }
        const double wn = w.norm();
        h(kk + 1, kk) = wn;
        for (std::size_t i = 0; i < k; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          const cplx t = cs[i] * h(ii, kk) + sn[i] * h(ii + 1, kk);
          h(ii + 1, kk) = -std::conj(sn[i]) * h(ii, kk) + cs[i] * h(ii + 1, kk);
          h(ii, kk) = t;
        }
        const cplx a = h(kk, kk), bb = h(kk + 1, kk);
        const double nu = std::hypot(std::abs(a), std::abs(bb));
        if (std::abs(a) == 0.0) {
          cs[k] = 0.0;
          sn[k] = std::abs(bb) > 0.0 ? std::conj(bb) / std::abs(bb) : cplx(1.0);
        } else {
          cs[k] = std::abs(a) / nu;
          sn[k] = (a / std::abs(a)) * std::conj(bb) / nu;
        }
        h(kk, kk) = cs[k] * a + sn[k] * bb;
        h(kk + 1, kk) = 0.0;
        g[kk + 1] = -std::conj(sn[k]) * g[kk];
        g[kk] = cs[k] * g[kk];
        const bool done = std::abs(g[kk + 1]) <= opts.tolerance * bnorm;
        if (wn > 0.0 && !done) v.push_back(w / wn);
        if (done || wn == 0.0) {
          ++k;
          ++iterations;
          break;
        }
      }
      // Back substitution on the k x k triangle.
      DenseVector y = g.head(static_cast<Eigen::Index>(k));
      for (Eigen::Index i = static_cast<Eigen::Index>(k); i-- > 0;) {
        for (Eigen::Index j = i + 1; j < static_cast<Eigen::Index>(k); ++j) y[i] -= h(i, j) * y[j];
        y[i] /= h(i, i);
      }
      for (std::size_t i = 0; i < k; ++i) x += y[static_cast<Eigen::Index>(i)] * v[i];
    }
    const double res = (b - preconditioned(x)).norm() / bnorm;
    if (res > opts.tolerance) {
      throw SteadyStateError("GMRES did not converge (relative residual " + format_number(res) + ")");
    }
    return x;
  }

  // Refines y until A y = rhs holds to working accuracy.
  DenseMatrix solve_iterative(const DenseMatrix& rhs, DenseMatrix y) const {
    for (int round = 0; round < 4; ++round) {
      const DenseMatrix r = rhs - bordered(y);
      if (r.norm() <= 1e-11 * generator_norm * std::max(1.0, y.norm())) return y;
      y += gmres(sylvester(r), DenseMatrix::Zero(y.rows(), y.cols()));
    }
    return y;
  }

  DenseMatrix kernel_from(DenseMatrix x0) const {
    const auto n = static_cast<Eigen::Index>(dim);
    const DenseMatrix unit = DenseMatrix::Identity(n, n) / static_cast<double>(dim);
    DenseMatrix x = solve_iterative(unit, std::move(x0));
    const double res = l.apply(0.0, x).norm();
    if (!x.allFinite() || res > 1e-9 * generator_norm * x.norm() || std::abs(x.trace() - 1.0) > 1e-8) {
      throw SteadyStateError("steady state not found (residual " + format_number(res) + ")");
    }
    return x;
  }
};

StationarySolver::StationarySolver(const Liouvillian& L, const StationaryOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  if (L.time_dependent()) throw SteadyStateError("stationary problems need a time-independent generator");
  Impl& im = *impl_;
  const std::size_t d = L.space().dimension();
  im.l = L;
  im.opts = opts;
  im.dim = d;
  im.direct = opts.method == StationaryMethod::Direct ||
              (opts.method == StationaryMethod::Auto && d <= kDirectStationaryLimit);
  const auto n = static_cast<Eigen::Index>(d);

  DenseMatrix rho;
  if (im.direct) {
    im.full = L.vectorized();
    im.replaced = Impl::with_trace_row(im.full, d, 0);
    Impl::factorize(im.lu, im.replaced);
    DenseVector b = DenseVector::Zero(n * n);
    b[0] = 1.0;
    const DenseVector x = Impl::solve_refined(im.lu, im.replaced, b);
    if (!x.allFinite()) throw SteadyStateError("stationary solve produced non-finite entries");

    // A unique kernel gives the same answer whichever diagonal row carries
    // the trace condition.
    const Eigen::Index alt_row = static_cast<Eigen::Index>((d - 1) * (d + 1));
    const SparseMatrix alt = Impl::with_trace_row(im.full, d, alt_row);
    Impl::Solver alt_lu;
    Impl::factorize(alt_lu, alt);
    DenseVector b_alt = DenseVector::Zero(n * n);
    b_alt[alt_row] = 1.0;
    const DenseVector x_alt = Impl::solve_refined(alt_lu, alt, b_alt);
    const double diff = (x - x_alt).norm();
    const double kernel_residual = (im.full * x).norm();
    const double scale = std::max(1.0, x.norm());
    if (!x_alt.allFinite() || diff > 1e-8 * scale || kernel_residual > 1e-8 * scale) {
      throw SteadyStateError("steady state is not unique (kernel check mismatch " + format_number(diff) + ")");
    }
    rho = Eigen::Map<const DenseMatrix>(x.data(), n, n);
  } else {
    const DenseMatrix k(L.generator());
    im.generator_norm = std::max(1.0, k.norm());
    const Eigen::ComplexSchur<DenseMatrix> schur(k);
    if (schur.info() != Eigen::Success) throw SteadyStateError("Schur decomposition failed");
    im.schur_u = schur.matrixU();
    im.schur_t = schur.matrixT();
    // An undamped direction makes the no-jump part singular; a small shift
    // keeps the preconditioner finite.
    double min_damping = std::numeric_limits<double>::infinity(), max_abs = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      min_damping = std::min(min_damping, -im.schur_t(i, i).real());
      max_abs = std::max(max_abs, std::abs(im.schur_t(i, i)));
    }
    if (min_damping < 1e-8 * (1.0 + max_abs)) im.shift = 1e-3 * (1.0 + max_abs);

    DenseMatrix vacuum = DenseMatrix::Zero(n, n);
    vacuum(0, 0) = 1.0;
    rho = im.kernel_from(vacuum);
    const DenseMatrix rho_alt = im.kernel_from(DenseMatrix::Identity(n, n) / static_cast<double>(d));
    const double diff = (rho - rho_alt).norm();
    if (diff > 1e-8 * std::max(1.0, rho.norm())) {
      throw SteadyStateError("steady state is not unique (kernel check mismatch " + format_number(diff) + ")");
    }
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  steady_ = DensityMatrix(L.space(), std::move(rho));
}

StationarySolver::~StationarySolver() = default;
StationarySolver::StationarySolver(StationarySolver&&) noexcept = default;
StationarySolver& StationarySolver::operator=(StationarySolver&&) noexcept = default;

bool StationarySolver::direct() const { return impl_->direct; }

DenseMatrix StationarySolver::solve(const DenseMatrix& source, cplx trace_value) const {
  const Impl& im = *impl_;
  const auto d = static_cast<Eigen::Index>(im.dim);
  if (source.rows() != d || source.cols() != d) throw SteadyStateError("source has wrong shape");
  // The generator preserves trace, so L x = -source is solvable only for a
  // traceless source.
  const double scale = std::max(1.0, source.cwiseAbs().maxCoeff());
  if (std::abs(source.trace()) > 1e-9 * scale * static_cast<double>(d)) {
    throw SteadyStateError("stationary source must be traceless");
  }
  if (im.direct) {
    DenseVector b = -as_vector(source);
    b[0] = trace_value;
    const DenseVector x = Impl::solve_refined(im.lu, im.replaced, b);
    if (!x.allFinite()) throw SteadyStateError("stationary solve produced non-finite entries");
    return Eigen::Map<const DenseMatrix>(x.data(), d, d);
  }
  DenseMatrix rhs = -source;
  rhs.diagonal().array() += trace_value / static_cast<double>(im.dim);
  DenseMatrix y = im.solve_iterative(rhs, DenseMatrix::Zero(d, d));
  const double res = (im.l.apply(0.0, y) + source).norm();
  if (!y.allFinite() || res > 1e-9 * im.generator_norm * std::max(1.0, y.norm())) {
    throw SteadyStateError("stationary solve did not converge (residual " + format_number(res) + ")");
  }
  // Removes the trace error left by the iteration.
  y += (trace_value - y.trace()) * steady_.matrix();
  return y;
}

DensityMatrix steady_state(const Liouvillian& L, const StationaryOptions& opts) {
  return StationarySolver(L, opts).steady_state();
}

DensityMatrix steady_state(const LindbladModel& model, const StationaryOptions& opts) {
  return steady_state(Liouvillian(model), opts);
}

// --------------------------------------------------------------------- CSV

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<NamedObservable>& observables) {
  std::vector<bool> hermitian;
  std::vector<std::string> columns{"t"};
  for (const auto& o : observables) {
    const double defect = SparseMatrix(o.op - SparseMatrix(o.op.adjoint())).norm();
    const bool h = defect <= 1e-12 * std::max(1.0, o.op.norm());
    hermitian.push_back(h);
    if (h) {
      columns.push_back(o.name);
    } else {
      columns.push_back(o.name + ".re");
      columns.push_back(o.name + ".im");
    }
  }
  CsvWriter csv(os, columns);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    for (std::size_t k = 0; k < observables.size(); ++k) {
      const cplx v = expectation(traj.states[i], observables[k].op);
      row.push_back(v.real());
      if (!hermitian[k]) row.push_back(v.imag());
    }
    csv.row(row);
  }
}

}  // namespace mfpt
