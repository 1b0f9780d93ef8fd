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

#include "mfpt/fockspace.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfpt/csv.hpp"

namespace mfpt {

// ------------------------------------------------------------ ProductSpace

ProductSpace::ProductSpace(std::vector<ModeSpec> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw SpaceError("product space needs at least one mode");
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (modes_[k].dim < 2) throw SpaceError("mode '" + modes_[k].name + "' needs truncation >= 2");
    if (modes_[k].name.empty()) throw SpaceError("empty mode name");
    for (std::size_t j = 0; j < k; ++j) {
      if (modes_[j].name == modes_[k].name) throw SpaceError("duplicate mode '" + modes_[k].name + "'");
    }
  }
  strides_.assign(modes_.size(), 1);
  for (std::size_t k = modes_.size(); k-- > 0;) {
    strides_[k] = dimension_;
    dimension_ *= modes_[k].dim;
  }
}

std::vector<std::string> ProductSpace::mode_names() const {
  std::vector<std::string> out;
  for (const auto& m : modes_) out.push_back(m.name);
  return out;
}

std::size_t ProductSpace::mode_index(std::string_view name) const {
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (modes_[k].name == name) return k;
  }
  throw SpaceError("unknown mode '" + std::string(name) + "'");
}

bool ProductSpace::has_mode(std::string_view name) const {
  return std::any_of(modes_.begin(), modes_.end(), [&](const ModeSpec& m) { return m.name == name; });
}

std::size_t ProductSpace::index(std::span<const std::size_t> occupation) const {
  if (occupation.size() != modes_.size()) throw SpaceError("occupation vector has wrong length");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (occupation[k] >= modes_[k].dim) throw SpaceError("occupation beyond truncation");
    idx += occupation[k] * strides_[k];
  }
  return idx;
}

ProductSpace ProductSpace::subspace(std::vector<std::size_t> modes) const {
  if (modes.empty()) throw SpaceError("subspace needs at least one mode");
  std::sort(modes.begin(), modes.end());
  if (std::adjacent_find(modes.begin(), modes.end()) != modes.end()) throw SpaceError("repeated mode");
  std::vector<ModeSpec> specs;
  for (std::size_t k : modes) specs.push_back(modes_.at(k));
  return ProductSpace(std::move(specs));
}

// ---------------------------------------------------------- MatrixOperator

namespace {

double fill_ratio(const SparseMatrix& m) {
  const double total = static_cast<double>(m.rows()) * static_cast<double>(m.cols());
  return total == 0.0 ? 0.0 : static_cast<double>(m.nonZeros()) / total;
}

void check_dims(const ProductSpace& space, Eigen::Index rows, Eigen::Index cols) {
  const auto d = static_cast<Eigen::Index>(space.dimension());
  if (rows != d || cols != d) throw SpaceError("matrix dimensions do not match the space");
}

}  // namespace

MatrixOperator::MatrixOperator(ProductSpace space, SparseMatrix m) : space_(std::move(space)) {
  check_dims(space_, m.rows(), m.cols());
  m.makeCompressed();
  if (fill_ratio(m) > kDenseFillThreshold) {
    data_ = DenseMatrix(m);
  } else {
    data_ = std::move(m);
  }
}

MatrixOperator::MatrixOperator(ProductSpace space, DenseMatrix m) : space_(std::move(space)) {
  check_dims(space_, m.rows(), m.cols());
  const double nnz = static_cast<double>((m.array() != cplx{}).count());
  if (nnz / static_cast<double>(m.size()) > kDenseFillThreshold) {
    data_ = std::move(m);
  } else {
    data_ = SparseMatrix(m.sparseView());
  }
}

MatrixOperator MatrixOperator::identity(const ProductSpace& space) {
  SparseMatrix id(static_cast<Eigen::Index>(space.dimension()), static_cast<Eigen::Index>(space.dimension()));
  id.setIdentity();
  return {space, std::move(id)};
}

SparseMatrix MatrixOperator::sparse() const {
  if (const auto* s = std::get_if<SparseMatrix>(&data_)) return *s;
  return std::get<DenseMatrix>(data_).sparseView();
}

DenseMatrix MatrixOperator::dense() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) return *d;
  return DenseMatrix(std::get<SparseMatrix>(data_));
}

MatrixOperator MatrixOperator::adjoint() const {
  if (const auto* s = std::get_if<SparseMatrix>(&data_)) return {space_, SparseMatrix(s->adjoint())};
  return {space_, DenseMatrix(std::get<DenseMatrix>(data_).adjoint())};
}

void MatrixOperator::check_same_space(const MatrixOperator& rhs) const {
  if (!(space_ == rhs.space_)) throw SpaceError("operators live on different spaces");
}

MatrixOperator MatrixOperator::operator*(const MatrixOperator& rhs) const {
  check_same_space(rhs);
  if (is_sparse() && rhs.is_sparse()) return {space_, SparseMatrix(sparse() * rhs.sparse())};
  return {space_, DenseMatrix(dense() * rhs.dense())};
}

MatrixOperator MatrixOperator::operator+(const MatrixOperator& rhs) const {
  check_same_space(rhs);
  if (is_sparse() && rhs.is_sparse()) return {space_, SparseMatrix(sparse() + rhs.sparse())};
  return {space_, DenseMatrix(dense() + rhs.dense())};
}

MatrixOperator MatrixOperator::operator-(const MatrixOperator& rhs) const {
  check_same_space(rhs);
  if (is_sparse() && rhs.is_sparse()) return {space_, SparseMatrix(sparse() - rhs.sparse())};
  return {space_, DenseMatrix(dense() - rhs.dense())};
}

MatrixOperator MatrixOperator::scaled(cplx s) const {
  if (is_sparse()) return {space_, SparseMatrix(sparse() * s)};
  return {space_, DenseMatrix(dense() * s)};
}

// ----------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(ProductSpace space, DenseMatrix data) : space_(std::move(space)), data_(std::move(data)) {
  check_dims(space_, data_.rows(), data_.cols());
}

DensityMatrix DensityMatrix::zero(const ProductSpace& space) {
  const auto d = static_cast<Eigen::Index>(space.dimension());
  return {space, DenseMatrix::Zero(d, d)};
}

DensityMatrix DensityMatrix::from_ket(const ProductSpace& space, const DenseVector& ket) {
  if (ket.size() != static_cast<Eigen::Index>(space.dimension())) throw SpaceError("ket dimension mismatch");
  const DenseVector n = ket / ket.norm();
  return {space, n * n.adjoint()};
}

DensityMatrix DensityMatrix::fock(const ProductSpace& space, std::span<const std::size_t> occupation) {
  DensityMatrix rho = zero(space);
  const auto i = static_cast<Eigen::Index>(space.index(occupation));
  rho.data_(i, i) = 1.0;
  return rho;
}

double DensityMatrix::hermiticity_error() const { return (data_ - data_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
  const DenseMatrix h = 0.5 * (data_ + data_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::top_level_population(std::size_t mode) const {
  const std::size_t top = space_.dim(mode) - 1;
  double p = 0.0;
  for (std::size_t i = 0; i < space_.dimension(); ++i) {
    if (space_.occupation(i, mode) == top) p += data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return p;
}

DensityMatrix& DensityMatrix::operator+=(const DensityMatrix& rhs) {
  if (!(space_ == rhs.space_)) throw SpaceError("density matrices live on different spaces");
  data_ += rhs.data_;
  return *this;
}

DenseVector coherent_ket(std::size_t dim, cplx alpha) {
  DenseVector v(static_cast<Eigen::Index>(dim));
  cplx amp = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 0; n < dim; ++n) {
    v(static_cast<Eigen::Index>(n)) = amp;
    amp *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  return v / v.norm();
}

DensityMatrix tensor_product(const DensityMatrix& lhs, const DensityMatrix& rhs) {
  std::vector<ModeSpec> modes = lhs.space().modes();
  for (const auto& m : rhs.space().modes()) modes.push_back(m);
  const DenseMatrix& A = lhs.matrix();
  const DenseMatrix& B = rhs.matrix();
  DenseMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  }
  return {ProductSpace(std::move(modes)), std::move(out)};
}

DensityMatrix permute_modes(const DensityMatrix& rho, const ProductSpace& target) {
  const ProductSpace& src = rho.space();
  if (src.mode_count() != target.mode_count()) throw SpaceError("permute_modes: mode sets differ");
  std::vector<std::size_t> src_of_target(target.mode_count());
  for (std::size_t k = 0; k < target.mode_count(); ++k) {
    src_of_target[k] = src.mode_index(target.mode_name(k));
    if (src.dim(src_of_target[k]) != target.dim(k)) throw SpaceError("permute_modes: dimension mismatch");
  }
  const std::size_t d = src.dimension();
  std::vector<Eigen::Index> map(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < target.mode_count(); ++k) j += src.occupation(i, src_of_target[k]) * target.stride(k);
    map[i] = static_cast<Eigen::Index>(j);
  }
  DenseMatrix out(rho.matrix().rows(), rho.matrix().cols());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out(map[i], map[j]) = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return {target, std::move(out)};
}

// ----------------------------------------------------------- construction

namespace {

// sqrt(n!/low! * m!/low!) for n, m >= low; symmetric in (n, m) so that the
// matrix of an adjoint monomial is bit-identical to the conjugate transpose.
double ladder_amplitude(std::size_t n, std::size_t m, std::size_t low) {
  double prod = 1.0;
  for (std::size_t k = low + 1; k <= n; ++k) prod *= static_cast<double>(k);
  double prod2 = 1.0;
  for (std::size_t k = low + 1; k <= m; ++k) prod2 *= static_cast<double>(k);
  return std::sqrt(prod * prod2);
}

}  // namespace

SparseMatrix build_sparse(const OperatorPolynomial& p, const ProductSpace& space) {
  if (p.mode_span() > space.mode_count()) {
    throw SpaceError("operator references mode " + std::to_string(p.mode_span() - 1) + " outside a " +
                     std::to_string(space.mode_count()) + "-mode space");
  }
  const std::size_t d = space.dimension();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(p.size() * d);
  for (const auto& [mono, coeff] : p.terms()) {
    for (std::size_t col = 0; col < d; ++col) {
      double amp = 1.0;
      std::size_t row = col;
      bool alive = true;
      for (std::size_t k = 0; k < mono.mode_span() && alive; ++k) {
        const LadderPower lp = mono.power(k);
        if (lp.degree() == 0) continue;
        const std::size_t n = space.occupation(col, k);
        if (n < lp.annihilate) {
          alive = false;
          break;
        }
        const std::size_t low = n - lp.annihilate;
        const std::size_t out = low + lp.create;
        if (out >= space.dim(k)) {
          alive = false;
          break;
        }
        amp *= ladder_amplitude(n, out, low);
        row = row - n * space.stride(k) + out * space.stride(k);
      }
      if (alive) triplets.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), coeff * amp);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(cplx{});
  m.makeCompressed();
  return m;
}

MatrixOperator build_operator(const OperatorPolynomial& p, const ProductSpace& space) {
  return {space, build_sparse(p, space)};
}

// ---------------------------------------------------------- partial trace

namespace {

// full_index[r * n_traced + t] for kept index r and traced index t.
struct SplitIndex {
  ProductSpace kept;
  std::size_t n_kept = 0;
  std::size_t n_traced = 0;
  std::vector<std::size_t> full_index;
};

SplitIndex split_index(const ProductSpace& space, std::vector<std::size_t> keep) {
  if (keep.empty()) throw SpaceError("partial trace needs a non-empty keep set");
  for (std::size_t k : keep) {
    if (k >= space.mode_count()) throw SpaceError("keep set references an unknown mode");
  }
  SplitIndex s;
  s.kept = space.subspace(keep);
  std::sort(keep.begin(), keep.end());
  std::vector<std::size_t> traced;
  for (std::size_t k = 0; k < space.mode_count(); ++k) {
    if (!std::binary_search(keep.begin(), keep.end(), k)) traced.push_back(k);
  }
  s.n_kept = s.kept.dimension();
  s.n_traced = space.dimension() / s.n_kept;
  s.full_index.assign(space.dimension(), 0);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    std::size_t r = 0;
    for (std::size_t j = 0; j < keep.size(); ++j) r += space.occupation(i, keep[j]) * s.kept.stride(j);
    std::size_t t = 0;
    for (std::size_t k : traced) t = t * space.dim(k) + space.occupation(i, k);
    s.full_index[r * s.n_traced + t] = i;
  }
  return s;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
  const SplitIndex s = split_index(rho.space(), keep);
  const auto n = static_cast<Eigen::Index>(s.n_kept);
  DenseMatrix out = DenseMatrix::Zero(n, n);
  const DenseMatrix& m = rho.matrix();
  for (std::size_t r = 0; r < s.n_kept; ++r) {
    for (std::size_t c = 0; c < s.n_kept; ++c) {
      cplx acc{};
      for (std::size_t t = 0; t < s.n_traced; ++t) {
        acc += m(static_cast<Eigen::Index>(s.full_index[r * s.n_traced + t]),
                 static_cast<Eigen::Index>(s.full_index[c * s.n_traced + t]));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return {s.kept, std::move(out)};
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  std::vector<std::size_t> idx;
  for (const auto& name : keep) idx.push_back(rho.space().mode_index(name));
  return partial_trace(rho, idx);
}

cplx expectation(const DensityMatrix& rho, const SparseMatrix& op) {
  if (op.rows() != rho.matrix().rows()) throw SpaceError("expectation: dimension mismatch");
  cplx acc{};
  for (Eigen::Index col = 0; col < op.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(op, col); it; ++it) acc += it.value() * rho.matrix()(col, it.row());
  }
  return acc;
}

cplx expectation(const DensityMatrix& rho, const MatrixOperator& op) {
  if (!(op.space() == rho.space())) throw SpaceError("expectation: operator and state live on different spaces");
  if (op.is_sparse()) return expectation(rho, op.sparse());
  return (op.dense() * rho.matrix()).trace();
}

MatrixOperator tensor_embed(const MatrixOperator& op, const ProductSpace& full) {
  std::vector<std::size_t> keep;
  for (const auto& m : op.space().modes()) {
    if (!full.has_mode(m.name)) throw SpaceError("tensor_embed: mode '" + m.name + "' not in the full space");
    const std::size_t k = full.mode_index(m.name);
    if (full.dim(k) != m.dim) throw SpaceError("tensor_embed: truncation mismatch for mode '" + m.name + "'");
    if (!keep.empty() && k <= keep.back()) throw SpaceError("tensor_embed: subspace modes out of order");
    keep.push_back(k);
  }
  const SplitIndex s = split_index(full, keep);
  const SparseMatrix sub = op.sparse();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(static_cast<std::size_t>(sub.nonZeros()) * s.n_traced);
  for (Eigen::Index col = 0; col < sub.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(sub, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(col);
      for (std::size_t t = 0; t < s.n_traced; ++t) {
        triplets.emplace_back(static_cast<Eigen::Index>(s.full_index[r * s.n_traced + t]),
                              static_cast<Eigen::Index>(s.full_index[c * s.n_traced + t]), it.value());
      }
    }
  }
  const auto d = static_cast<Eigen::Index>(full.dimension());
  SparseMatrix m(d, d);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return {full, std::move(m)};
}

double trace_norm(const DenseMatrix& hermitian) {
  const DenseMatrix h = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DenseMatrix& a, const DenseMatrix& b) { return 0.5 * trace_norm(a - b); }

std::size_t truncation_for_population(double nbar) {
  if (nbar < 0.0) throw SpaceError("negative mean population");
  return static_cast<std::size_t>(std::ceil(nbar + 6.0 * std::sqrt(nbar) + 6.0));
}

// ------------------------------------------------------------- text format

void write_matrix_text(std::ostream& os, const std::string& kind, const ProductSpace& space,
                       const DenseMatrix& data) {
  check_dims(space, data.rows(), data.cols());
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) count += data.data()[i] != cplx{} ? 1 : 0;
  os << "# mfpt matrix v1\n";
  os << "kind " << kind << "\n";
  os << "modes";
  for (const auto& m : space.modes()) os << ' ' << m.name << ':' << m.dim;
  os << "\nentries " << count << "\n";
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      const cplx v = data(r, c);
      if (v == cplx{}) continue;
      os << r << ' ' << c << ' ' << format_number(v.real()) << ' ' << format_number(v.imag()) << '\n';
    }
  }
}

MatrixText read_matrix_text(std::istream& is) {
  auto fail = [](const std::string& what) { return SpaceError("matrix text: " + what); };
  std::string line;
  if (!std::getline(is, line) || line != "# mfpt matrix v1") throw fail("missing header line");

  MatrixText out;
  std::string key;
  if (!std::getline(is, line)) throw fail("missing kind line");
  {
    std::istringstream ls(line);
    if (!(ls >> key) || key != "kind" || !(ls >> out.kind)) throw fail("malformed kind line");
  }
  if (!std::getline(is, line)) throw fail("missing modes line");
  {
    std::istringstream ls(line);
    if (!(ls >> key) || key != "modes") throw fail("malformed modes line");
    std::vector<ModeSpec> modes;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.rfind(':');
      if (colon == std::string::npos) throw fail("mode token '" + tok + "' lacks ':'");
      modes.push_back({tok.substr(0, colon), std::stoul(tok.substr(colon + 1))});
    }
    out.space = ProductSpace(std::move(modes));
  }
  std::size_t count = 0;
  if (!std::getline(is, line)) throw fail("missing entries line");
  {
    std::istringstream ls(line);
    if (!(ls >> key) || key != "entries" || !(ls >> count)) throw fail("malformed entries line");
  }
  const auto d = static_cast<Eigen::Index>(out.space.dimension());
  out.data = DenseMatrix::Zero(d, d);
  for (std::size_t e = 0; e < count; ++e) {
    if (!std::getline(is, line)) throw fail("truncated body");
    std::istringstream ls(line);
    Eigen::Index r = 0, c = 0;
    std::string re, im;
    if (!(ls >> r >> c >> re >> im)) throw fail("malformed entry line");
    if (r < 0 || c < 0 || r >= d || c >= d) throw fail("entry index out of range");
    out.data(r, c) = cplx(std::stod(re), std::stod(im));
  }
  return out;
}

}  // namespace mfpt
