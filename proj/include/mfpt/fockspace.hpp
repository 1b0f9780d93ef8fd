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

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfpt/opalg.hpp"

namespace mfpt {

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModeSpec {
  std::string name;
  std::size_t dim = 2;

  bool operator==(const ModeSpec&) const = default;
};

/// Truncated product Fock space. Basis index is row-major over the mode list:
/// the last-listed mode varies fastest.
class ProductSpace {
 public:
  ProductSpace() = default;
  explicit ProductSpace(std::vector<ModeSpec> modes);

  std::size_t mode_count() const { return modes_.size(); }
  const std::vector<ModeSpec>& modes() const { return modes_; }
  const std::string& mode_name(std::size_t k) const { return modes_.at(k).name; }
  std::size_t dim(std::size_t k) const { return modes_.at(k).dim; }
  std::size_t dimension() const { return dimension_; }
  std::size_t stride(std::size_t k) const { return strides_.at(k); }
  std::vector<std::string> mode_names() const;

  /// Index of mode `name`; throws SpaceError if absent.
  std::size_t mode_index(std::string_view name) const;
  bool has_mode(std::string_view name) const;

  std::size_t index(std::span<const std::size_t> occupation) const;
  std::size_t occupation(std::size_t index, std::size_t mode) const {
    return (index / strides_[mode]) % modes_[mode].dim;
  }

  /// Space over the listed modes, kept in this space's order.
  ProductSpace subspace(std::vector<std::size_t> modes) const;

  bool operator==(const ProductSpace& other) const { return modes_ == other.modes_; }

 private:
  std::vector<ModeSpec> modes_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

/// Matrix of an operator on a ProductSpace; stored sparse below 25% fill.
class MatrixOperator {
 public:
  static constexpr double kDenseFillThreshold = 0.25;

  MatrixOperator() = default;
  MatrixOperator(ProductSpace space, SparseMatrix m);
  MatrixOperator(ProductSpace space, DenseMatrix m);

  static MatrixOperator identity(const ProductSpace& space);

  const ProductSpace& space() const { return space_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }
  SparseMatrix sparse() const;
  DenseMatrix dense() const;
  std::size_t rows() const { return space_.dimension(); }

  MatrixOperator adjoint() const;
  MatrixOperator operator*(const MatrixOperator& rhs) const;
  MatrixOperator operator+(const MatrixOperator& rhs) const;
  MatrixOperator operator-(const MatrixOperator& rhs) const;
  MatrixOperator scaled(cplx s) const;

 private:
  void check_same_space(const MatrixOperator& rhs) const;

  ProductSpace space_;
  std::variant<SparseMatrix, DenseMatrix> data_;
};

/// Hermitian, unit trace for physical states. Perturbation components of the
/// mean-field hierarchy reuse this type with zero trace.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(ProductSpace space, DenseMatrix data);

  static DensityMatrix zero(const ProductSpace& space);
  static DensityMatrix from_ket(const ProductSpace& space, const DenseVector& ket);
  static DensityMatrix fock(const ProductSpace& space, std::span<const std::size_t> occupation);

  const ProductSpace& space() const { return space_; }
  const DenseMatrix& matrix() const { return data_; }
  DenseMatrix& matrix() { return data_; }

  cplx trace() const { return data_.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  /// Population of the highest retained Fock level of `mode`.
  double top_level_population(std::size_t mode) const;

  DensityMatrix& operator+=(const DensityMatrix& rhs);

 private:
  ProductSpace space_;
  DenseMatrix data_;
};

/// Normalized coherent-state ket truncated to `dim` levels.
DenseVector coherent_ket(std::size_t dim, cplx alpha);

/// Tensor product; the result's modes are lhs modes followed by rhs modes.
DensityMatrix tensor_product(const DensityMatrix& lhs, const DensityMatrix& rhs);

/// Reorders the modes of rho into the order of `target` (same mode set).
DensityMatrix permute_modes(const DensityMatrix& rho, const ProductSpace& target);

MatrixOperator build_operator(const OperatorPolynomial& p, const ProductSpace& space);
SparseMatrix build_sparse(const OperatorPolynomial& p, const ProductSpace& space);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

cplx expectation(const DensityMatrix& rho, const MatrixOperator& op);
cplx expectation(const DensityMatrix& rho, const SparseMatrix& op);

/// Embeds an operator on a subspace (modes matched by name, in full-space
/// order) into `full`, acting as identity on the complement.
MatrixOperator tensor_embed(const MatrixOperator& op, const ProductSpace& full);

/// Sum of |eigenvalues| of a Hermitian matrix.
double trace_norm(const DenseMatrix& hermitian);
/// 0.5 * || a - b ||_1.
double trace_distance(const DenseMatrix& a, const DenseMatrix& b);

/// Fock truncation for a Poisson-like mode of mean occupation nbar:
/// ceil(nbar + 6 sqrt(nbar) + 6).
std::size_t truncation_for_population(double nbar);

// Text format, one entry per line after a short header:
//   # mfpt matrix v1
//   kind <tag>
//   modes <name>:<dim> ...
//   entries <count>
//   <row> <col> <re> <im>
struct MatrixText {
  std::string kind;
  ProductSpace space;
  DenseMatrix data;
};

void write_matrix_text(std::ostream& os, const std::string& kind, const ProductSpace& space,
                       const DenseMatrix& data);
MatrixText read_matrix_text(std::istream& is);

}  // namespace mfpt
