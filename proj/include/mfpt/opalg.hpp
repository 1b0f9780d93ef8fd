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

#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfpt {

using cplx = std::complex<double>;

/// Raised when an operator expression cannot be represented (exponent cap,
/// unknown mode, malformed input).
class AlgebraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModeId {
  std::string name;
  std::size_t index = 0;
};

/// Creation/annihilation counts of one mode inside a normal-ordered product.
struct LadderPower {
  unsigned create = 0;
  unsigned annihilate = 0;

  unsigned degree() const { return create + annihilate; }
  auto operator<=>(const LadderPower&) const = default;
};

/// Coefficient-free normal-ordered product  prod_k (a_k^dag)^{p_k} a_k^{q_k},
/// modes addressed by ordinal. Trailing identity factors are trimmed so that
/// equal operators compare equal regardless of how many modes they span.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<LadderPower> powers);

  static Monomial annihilator(std::size_t mode, unsigned count = 1);
  static Monomial creator(std::size_t mode, unsigned count = 1);

  const std::vector<LadderPower>& powers() const { return powers_; }
  LadderPower power(std::size_t mode) const;
  /// Number of leading modes this monomial touches (max index + 1).
  std::size_t mode_span() const { return powers_.size(); }
  unsigned degree() const;
  bool is_identity() const { return powers_.empty(); }
  bool acts_on(std::size_t mode) const { return power(mode).degree() > 0; }

  Monomial adjoint() const;

  auto operator<=>(const Monomial&) const = default;

 private:
  void trim();
  std::vector<LadderPower> powers_;
};

struct AlgebraOptions {
  unsigned max_exponent = 16;
  double prune_tolerance = 1e-14;
};

/// Sum of normal-ordered monomials with complex coefficients. The empty term
/// map is the zero operator; every stored coefficient is above the pruning
/// tolerance.
class OperatorPolynomial {
 public:
  using TermMap = std::map<Monomial, cplx>;

  OperatorPolynomial() = default;
  OperatorPolynomial(const Monomial& m, cplx coeff);

  static OperatorPolynomial identity(cplx coeff = 1.0);
  static OperatorPolynomial annihilation(std::size_t mode);
  static OperatorPolynomial creation(std::size_t mode);
  static OperatorPolynomial number(std::size_t mode);

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  std::size_t mode_span() const;
  cplx coefficient(const Monomial& m) const;
  /// Coefficient of the identity monomial.
  cplx constant() const { return coefficient(Monomial{}); }

  void add_term(const Monomial& m, cplx coeff, double prune_tolerance = 1e-14);

  OperatorPolynomial& operator+=(const OperatorPolynomial& rhs);
  OperatorPolynomial& operator-=(const OperatorPolynomial& rhs);
  OperatorPolynomial& operator*=(cplx s);
  OperatorPolynomial operator-() const;

  friend OperatorPolynomial operator+(OperatorPolynomial lhs, const OperatorPolynomial& rhs) {
    return lhs += rhs;
  }
  friend OperatorPolynomial operator-(OperatorPolynomial lhs, const OperatorPolynomial& rhs) {
    return lhs -= rhs;
  }
  friend OperatorPolynomial operator*(OperatorPolynomial p, cplx s) { return p *= s; }
  friend OperatorPolynomial operator*(cplx s, OperatorPolynomial p) { return p *= s; }
  friend bool operator==(const OperatorPolynomial&, const OperatorPolynomial&) = default;

  /// Max over terms of |c_p - c_q|, including terms present in only one side.
  double distance(const OperatorPolynomial& other) const;
  bool approx_equal(const OperatorPolynomial& other, double tol) const {
    return distance(other) <= tol;
  }

 private:
  TermMap terms_;
};

/// One ladder factor of an unordered word.
struct Ladder {
  std::size_t mode = 0;
  bool dagger = false;
};

/// coeff * (product of ladders in the given order), not yet normal ordered.
struct LadderWord {
  cplx coeff = 1.0;
  std::vector<Ladder> factors;
};

OperatorPolynomial normal_order(const LadderWord& word, const AlgebraOptions& opts = {});
/// Rebuilds every term from its ladder word and re-canonicalizes.
OperatorPolynomial normal_order(const OperatorPolynomial& p, const AlgebraOptions& opts = {});

OperatorPolynomial multiply(const OperatorPolynomial& p, const OperatorPolynomial& q,
                            const AlgebraOptions& opts = {});
OperatorPolynomial commutator(const OperatorPolynomial& p, const OperatorPolynomial& q,
                              const AlgebraOptions& opts = {});
OperatorPolynomial adjoint(const OperatorPolynomial& p);

inline OperatorPolynomial operator*(const OperatorPolynomial& p, const OperatorPolynomial& q) {
  return multiply(p, q);
}

/// Substitutes a_mode -> a_mode + shift (and a_mode^dag -> a_mode^dag + conj(shift)).
OperatorPolynomial displace(const OperatorPolynomial& p, std::size_t mode, cplx shift);

/// Renumbers modes: mode k of p becomes mapping[k]. Modes of p outside the
/// mapping raise AlgebraError.
OperatorPolynomial remap_modes(const OperatorPolynomial& p, const std::vector<std::size_t>& mapping);

/// True if every non-identity term only touches modes listed in `modes`.
bool supported_on(const OperatorPolynomial& p, const std::vector<std::size_t>& modes);

/// Adjoint-symmetry defect: distance(adjoint(p), p).
inline double hermiticity_defect(const OperatorPolynomial& p) { return adjoint(p).distance(p); }

/// Human-readable form using the given mode names ("ad" for a^dag).
std::string to_string(const OperatorPolynomial& p, const std::vector<std::string>& mode_names);
std::string to_string(const Monomial& m, const std::vector<std::string>& mode_names);

}  // namespace mfpt
