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

#include "mfpt/opalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfpt {

namespace {

double binomial(unsigned n, unsigned k) {
  double r = 1.0;
  for (unsigned i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

cplx ipow(cplx base, unsigned n) {
  cplx r = 1.0;
  for (unsigned i = 0; i < n; ++i) r *= base;
  return r;
}

double factorial(unsigned n) {
  double r = 1.0;
  for (unsigned i = 2; i <= n; ++i) r *= static_cast<double>(i);
  return r;
}

void check_exponent(const LadderPower& p, const AlgebraOptions& opts) {
  if (p.create > opts.max_exponent || p.annihilate > opts.max_exponent) {
    throw AlgebraError("ladder exponent exceeds cap of " + std::to_string(opts.max_exponent));
  }
}

// Per-mode expansion of (ad^p1 a^q1)(ad^p2 a^q2): Wick contractions of the
// inner a^q1 ad^p2 pair.
struct ModeTerm {
  LadderPower power;
  double weight;
};

std::vector<ModeTerm> mode_product(LadderPower lhs, LadderPower rhs) {
  std::vector<ModeTerm> out;
  const unsigned kmax = std::min(lhs.annihilate, rhs.create);
  out.reserve(kmax + 1);
  for (unsigned k = 0; k <= kmax; ++k) {
    const double w = binomial(lhs.annihilate, k) * binomial(rhs.create, k) * factorial(k);
    out.push_back({{lhs.create + rhs.create - k, lhs.annihilate + rhs.annihilate - k}, w});
  }
  return out;
}

void accumulate_product(const Monomial& lhs, const Monomial& rhs, cplx coeff, const AlgebraOptions& opts,
                        OperatorPolynomial& out) {
  const std::size_t span = std::max(lhs.mode_span(), rhs.mode_span());
  std::vector<std::vector<ModeTerm>> per_mode(span);
  for (std::size_t k = 0; k < span; ++k) per_mode[k] = mode_product(lhs.power(k), rhs.power(k));

  std::vector<LadderPower> powers(span);
  // Depth-first walk over the cartesian product of per-mode expansions.
  auto recurse = [&](auto&& self, std::size_t k, double weight) -> void {
    if (k == span) {
      for (const auto& p : powers) check_exponent(p, opts);
      out.add_term(Monomial(powers), coeff * weight, 0.0);
      return;
    }
    for (const auto& t : per_mode[k]) {
      powers[k] = t.power;
      self(self, k + 1, weight * t.weight);
    }
  };
  recurse(recurse, 0, 1.0);
}

void prune(OperatorPolynomial::TermMap& terms, double tol) {
  std::erase_if(terms, [tol](const auto& kv) { return std::abs(kv.second) < tol; });
}

}  // namespace

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(std::vector<LadderPower> powers) : powers_(std::move(powers)) { trim(); }

Monomial Monomial::annihilator(std::size_t mode, unsigned count) {
  std::vector<LadderPower> p(mode + 1);
  p[mode].annihilate = count;
  return Monomial(std::move(p));
}

Monomial Monomial::creator(std::size_t mode, unsigned count) {
  std::vector<LadderPower> p(mode + 1);
  p[mode].create = count;
  return Monomial(std::move(p));
}

LadderPower Monomial::power(std::size_t mode) const {
  return mode < powers_.size() ? powers_[mode] : LadderPower{};
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (const auto& p : powers_) d += p.degree();
  return d;
}

Monomial Monomial::adjoint() const {
  std::vector<LadderPower> p = powers_;
  for (auto& x : p) std::swap(x.create, x.annihilate);
  return Monomial(std::move(p));
}

void Monomial::trim() {
  while (!powers_.empty() && powers_.back().degree() == 0) powers_.pop_back();
}

// ------------------------------------------------------ OperatorPolynomial

OperatorPolynomial::OperatorPolynomial(const Monomial& m, cplx coeff) { add_term(m, coeff); }

OperatorPolynomial OperatorPolynomial::identity(cplx coeff) { return {Monomial{}, coeff}; }
OperatorPolynomial OperatorPolynomial::annihilation(std::size_t mode) {
  return {Monomial::annihilator(mode), 1.0};
}
OperatorPolynomial OperatorPolynomial::creation(std::size_t mode) { return {Monomial::creator(mode), 1.0}; }
OperatorPolynomial OperatorPolynomial::number(std::size_t mode) {
  std::vector<LadderPower> p(mode + 1);
  p[mode] = {1, 1};
  return {Monomial(std::move(p)), 1.0};
}

unsigned OperatorPolynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

std::size_t OperatorPolynomial::mode_span() const {
  std::size_t s = 0;
  for (const auto& [m, c] : terms_) s = std::max(s, m.mode_span());
  return s;
}

cplx OperatorPolynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? cplx{} : it->second;
}

void OperatorPolynomial::add_term(const Monomial& m, cplx coeff, double prune_tolerance) {
  if (coeff == cplx{}) return;
  auto [it, inserted] = terms_.try_emplace(m, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < prune_tolerance || it->second == cplx{}) terms_.erase(it);
}

OperatorPolynomial& OperatorPolynomial::operator+=(const OperatorPolynomial& rhs) {
  for (const auto& [m, c] : rhs.terms_) add_term(m, c);
  return *this;
}

OperatorPolynomial& OperatorPolynomial::operator-=(const OperatorPolynomial& rhs) {
  for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
  return *this;
}

OperatorPolynomial& OperatorPolynomial::operator*=(cplx s) {
  for (auto& [m, c] : terms_) c *= s;
  prune(terms_, 1e-14);
  return *this;
}

OperatorPolynomial OperatorPolynomial::operator-() const {
  OperatorPolynomial r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

double OperatorPolynomial::distance(const OperatorPolynomial& other) const {
  double d = 0.0;
  for (const auto& [m, c] : terms_) d = std::max(d, std::abs(c - other.coefficient(m)));
  for (const auto& [m, c] : other.terms_) {
    if (!terms_.contains(m)) d = std::max(d, std::abs(c));
  }
  return d;
}

// -------------------------------------------------------------- operations

OperatorPolynomial multiply(const OperatorPolynomial& p, const OperatorPolynomial& q,
                            const AlgebraOptions& opts) {
  OperatorPolynomial out;
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) accumulate_product(mp, mq, cp * cq, opts, out);
  }
  // Accumulation skipped pruning so that cancellations happen before the
  // threshold is applied; prune once at the end.
  OperatorPolynomial pruned;
  for (const auto& [m, c] : out.terms()) pruned.add_term(m, c, opts.prune_tolerance);
  return pruned;
}

OperatorPolynomial commutator(const OperatorPolynomial& p, const OperatorPolynomial& q,
                              const AlgebraOptions& opts) {
  OperatorPolynomial pq = multiply(p, q, opts);
  OperatorPolynomial qp = multiply(q, p, opts);
  OperatorPolynomial out;
  for (const auto& [m, c] : pq.terms()) out.add_term(m, c, 0.0);
  for (const auto& [m, c] : qp.terms()) out.add_term(m, -c, 0.0);
  OperatorPolynomial pruned;
  for (const auto& [m, c] : out.terms()) pruned.add_term(m, c, opts.prune_tolerance);
  return pruned;
}

OperatorPolynomial adjoint(const OperatorPolynomial& p) {
  OperatorPolynomial out;
  for (const auto& [m, c] : p.terms()) out.add_term(m.adjoint(), std::conj(c));
  return out;
}

OperatorPolynomial normal_order(const LadderWord& word, const AlgebraOptions& opts) {
  OperatorPolynomial acc = OperatorPolynomial::identity(word.coeff);
  for (const auto& f : word.factors) {
    const Monomial m = f.dagger ? Monomial::creator(f.mode) : Monomial::annihilator(f.mode);
    acc = multiply(acc, OperatorPolynomial(m, 1.0), opts);
  }
  return acc;
}

OperatorPolynomial normal_order(const OperatorPolynomial& p, const AlgebraOptions& opts) {
  OperatorPolynomial out;
  for (const auto& [m, c] : p.terms()) {
    LadderWord w{c, {}};
    for (std::size_t k = 0; k < m.mode_span(); ++k) {
      const LadderPower lp = m.power(k);
      for (unsigned i = 0; i < lp.create; ++i) w.factors.push_back({k, true});
      for (unsigned i = 0; i < lp.annihilate; ++i) w.factors.push_back({k, false});
    }
    out += normal_order(w, opts);
  }
  return out;
}

OperatorPolynomial displace(const OperatorPolynomial& p, std::size_t mode, cplx shift) {
  OperatorPolynomial out;
  for (const auto& [m, c] : p.terms()) {
    const LadderPower lp = m.power(mode);
    // (ad + s*)^p (a + s)^q is already normal ordered after binomial expansion.
    for (unsigned i = 0; i <= lp.create; ++i) {
      for (unsigned j = 0; j <= lp.annihilate; ++j) {
        std::vector<LadderPower> powers = m.powers();
        if (powers.size() <= mode) powers.resize(mode + 1);
        powers[mode] = {i, j};
        const cplx w = binomial(lp.create, i) * ipow(std::conj(shift), lp.create - i) *
                       binomial(lp.annihilate, j) * ipow(shift, lp.annihilate - j);
        out.add_term(Monomial(std::move(powers)), c * w);
      }
    }
  }
  return out;
}

OperatorPolynomial remap_modes(const OperatorPolynomial& p, const std::vector<std::size_t>& mapping) {
  OperatorPolynomial out;
  for (const auto& [m, c] : p.terms()) {
    std::vector<LadderPower> powers;
    for (std::size_t k = 0; k < m.mode_span(); ++k) {
      const LadderPower lp = m.power(k);
      if (lp.degree() == 0) continue;
      if (k >= mapping.size()) throw AlgebraError("remap_modes: mode " + std::to_string(k) + " has no target");
      const std::size_t target = mapping[k];
      if (powers.size() <= target) powers.resize(target + 1);
      if (powers[target].degree() != 0) throw AlgebraError("remap_modes: mapping is not injective");
      powers[target] = lp;
    }
    out.add_term(Monomial(std::move(powers)), c);
  }
  return out;
}

bool supported_on(const OperatorPolynomial& p, const std::vector<std::size_t>& modes) {
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t k = 0; k < m.mode_span(); ++k) {
      if (m.acts_on(k) && std::find(modes.begin(), modes.end(), k) == modes.end()) return false;
    }
  }
  return true;
}

std::string to_string(const Monomial& m, const std::vector<std::string>& mode_names) {
  if (m.is_identity()) return "1";
  std::string out;
  auto name = [&](std::size_t k) {
    return k < mode_names.size() ? mode_names[k] : "m" + std::to_string(k);
  };
  auto append = [&](const std::string& f, unsigned n) {
    if (n == 0) return;
    if (!out.empty()) out += "*";
    out += f;
    if (n > 1) out += "^" + std::to_string(n);
  };
  for (std::size_t k = 0; k < m.mode_span(); ++k) {
    append(name(k) + "d", m.power(k).create);
    append(name(k), m.power(k).annihilate);
  }
  return out;
}

std::string to_string(const OperatorPolynomial& p, const std::vector<std::string>& mode_names) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
    if (!m.is_identity()) os << "*" << to_string(m, mode_names);
  }
  return os.str();
}

}  // namespace mfpt
