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

#include "mfpt/operator_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>

namespace mfpt {

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& modes,
         const std::map<std::string, cplx, std::less<>>& constants, const AlgebraOptions& opts)
      : text_(text), modes_(modes), constants_(constants), opts_(opts) {}

  OperatorPolynomial parse() {
    OperatorPolynomial p = expression();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return p;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  OperatorPolynomial expression() {
    OperatorPolynomial acc = term();
    for (;;) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  OperatorPolynomial term() {
    OperatorPolynomial acc = unary();
    while (accept('*')) acc = multiply(acc, unary(), opts_);
    return acc;
  }

  OperatorPolynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  OperatorPolynomial power() {
    OperatorPolynomial base = primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected non-negative integer exponent", start);
    const unsigned long n = std::strtoul(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr, 10);
    if (n > opts_.max_exponent) throw ParseError("exponent exceeds cap", start);
    OperatorPolynomial acc = OperatorPolynomial::identity();
    for (unsigned long k = 0; k < n; ++k) acc = multiply(acc, base, opts_);
    return acc;
  }

  OperatorPolynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      OperatorPolynomial inner = expression();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  OperatorPolynomial number() {
    const std::size_t start = pos_;
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) throw ParseError("malformed number", start);
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    // A trailing 'i' directly after the digits marks an imaginary literal.
    if (pos_ < text_.size() && text_[pos_] == 'i' &&
        (pos_ + 1 == text_.size() || !std::isalnum(static_cast<unsigned char>(text_[pos_ + 1])))) {
      ++pos_;
      return OperatorPolynomial::identity(cplx(0.0, v));
    }
    return OperatorPolynomial::identity(v);
  }

  OperatorPolynomial identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (auto it = constants_.find(name); it != constants_.end()) return OperatorPolynomial::identity(it->second);
    if (auto k = mode_index(name)) return OperatorPolynomial::annihilation(*k);
    if (name.size() > 1 && name.back() == 'd') {
      if (auto k = mode_index(name.substr(0, name.size() - 1))) return OperatorPolynomial::creation(*k);
    }
    if (name == "i") return OperatorPolynomial::identity(cplx(0.0, 1.0));
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::optional<std::size_t> mode_index(std::string_view name) const {
    auto it = std::find(modes_.begin(), modes_.end(), name);
    if (it == modes_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - modes_.begin());
  }

  std::string_view text_;
  const std::vector<std::string>& modes_;
  const std::map<std::string, cplx, std::less<>>& constants_;
  const AlgebraOptions& opts_;
  std::size_t pos_ = 0;
};

}  // namespace

OperatorPolynomial parse_operator(std::string_view text, const std::vector<std::string>& modes,
                                  const std::map<std::string, cplx, std::less<>>& constants,
                                  const AlgebraOptions& opts) {
  return Parser(text, modes, constants, opts).parse();
}

}  // namespace mfpt
