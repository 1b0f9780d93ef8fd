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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mfpt/opalg.hpp"

namespace mfpt {

class ParseError : public AlgebraError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : AlgebraError(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses an operator expression such as "g*(ad*b*cd + a*bd*c)".
///
/// Identifiers resolve in this order: named constants, a mode name
/// (annihilator), a mode name followed by `d` (creator), the imaginary unit
/// `i`.
/// Products keep the written order and are normal ordered on the fly. The
/// full grammar is in docs/operator_grammar.md.
OperatorPolynomial parse_operator(std::string_view text, const std::vector<std::string>& modes,
                                  const std::map<std::string, cplx, std::less<>>& constants = {},
                                  const AlgebraOptions& opts = {});

}  // namespace mfpt
