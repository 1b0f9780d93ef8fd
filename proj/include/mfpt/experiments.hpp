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

// Figure-level experiments: configuration, sweeps, CSV output and the
// run manifest.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mfpt/integrator.hpp"
#include "mfpt/sfg.hpp"

namespace mfpt::experiments {

enum class Experiment { Fig1, Fig2a, Fig2b, Fig3a, Fig3b, CustomSweep };

struct ExperimentInfo {
  Experiment id;
  std::string name;
  std::string summary;
};

const std::vector<ExperimentInfo>& catalog();
std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view name);

/// Invalid configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Spacing { Linear, Log };

/// Parameters a sweep may vary.
inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"g", "E_a", "E_b", "kappa_a", "kappa_b", "kappa_c"};
  return names;
}

struct SweepAxis {
  std::string name = "g";
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 2;
  Spacing spacing = Spacing::Linear;

  /// Grid including both endpoints.
  std::vector<double> values() const;
  bool operator==(const SweepAxis&) const = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Fig2b;
  sfg::Params params;
  SweepAxis sweep;
  std::string output_dir = "out";
  EvolverConfig integrator;
  std::size_t jobs = 1;
  /// Keep |G| = coupling along the sweep by deriving E_a from g (or g from
  /// E_a when E_a is the swept parameter).
  bool fixed_coupling = false;
  double coupling = 1.0;
  /// Highest order of the moment hierarchy used as the second reference.
  std::size_t moments_order = 3;
  /// Number of samples per trace (fig1).
  std::size_t trace_samples = 601;
  /// Skip the full-model reference (custom-sweep only).
  bool run_full_model = true;
};

/// Semantic equality on every field that influences a run.
bool same_run(const ExperimentConfig& lhs, const ExperimentConfig& rhs);

ExperimentConfig default_config(Experiment e);

/// Starts from the defaults of `experiment` and overlays the given fields.
/// Unknown keys and bad values raise ConfigError with the field path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Params for one sweep point, with the coupling constraint applied.
sfg::Params point_params(const ExperimentConfig& cfg, double value);

/// One sweep point of a full-model vs mean-field comparison.
struct RelativeErrorRecord {
  double sweep_value = 0.0;
  cplx full;
  cplx mft;
  /// |(full - mft) / mft|; empty when mft is zero.
  std::optional<double> relative_error;
  double indicator = 0.0;
};

/// Pairs the series point by point. Throws std::invalid_argument if the
/// grids differ in length or value.
std::vector<RelativeErrorRecord> compare(const std::vector<double>& full_grid, const std::vector<cplx>& full,
                                         const std::vector<double>& mft_grid, const std::vector<cplx>& mft,
                                         const std::vector<double>& indicators);

struct RunResult {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  nlohmann::json manifest;
};

/// Runs the experiment, writing its CSVs and manifest.json into
/// cfg.output_dir. Numerical failures propagate as exceptions other than
/// ConfigError.
RunResult run(const ExperimentConfig& cfg);

std::string code_version();

}  // namespace mfpt::experiments
