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

// mfpt-lab: runs the figure experiments.
//   mfpt-lab run --config <file> --out <dir> [--convention half|full] [--jobs N]
//   mfpt-lab validate --config <file>
//   mfpt-lab list-experiments
//   mfpt-lab show-config <experiment>
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfpt/experiments.hpp"

namespace {

namespace ex = mfpt::experiments;

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

ex::ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ex::ConfigError("config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ex::ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  return ex::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field perturbation laboratory for open quantum optics systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, convention;
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "run an experiment and write its CSVs and manifest");
  run->add_option("--config", config_path, "experiment configuration (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--convention", convention, "dissipator convention")->check(CLI::IsMember({"half", "full"}));
  run->add_option("--jobs", jobs, "worker threads for sweep points")->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("--config", validate_path, "experiment configuration (JSON)")->required();

  auto* list = app.add_subcommand("list-experiments", "list the available experiments");

  std::string show_name;
  auto* show = app.add_subcommand("show-config", "print the default configuration of an experiment");
  show->add_option("experiment", show_name, "experiment name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  if (*list) {
    for (const auto& info : ex::catalog()) std::cout << info.name << "\t" << info.summary << "\n";
    return 0;
  }

  try {
    if (*show) {
      const auto e = ex::experiment_from_string(show_name);
      if (!e) throw ex::ConfigError("experiment", "unknown experiment '" + show_name + "'");
      std::cout << ex::config_to_json(ex::default_config(*e)).dump(2) << "\n";
      return 0;
    }
    if (*validate) {
      const ex::ExperimentConfig cfg = load_config(validate_path);
      ex::validate(cfg);
      std::cout << "ok: " << ex::to_string(cfg.experiment) << ", " << cfg.sweep.points << " points over "
                << cfg.sweep.name << "\n";
      return 0;
    }
    ex::ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!convention.empty()) {
      cfg.params.convention =
          convention == "half" ? mfpt::DissipatorConvention::HalfKappa : mfpt::DissipatorConvention::FullKappa;
    }
    if (jobs > 0) cfg.jobs = jobs;
    ex::validate(cfg);
    try {
      const ex::RunResult result = ex::run(cfg);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& f : result.files) std::cout << cfg.output_dir << "/" << f << "\n";
      std::cout << cfg.output_dir << "/manifest.json\n";
    } catch (const ex::ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    }
  } catch (const ex::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
