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

#include "mfpt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <thread>

#include "mfpt/csv.hpp"
#include "mfpt/fit.hpp"
#include "mfpt/lindblad.hpp"
#include "mfpt/moments.hpp"

#ifndef MFPT_LAB_VERSION
#define MFPT_LAB_VERSION "0.0.0"
#endif

namespace mfpt::experiments {

using nlohmann::json;

namespace {

constexpr std::size_t kMinimumFig1PumpDim = 24;

// ------------------------------------------------------------ json helpers

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  return j;
}

void read_number(const json& j, const std::string& key, const std::string& path, double& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + key, "must be a number");
  out = v.get<double>();
}

void read_count(const json& j, const std::string& key, const std::string& path, std::size_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path + key, "must be a non-negative integer");
  out = v.get<std::size_t>();
}

void read_bool(const json& j, const std::string& key, const std::string& path, bool& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + key, "must be true or false");
  out = v.get<bool>();
}

void read_string(const json& j, const std::string& key, const std::string& path, std::string& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + key, "must be a string");
  out = v.get<std::string>();
}

std::string convention_name(DissipatorConvention c) { return c == DissipatorConvention::HalfKappa ? "half" : "full"; }

double* axis_target(sfg::Params& p, const std::string& name) {
  if (name == "g") return &p.g;
  if (name == "E_a") return &p.e_a;
  if (name == "E_b") return &p.e_b;
  if (name == "kappa_a") return &p.kappa_a;
  if (name == "kappa_b") return &p.kappa_b;
  if (name == "kappa_c") return &p.kappa_c;
  return nullptr;
}

// "field: message" from Params::validate becomes "params.field: message".
[[noreturn]] void rethrow_params_error(const std::invalid_argument& e, const std::string& prefix) {
  const std::string what = e.what();
  const auto colon = what.find(": ");
  if (colon == std::string::npos) throw ConfigError(prefix, what);
  throw ConfigError(prefix + what.substr(0, colon), what.substr(colon + 2));
}

// ---------------------------------------------------------- sweep workers

// Runs fn(i) for i < n on up to `jobs` threads; rethrows the first failure
// in index order.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ------------------------------------------------------------ point records

struct PointInfo {
  double value = 0.0;
  sfg::Params params;
  std::string frame;
  std::vector<std::size_t> dims;
  std::vector<double> max_top_population;
  std::vector<std::string> warnings;
};

std::vector<double> top_populations(const DensityMatrix& rho) {
  std::vector<double> out;
  for (std::size_t k = 0; k < rho.space().mode_count(); ++k) out.push_back(rho.top_level_population(k));
  return out;
}

void flag_truncation(PointInfo& info) {
  for (std::size_t k = 0; k < info.max_top_population.size(); ++k) {
    if (info.max_top_population[k] > kTruncationWarningLevel) {
      info.warnings.push_back("truncation: top Fock level of mode " + std::string(1, "abc"[k]) + " holds " +
                              format_number(info.max_top_population[k]));
    }
  }
}

std::vector<std::size_t> dims_of(const ProductSpace& s) {
  std::vector<std::size_t> out;
  for (const auto& m : s.modes()) out.push_back(m.dim);
  return out;
}

json point_json(const PointInfo& info, const std::string& axis) {
  json j;
  j["value"] = info.value;
  j["axis"] = axis;
  j["g"] = info.params.g;
  j["E_a"] = info.params.e_a;
  j["E_b"] = info.params.e_b;
  j["frame"] = info.frame;
  j["dims"] = info.dims;
  j["max_top_population"] = info.max_top_population;
  j["warnings"] = info.warnings;
  return j;
}

std::string re_col(const std::string& name) { return name + ".re"; }
std::string im_col(const std::string& name) { return name + ".im"; }

std::optional<double> ratio(cplx num, cplx den) {
  if (std::abs(den) == 0.0) return std::nullopt;
  return std::abs(num / den);
}

double value_or_nan(std::optional<double> v) { return v ? *v : std::numeric_limits<double>::quiet_NaN(); }

DensityMatrix full_model_steady(const sfg::Params& p, PointInfo& info) {
  const LindbladModel model = sfg::build_full_model(p, sfg::PumpFrame::Displaced);
  DensityMatrix rho = steady_state(model);
  info.frame = "displaced";
  info.dims = dims_of(model.space);
  info.max_top_population = top_populations(rho);
  flag_truncation(info);
  return rho;
}

cplx mean_of(const DensityMatrix& rho, std::size_t mode) {
  return expectation(rho, build_sparse(OperatorPolynomial::annihilation(mode), rho.space()));
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

// ------------------------------------------------------------------- fig1

struct Fig1Point {
  PointInfo info;
  std::vector<double> times, full, analytic, effective;
  sfg::Rates rates;
  DampedCosineFit fit;
  double effective_error = 0.0;
};

Fig1Point run_fig1_point(const ExperimentConfig& cfg, double value) {
  Fig1Point out;
  sfg::Params p = point_params(cfg, value);
  if (p.dim_a == 0) {
    p.dim_a = std::max(kMinimumFig1PumpDim, sfg::full_space(p, sfg::PumpFrame::Displaced).dim(sfg::kPump));
  }
  out.info.value = value;
  out.info.params = p;
  out.info.frame = "displaced";
  out.rates = sfg::analytic_rates(p);
  const double omega = out.rates.frequency();
  if (!(omega > 0.0)) throw std::runtime_error("fig1 needs a nonzero stimulated coupling");
  const double window = 6.0 * std::numbers::pi / omega;
  out.times = uniform_times(window, cfg.trace_samples);
  EvolverConfig ec = cfg.integrator;
  ec.t_max = window;

  const LindbladModel model = sfg::build_full_model(p, sfg::PumpFrame::Displaced);
  out.info.dims = dims_of(model.space);
  const Trajectory full = evolve(model, sfg::initial_state(p, sfg::PumpFrame::Displaced), ec, out.times);
  const SparseMatrix nb = build_sparse(OperatorPolynomial::number(sfg::kSignal), model.space);
  for (const auto& rho : full.states) out.full.push_back(expectation(rho, nb).real());
  out.info.max_top_population = full.max_top_population;
  flag_truncation(out.info);

  const Liouvillian eff = sfg::effective_signal_liouvillian(p, &out.info.warnings);
  const Trajectory reduced = evolve(eff, sfg::effective_initial_state(p), ec, out.times);
  const SparseMatrix nb_eff = build_sparse(OperatorPolynomial::number(0), eff.space());
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    out.effective.push_back(expectation(reduced.states[k], nb_eff).real());
    out.analytic.push_back(sfg::population_b(out.times[k], p));
    out.effective_error = std::max(out.effective_error, std::abs(out.effective[k] - out.analytic[k]));
  }
  out.fit = fit_damped_cosine(out.times, out.full, out.rates.decay(), omega);
  if (!out.fit.converged) out.info.warnings.push_back("fit: damped-cosine fit did not converge");
  return out;
}

void write_fig1(const ExperimentConfig& cfg, const std::vector<Fig1Point>& points, const std::filesystem::path& dir,
                RunResult& result) {
  const std::string axis = cfg.sweep.name;
  {
    auto os = open_output(dir / "fig1_traces.csv");
    CsvWriter w(os, {axis, "t", "N_b_full", "N_b_analytic", "N_b_effective"});
    for (const auto& pt : points) {
      for (std::size_t k = 0; k < pt.times.size(); ++k) {
        w.row({pt.info.value, pt.times[k], pt.full[k], pt.analytic[k], pt.effective[k]});
      }
    }
  }
  {
    auto os = open_output(dir / "fig1_rates.csv");
    CsvWriter w(os, {axis, "Gamma_fit", "Gamma_analytic", "Omega_fit", "Omega_analytic", "Gamma_fit_sigma",
                     "Omega_fit_sigma", "Gamma_analytic_2gamma2", "g", "E_a", "G_abs", "gamma1", "gamma2", "delta",
                     "fit_rms", "effective_max_abs_error"});
    for (const auto& pt : points) {
      const auto& r = pt.rates;
      w.row({pt.info.value, pt.fit.gamma, r.decay(), pt.fit.omega, r.frequency(), pt.fit.sigma_gamma,
             pt.fit.sigma_omega, 4.0 * (r.gamma1 + 2.0 * r.gamma2), pt.info.params.g, pt.info.params.e_a,
             std::abs(r.coupling), r.gamma1, r.gamma2, r.delta, pt.fit.rms_residual, pt.effective_error});
    }
  }
  result.files = {"fig1_traces.csv", "fig1_rates.csv"};
}

// ------------------------------------------------------- steady pieces

struct AsymmetricSteady {
  cplx alpha, a_mft, a_moments;
  std::optional<double> indicator;
  std::optional<double> closed_form;
};

AsymmetricSteady asymmetric_steady(const sfg::Params& p, std::size_t order, std::vector<std::string>& warnings) {
  AsymmetricSteady out;
  out.alpha = sfg::asymmetric_pump_amplitude(p);
  const Monomial a = Monomial::annihilator(sfg::kPump);
  const MomentHierarchy h(sfg::moment_model(p, SplitKind::Asymmetric), {a}, order);
  const SteadyMoments sm = h.solve_steady();
  out.indicator = indicator(sm, a, 1);
  out.a_mft = sm.value(0, a);
  for (std::size_t j = 0; j <= sm.order(); ++j) out.a_moments += sm.value(j, a);
  try {
    out.closed_form = sfg::indicator_asym_first(p);
  } catch (const std::invalid_argument& e) {
    warnings.push_back(std::string("closed-form first-order indicator unavailable: ") + e.what());
  }
  return out;
}

struct SymmetricSteady {
  sfg::SymmetricPump pump;
  cplx b_mft, b_moments;
  std::optional<double> indicator_b, indicator_a, printed;
};

SymmetricSteady symmetric_steady(const sfg::Params& p, std::size_t order, std::vector<std::string>& warnings) {
  SymmetricSteady out;
  out.pump = sfg::symmetric_pump_amplitude(p);
  const Monomial a = Monomial::annihilator(sfg::kPump);
  const Monomial b = Monomial::annihilator(sfg::kSignal);
  const MomentHierarchy h(sfg::moment_model(p, SplitKind::Symmetric), {a, b}, order);
  const SteadyMoments sm = h.solve_steady();
  out.indicator_b = indicator(sm, b, 2);
  out.indicator_a = indicator(sm, a, 2);
  out.b_mft = sm.value(0, b) + sm.value(1, b);
  for (std::size_t j = 0; j <= sm.order(); ++j) out.b_moments += sm.value(j, b);
  try {
    out.printed = sfg::indicator_sym_second(p).signal;
  } catch (const std::invalid_argument& e) {
    warnings.push_back(std::string("printed second-order indicator unavailable: ") + e.what());
  }
  return out;
}

struct SteadyPoint {
  PointInfo info;
  std::optional<AsymmetricSteady> asym;
  std::optional<SymmetricSteady> sym;
  std::optional<sfg::Rates> rates;
  bool has_full = false;
  cplx a_full, b_full;
};

SteadyPoint run_steady_point(const ExperimentConfig& cfg, double value, bool asym, bool sym, bool full_model) {
  SteadyPoint out;
  const sfg::Params p = point_params(cfg, value);
  out.info.value = value;
  out.info.params = p;
  if (asym) out.asym = asymmetric_steady(p, cfg.moments_order, out.info.warnings);
  if (sym) out.sym = symmetric_steady(p, cfg.moments_order, out.info.warnings);
  if (asym && sym) out.rates = sfg::analytic_rates(p);
  if (full_model) {
    const DensityMatrix rho = full_model_steady(p, out.info);
    out.a_full = sfg::pump_mean(rho, p, sfg::PumpFrame::Displaced);
    out.b_full = mean_of(rho, sfg::kSignal);
    out.has_full = true;
  }
  return out;
}

struct ErrorColumns {
  std::vector<double> fst, moments;
};

// Relative errors of the full-model and moment-hierarchy values against the
// mean-field value, NaN where undefined.
ErrorColumns error_columns(const std::vector<SteadyPoint>& points, const std::vector<double>& indicators,
                           const std::function<cplx(const SteadyPoint&)>& full,
                           const std::function<cplx(const SteadyPoint&)>& mft,
                           const std::function<cplx(const SteadyPoint&)>& moments) {
  std::vector<double> grid;
  std::vector<cplx> f, m, r;
  for (const auto& pt : points) {
    grid.push_back(pt.info.value);
    f.push_back(full(pt));
    m.push_back(mft(pt));
    r.push_back(moments(pt));
  }
  const auto fst = compare(grid, f, grid, m, indicators);
  const auto mom = compare(grid, r, grid, m, indicators);
  ErrorColumns out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.fst.push_back(points[i].has_full ? value_or_nan(fst[i].relative_error) : nan);
    out.moments.push_back(value_or_nan(mom[i].relative_error));
  }
  return out;
}

void write_fig2(const ExperimentConfig& cfg, const std::vector<SteadyPoint>& points, const std::filesystem::path& dir,
                const std::string& file) {
  std::vector<double> indicators;
  for (const auto& pt : points) indicators.push_back(value_or_nan(pt.asym->indicator));
  const ErrorColumns err = error_columns(
      points, indicators, [](const SteadyPoint& pt) { return pt.a_full; },
      [](const SteadyPoint& pt) { return pt.asym->a_mft; }, [](const SteadyPoint& pt) { return pt.asym->a_moments; });
  auto os = open_output(dir / file);
  CsvWriter w(os, {cfg.sweep.name, "indicator", "relerr_FST", "relerr_moments", "residual", "indicator_closed_form",
                   "g", "E_a", re_col("alpha"), im_col("alpha"), re_col("a_FST"), im_col("a_FST"),
                   re_col("a_moments"), im_col("a_moments")});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    const auto& s = *pt.asym;
    w.row({pt.info.value, indicators[i], err.fst[i], err.moments[i], std::abs(indicators[i] - err.moments[i]),
           value_or_nan(s.closed_form), pt.info.params.g, pt.info.params.e_a, s.alpha.real(), s.alpha.imag(),
           pt.has_full ? pt.a_full.real() : nan, pt.has_full ? pt.a_full.imag() : nan, s.a_moments.real(),
           s.a_moments.imag()});
  }
}

void write_fig3(const ExperimentConfig& cfg, const std::vector<SteadyPoint>& points, const std::filesystem::path& dir,
                const std::string& file) {
  std::vector<double> indicators;
  for (const auto& pt : points) indicators.push_back(value_or_nan(pt.sym->indicator_b));
  const ErrorColumns err = error_columns(
      points, indicators, [](const SteadyPoint& pt) { return pt.b_full; },
      [](const SteadyPoint& pt) { return pt.sym->b_mft; }, [](const SteadyPoint& pt) { return pt.sym->b_moments; });
  auto os = open_output(dir / file);
  CsvWriter w(os, {cfg.sweep.name, "indicator", "relerr_FST", "relerr_moments", "residual", "indicator_printed",
                   "indicator_a", "g", "E_a", re_col("alpha"), im_col("alpha"), "relation_residual", re_col("b_FST"),
                   im_col("b_FST"), re_col("b_mft"), im_col("b_mft"), re_col("b_moments"), im_col("b_moments")});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    const auto& s = *pt.sym;
    w.row({pt.info.value, indicators[i], err.fst[i], err.moments[i], std::abs(indicators[i] - err.moments[i]),
           value_or_nan(s.printed), value_or_nan(s.indicator_a), pt.info.params.g, pt.info.params.e_a,
           s.pump.alpha.real(), s.pump.alpha.imag(), s.pump.residual, pt.has_full ? pt.b_full.real() : nan,
           pt.has_full ? pt.b_full.imag() : nan, s.b_mft.real(), s.b_mft.imag(), s.b_moments.real(),
           s.b_moments.imag()});
  }
}

void write_custom(const ExperimentConfig& cfg, const std::vector<SteadyPoint>& points,
                  const std::filesystem::path& dir, const std::string& file) {
  std::vector<double> ind_a, ind_b;
  for (const auto& pt : points) {
    ind_a.push_back(value_or_nan(pt.asym->indicator));
    ind_b.push_back(value_or_nan(pt.sym->indicator_b));
  }
  const ErrorColumns err_a = error_columns(
      points, ind_a, [](const SteadyPoint& pt) { return pt.a_full; },
      [](const SteadyPoint& pt) { return pt.asym->a_mft; }, [](const SteadyPoint& pt) { return pt.asym->a_moments; });
  const ErrorColumns err_b = error_columns(
      points, ind_b, [](const SteadyPoint& pt) { return pt.b_full; },
      [](const SteadyPoint& pt) { return pt.sym->b_mft; }, [](const SteadyPoint& pt) { return pt.sym->b_moments; });
  auto os = open_output(dir / file);
  CsvWriter w(os, {cfg.sweep.name, "g", "E_a", "E_b", "kappa_a", "kappa_b", "kappa_c", re_col("alpha_asym"),
                   im_col("alpha_asym"), re_col("alpha_sym"), im_col("alpha_sym"), "G_abs", "gamma1", "gamma2",
                   "delta", "I1_a", "I1_a_closed_form", "I2_a", "I2_b", "I2_b_printed", re_col("a_FST"),
                   im_col("a_FST"), re_col("b_FST"), im_col("b_FST"), "relerr_a_FST", "relerr_a_moments",
                   "relerr_b_FST", "relerr_b_moments"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    const auto& p = pt.info.params;
    const auto& r = *pt.rates;
    w.row({pt.info.value, p.g, p.e_a, p.e_b, p.kappa_a, p.kappa_b, p.kappa_c, pt.asym->alpha.real(),
           pt.asym->alpha.imag(), pt.sym->pump.alpha.real(), pt.sym->pump.alpha.imag(), std::abs(r.coupling),
           r.gamma1, r.gamma2, r.delta, ind_a[i], value_or_nan(pt.asym->closed_form),
           value_or_nan(pt.sym->indicator_a), ind_b[i], value_or_nan(pt.sym->printed),
           pt.has_full ? pt.a_full.real() : nan, pt.has_full ? pt.a_full.imag() : nan,
           pt.has_full ? pt.b_full.real() : nan, pt.has_full ? pt.b_full.imag() : nan, err_a.fst[i], err_a.moments[i],
           err_b.fst[i], err_b.moments[i]});
  }
}

// ------------------------------------------------------------ defaults

sfg::Params unit_kappa_params() {
  sfg::Params p;
  p.kappa_a = p.kappa_b = p.kappa_c = 2.0;
  p.e_b = 0.1;
  p.initial_b = 0;
  return p;
}

const std::map<std::string, IntegrationMethod>& method_names() {
  static const std::map<std::string, IntegrationMethod> names{{"rk4", IntegrationMethod::RK4},
                                                              {"dopri5", IntegrationMethod::DormandPrince}};
  return names;
}

std::string method_name(IntegrationMethod m) { return m == IntegrationMethod::RK4 ? "rk4" : "dopri5"; }

}  // namespace

// ------------------------------------------------------------- catalog

const std::vector<ExperimentInfo>& catalog() {
  static const std::vector<ExperimentInfo> list{
      {Experiment::Fig1, "fig1", "full-model N_b(t) traces vs the analytic decay and shift, with fitted rates"},
      {Experiment::Fig2a, "fig2a", "asymmetric first-order indicator vs relative errors along fixed |G|, swept E_a"},
      {Experiment::Fig2b, "fig2b", "asymmetric first-order indicator vs relative errors at fixed E_a, swept g"},
      {Experiment::Fig3a, "fig3a", "symmetric second-order indicator vs relative errors, swept E_a"},
      {Experiment::Fig3b, "fig3b", "symmetric second-order indicator vs relative errors, swept g"},
      {Experiment::CustomSweep, "custom-sweep", "rates, indicators and full-model means along any parameter"},
  };
  return list;
}

std::string to_string(Experiment e) {
  for (const auto& info : catalog()) {
    if (info.id == e) return info.name;
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
  for (const auto& info : catalog()) {
    if (info.name == name) return info.id;
  }
  return std::nullopt;
}

std::string code_version() { return MFPT_LAB_VERSION; }

// --------------------------------------------------------------- sweep

std::vector<double> SweepAxis::values() const {
  std::vector<double> out(points);
  if (points == 0) return out;
  if (points == 1) {
    out[0] = min;
    return out;
  }
  const double n = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / n;
    out[i] = spacing == Spacing::Log ? std::exp(std::log(min) + f * (std::log(max) - std::log(min)))
                                     : min + f * (max - min);
  }
  out.front() = min;
  out.back() = max;
  return out;
}

// -------------------------------------------------------------- config

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.output_dir = "out/" + to_string(e);
  switch (e) {
    case Experiment::Fig1:
      c.params = sfg::Params{};  // kappa_a = 20, E_a = 20, g = 0.5, kappa_b = kappa_c = 0, |1>_b
      c.sweep = {"g", 0.25, 1.0, 3, Spacing::Log};
      c.fixed_coupling = true;
      c.coupling = 1.0;
      break;
    case Experiment::Fig2a:
      c.params = unit_kappa_params();
      c.params.e_a = 2.0;
      c.params.g = 0.5;
      c.sweep = {"E_a", 0.5, 10.0, 25, Spacing::Log};
      c.fixed_coupling = true;
      c.coupling = 1.0;
      break;
    case Experiment::Fig2b:
      c.params = unit_kappa_params();
      c.params.e_a = 2.0;
      c.sweep = {"g", 0.1, 2.0, 20, Spacing::Linear};
      break;
    case Experiment::Fig3a:
      c.params = unit_kappa_params();
      c.params.g = 1.0;
      c.sweep = {"E_a", 1.0, 10.0, 19, Spacing::Linear};
      break;
    case Experiment::Fig3b:
      c.params = unit_kappa_params();
      c.params.e_a = 4.0;
      c.sweep = {"g", 0.1, 2.0, 20, Spacing::Linear};
      break;
    case Experiment::CustomSweep:
      c.params = unit_kappa_params();
      c.params.e_a = 2.0;
      c.sweep = {"g", 0.1, 1.0, 10, Spacing::Linear};
      break;
  }
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"experiment", "params", "sweep", "output_dir", "integrator", "convention", "jobs",
                         "fixed_coupling", "coupling", "moments_order", "trace_samples", "run_full_model"});
  if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
  if (!j.at("experiment").is_string()) throw ConfigError("experiment", "must be a string");
  const auto e = experiment_from_string(j.at("experiment").get<std::string>());
  if (!e) throw ConfigError("experiment", "unknown experiment '" + j.at("experiment").get<std::string>() + "'");
  ExperimentConfig c = default_config(*e);

  if (j.contains("params")) {
    const json& p = require_object(j.at("params"), "params");
    reject_unknown(p, "params",
                   {"g", "E_a", "E_b", "kappa_a", "kappa_b", "kappa_c", "dim_a", "dim_b", "dim_c", "initial_b"});
    read_number(p, "g", "params.", c.params.g);
    read_number(p, "E_a", "params.", c.params.e_a);
    read_number(p, "E_b", "params.", c.params.e_b);
    read_number(p, "kappa_a", "params.", c.params.kappa_a);
    read_number(p, "kappa_b", "params.", c.params.kappa_b);
    read_number(p, "kappa_c", "params.", c.params.kappa_c);
    read_count(p, "dim_a", "params.", c.params.dim_a);
    read_count(p, "dim_b", "params.", c.params.dim_b);
    read_count(p, "dim_c", "params.", c.params.dim_c);
    read_count(p, "initial_b", "params.", c.params.initial_b);
  }
  if (j.contains("sweep")) {
    const json& s = require_object(j.at("sweep"), "sweep");
    reject_unknown(s, "sweep", {"name", "min", "max", "points", "spacing"});
    read_string(s, "name", "sweep.", c.sweep.name);
    read_number(s, "min", "sweep.", c.sweep.min);
    read_number(s, "max", "sweep.", c.sweep.max);
    read_count(s, "points", "sweep.", c.sweep.points);
    std::string spacing = c.sweep.spacing == Spacing::Log ? "log" : "linear";
    read_string(s, "spacing", "sweep.", spacing);
    if (spacing == "log") {
      c.sweep.spacing = Spacing::Log;
    } else if (spacing == "linear") {
      c.sweep.spacing = Spacing::Linear;
    } else {
      throw ConfigError("sweep.spacing", "must be 'linear' or 'log'");
    }
  }
  read_string(j, "output_dir", "", c.output_dir);
  if (j.contains("integrator")) {
    const json& s = require_object(j.at("integrator"), "integrator");
    reject_unknown(s, "integrator", {"method", "dt", "abs_tol", "rel_tol", "min_step", "max_step"});
    std::string method = method_name(c.integrator.method);
    read_string(s, "method", "integrator.", method);
    const auto it = method_names().find(method);
    if (it == method_names().end()) throw ConfigError("integrator.method", "must be 'rk4' or 'dopri5'");
    c.integrator.method = it->second;
    read_number(s, "dt", "integrator.", c.integrator.dt);
    read_number(s, "abs_tol", "integrator.", c.integrator.abs_tol);
    read_number(s, "rel_tol", "integrator.", c.integrator.rel_tol);
    read_number(s, "min_step", "integrator.", c.integrator.min_step);
    read_number(s, "max_step", "integrator.", c.integrator.max_step);
  }
  if (j.contains("convention")) {
    std::string conv;
    read_string(j, "convention", "", conv);
    if (conv == "half") {
      c.params.convention = DissipatorConvention::HalfKappa;
    } else if (conv == "full") {
      c.params.convention = DissipatorConvention::FullKappa;
    } else {
      throw ConfigError("convention", "must be 'half' or 'full'");
    }
  }
  read_count(j, "jobs", "", c.jobs);
  read_bool(j, "fixed_coupling", "", c.fixed_coupling);
  read_number(j, "coupling", "", c.coupling);
  read_count(j, "moments_order", "", c.moments_order);
  read_count(j, "trace_samples", "", c.trace_samples);
  read_bool(j, "run_full_model", "", c.run_full_model);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["params"] = {{"g", c.params.g},
                 {"E_a", c.params.e_a},
                 {"E_b", c.params.e_b},
                 {"kappa_a", c.params.kappa_a},
                 {"kappa_b", c.params.kappa_b},
                 {"kappa_c", c.params.kappa_c},
                 {"dim_a", c.params.dim_a},
                 {"dim_b", c.params.dim_b},
                 {"dim_c", c.params.dim_c},
                 {"initial_b", c.params.initial_b}};
  j["sweep"] = {{"name", c.sweep.name},
                {"min", c.sweep.min},
                {"max", c.sweep.max},
                {"points", c.sweep.points},
                {"spacing", c.sweep.spacing == Spacing::Log ? "log" : "linear"}};
  j["output_dir"] = c.output_dir;
  j["integrator"] = {{"method", method_name(c.integrator.method)},
                     {"dt", c.integrator.dt},
                     {"abs_tol", c.integrator.abs_tol},
                     {"rel_tol", c.integrator.rel_tol},
                     {"min_step", c.integrator.min_step},
                     {"max_step", c.integrator.max_step}};
  j["convention"] = convention_name(c.params.convention);
  j["jobs"] = c.jobs;
  j["fixed_coupling"] = c.fixed_coupling;
  j["coupling"] = c.coupling;
  j["moments_order"] = c.moments_order;
  j["trace_samples"] = c.trace_samples;
  j["run_full_model"] = c.run_full_model;
  return j;
}

bool same_run(const ExperimentConfig& l, const ExperimentConfig& r) {
  const auto& a = l.params;
  const auto& b = r.params;
  const auto& x = l.integrator;
  const auto& y = r.integrator;
  return l.experiment == r.experiment && a.g == b.g && a.e_a == b.e_a && a.e_b == b.e_b && a.kappa_a == b.kappa_a &&
         a.kappa_b == b.kappa_b && a.kappa_c == b.kappa_c && a.dim_a == b.dim_a && a.dim_b == b.dim_b &&
         a.dim_c == b.dim_c && a.initial_b == b.initial_b && a.convention == b.convention && l.sweep == r.sweep &&
         l.output_dir == r.output_dir && x.method == y.method && x.dt == y.dt && x.abs_tol == y.abs_tol &&
         x.rel_tol == y.rel_tol && x.min_step == y.min_step && x.max_step == y.max_step && l.jobs == r.jobs &&
         l.fixed_coupling == r.fixed_coupling && l.coupling == r.coupling && l.moments_order == r.moments_order &&
         l.trace_samples == r.trace_samples && l.run_full_model == r.run_full_model;
}

sfg::Params point_params(const ExperimentConfig& cfg, double value) {
  sfg::Params p = cfg.params;
  double* target = axis_target(p, cfg.sweep.name);
  if (!target) throw ConfigError("sweep.name", "unknown parameter '" + cfg.sweep.name + "'");
  *target = value;
  if (cfg.fixed_coupling) {
    // |G| = g |E_a| / w_a for the free pump amplitude -i E_a / w_a.
    const double w = p.weight_a();
    if (cfg.sweep.name == "E_a") {
      p.g = std::abs(p.e_a) > 0.0 ? cfg.coupling * w / std::abs(p.e_a) : std::numeric_limits<double>::infinity();
    } else {
      p.e_a = p.g > 0.0 ? cfg.coupling * w / p.g : std::numeric_limits<double>::infinity();
    }
  }
  return p;
}

void validate(const ExperimentConfig& c) {
  const SweepAxis& s = c.sweep;
  if (!axis_target(const_cast<sfg::Params&>(c.params), s.name)) {
    throw ConfigError("sweep.name", "unknown parameter '" + s.name + "'");
  }
  if (s.points < 2) throw ConfigError("sweep.points", "must be at least 2");
  if (!std::isfinite(s.min) || !std::isfinite(s.max)) throw ConfigError("sweep", "endpoints must be finite");
  if (!(s.min < s.max)) throw ConfigError("sweep.max", "must exceed sweep.min (empty sweep)");
  if (s.spacing == Spacing::Log && !(s.min > 0.0)) throw ConfigError("sweep.min", "must be positive for log spacing");
  if (c.jobs < 1) throw ConfigError("jobs", "must be at least 1");
  if (c.fixed_coupling && !(c.coupling > 0.0 && std::isfinite(c.coupling))) {
    throw ConfigError("coupling", "must be positive when fixed_coupling is set");
  }
  if (c.fixed_coupling && !(c.params.kappa_a > 0.0)) {
    throw ConfigError("params.kappa_a", "must be positive when fixed_coupling is set");
  }
  if (c.trace_samples < 3) throw ConfigError("trace_samples", "must be at least 3");
  try {
    c.integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("integrator", e.what());
  }
  const bool asym = c.experiment == Experiment::Fig2a || c.experiment == Experiment::Fig2b ||
                    c.experiment == Experiment::CustomSweep;
  const bool sym = c.experiment == Experiment::Fig3a || c.experiment == Experiment::Fig3b ||
                   c.experiment == Experiment::CustomSweep;
  if (asym && (c.moments_order < 1 || c.moments_order > 3)) {
    throw ConfigError("moments_order", "must lie in [1, 3] for first-order indicators");
  }
  if (sym && (c.moments_order < 2 || c.moments_order > 3)) {
    throw ConfigError("moments_order", "must lie in [2, 3] for second-order indicators");
  }
  if (c.experiment == Experiment::Fig1 && c.params.initial_b != 1) {
    throw ConfigError("params.initial_b", "fig1 compares against the single-photon population formula; must be 1");
  }
  if (!c.run_full_model && c.experiment != Experiment::CustomSweep) {
    throw ConfigError("run_full_model", "may only be disabled for custom-sweep");
  }
  for (double v : s.values()) {
    sfg::Params p;
    try {
      p = point_params(c, v);
      p.validate();
    } catch (const std::invalid_argument& e) {
      rethrow_params_error(e, "params.");
    }
    if (!std::isfinite(p.g) || !std::isfinite(p.e_a)) {
      throw ConfigError("sweep", "fixed coupling needs a nonzero swept value (got " + format_number(v) + ")");
    }
    if (c.experiment != Experiment::Fig1 && !(p.kappa_a > 0.0)) {
      throw ConfigError("params.kappa_a", "must be positive for a steady pump");
    }
  }
}

// -------------------------------------------------------------- compare

std::vector<RelativeErrorRecord> compare(const std::vector<double>& full_grid, const std::vector<cplx>& full,
                                         const std::vector<double>& mft_grid, const std::vector<cplx>& mft,
                                         const std::vector<double>& indicators) {
  if (full_grid.size() != full.size() || mft_grid.size() != mft.size() || indicators.size() != full.size()) {
    throw std::invalid_argument("compare: series and grids differ in length");
  }
  if (full_grid.size() != mft_grid.size()) throw std::invalid_argument("compare: sweep grids differ in length");
  std::vector<RelativeErrorRecord> out;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double scale = std::max({1.0, std::abs(full_grid[i]), std::abs(mft_grid[i])});
    if (std::abs(full_grid[i] - mft_grid[i]) > 1e-12 * scale) {
      throw std::invalid_argument("compare: sweep grids differ at index " + std::to_string(i));
    }
    RelativeErrorRecord r;
    r.sweep_value = full_grid[i];
    r.full = full[i];
    r.mft = mft[i];
    r.relative_error = ratio(full[i] - mft[i], mft[i]);
    r.indicator = indicators[i];
    out.push_back(r);
  }
  return out;
}

// ------------------------------------------------------------------ run

RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const std::vector<double> grid = cfg.sweep.values();
  RunResult result;
  std::vector<PointInfo> infos;

  if (cfg.experiment == Experiment::Fig1) {
    std::vector<Fig1Point> points(grid.size());
    parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) { points[i] = run_fig1_point(cfg, grid[i]); });
    write_fig1(cfg, points, dir, result);
    for (const auto& pt : points) infos.push_back(pt.info);
  } else {
    const bool asym = cfg.experiment == Experiment::Fig2a || cfg.experiment == Experiment::Fig2b ||
                      cfg.experiment == Experiment::CustomSweep;
    const bool sym = cfg.experiment == Experiment::Fig3a || cfg.experiment == Experiment::Fig3b ||
                     cfg.experiment == Experiment::CustomSweep;
    std::vector<SteadyPoint> points(grid.size());
    parallel_for(grid.size(), cfg.jobs,
                 [&](std::size_t i) { points[i] = run_steady_point(cfg, grid[i], asym, sym, cfg.run_full_model); });
    const std::string file = cfg.experiment == Experiment::CustomSweep ? "custom_sweep.csv"
                                                                       : to_string(cfg.experiment) + ".csv";
    if (cfg.experiment == Experiment::CustomSweep) {
      write_custom(cfg, points, dir, file);
    } else if (asym) {
      write_fig2(cfg, points, dir, file);
    } else {
      write_fig3(cfg, points, dir, file);
    }
    result.files = {file};
    for (const auto& pt : points) infos.push_back(pt.info);
  }

  json manifest;
  manifest["tool"] = "mfpt-lab";
  manifest["code_version"] = code_version();
  manifest["experiment"] = to_string(cfg.experiment);
  manifest["config"] = config_to_json(cfg);
  manifest["convention"] = {{"name", convention_name(cfg.params.convention)},
                            {"dissipator_weight", cfg.params.convention == DissipatorConvention::HalfKappa
                                                      ? "kappa/2"
                                                      : "kappa"}};
  manifest["tolerances"] = {{"truncation_warning_level", kTruncationWarningLevel},
                            {"stationary_direct_limit", kDirectStationaryLimit},
                            {"stationary_tolerance", StationaryOptions{}.tolerance},
                            {"moment_max_condition", MomentOptions{}.max_condition},
                            {"moment_residual", MomentOptions{}.residual_tolerance},
                            {"moment_max_degree", MomentOptions{}.max_degree}};
  manifest["references"] = {
      {"FST", "full-model Fock-state truncation (time evolution for fig1, steady state in the displaced pump frame "
              "otherwise)"},
      {"moments", "perturbative moment hierarchy summed to moments_order; stands in for the cluster-expansion "
                  "reference"}};
  json points = json::array();
  for (const auto& info : infos) {
    points.push_back(point_json(info, cfg.sweep.name));
    for (const auto& w : info.warnings) {
      result.warnings.push_back(cfg.sweep.name + "=" + format_number(info.value) + ": " + w);
    }
  }
  manifest["points"] = points;
  manifest["warnings"] = result.warnings;
  manifest["files"] = result.files;
  {
    auto os = open_output(dir / "manifest.json");
    os << manifest.dump(2) << '\n';
  }
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace mfpt::experiments
