#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <locale>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "weakmass/report.hpp"
#include "weakmass/weakmass.hpp"

using namespace weakmass;
using json = nlohmann::ordered_json;

namespace {

// Config keys that can also be given as --flag (underscores become dashes).
const std::vector<std::string> kConfigKeys = {
    "preset", "t_coupling", "g0",     "omega_k_t", "eta",        "n_max",     "selected", "yz_term",
    "alpha",  "beta",       "theta",  "omega_t",   "aw_target",  "aw_real",   "aw_imag",  "trials",
    "n_atoms", "xi_s",      "xi_d",   "dark_rate", "seed",       "count_model", "classes"};

struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool shot_noise = false;
  CLI::Option* shot_flag = nullptr;
  std::string out;
  std::string summary;
};

void add_config_options(CLI::App& app, ConfigOptions& o) {
  app.add_option("--config", o.config_path, "key = value run configuration file")->check(CLI::ExistingFile);
  for (const auto& key : kConfigKeys) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    o.options[key] = app.add_option(flag, o.values[key], "overrides config key '" + key + "'");
  }
  o.shot_flag = app.add_flag("--shot-noise", o.shot_noise, "Poisson partitioning of atoms over classes");
  app.add_option("--out", o.out, "CSV output path (default: stdout)");
  app.add_option("--summary", o.summary, "summary JSON path (default: next to --out, else stderr)");
}

RunConfig build_config(const ConfigOptions& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file '" + o.config_path + "'");
    c = parse_config(in);
  }
  for (const auto& key : kConfigKeys) {
    if (o.options.at(key)->count() > 0) set_config_key(c, key, o.values.at(key));
  }
  if (o.shot_flag->count() > 0) c.shot_noise = o.shot_noise;
  if (!o.out.empty()) c.out_csv = o.out;
  if (!o.summary.empty()) c.out_json = o.summary;
  return c;
}

std::string summary_path(const std::string& csv, const std::string& json_path) {
  if (!json_path.empty()) return json_path;
  if (csv.empty()) return {};
  const auto dot = csv.find_last_of('.');
  const auto slash = csv.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv.substr(0, dot) : csv) + ".json";
}

template <typename Writer>
void emit(const std::string& path, Writer&& writer) {
  if (path.empty()) {
    std::cout.imbue(std::locale::classic());
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.imbue(std::locale::classic());
  writer(out);
  if (!out) throw Error("write failed for '" + path + "'");
}

void emit_summary(const std::string& csv, const std::string& json_path, const json& j) {
  const std::string path = summary_path(csv, json_path);
  if (path.empty()) {
    std::cerr << j.dump(2) << '\n';
    return;
  }
  emit(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------

int run_simulate(const ConfigOptions& o, unsigned threads) {
  const RunConfig c = build_config(o);
  const PipelineResult r = run_pipeline(c, threads);
  print_warnings(r.warnings);
  emit(c.out_csv, [&](std::ostream& out) { write_class_table(out, r); });
  emit_summary(c.out_csv, c.out_json, to_json(r));
  return r.exit_code;
}

int run_sweep(const ConfigOptions& o, const std::string& param, const std::string& values, unsigned threads) {
  const RunConfig base = build_config(o);
  const std::vector<double> points = parse_real_list(values);
  if (points.empty()) throw ConfigError("--values is empty");
  std::vector<RunConfig> configs(points.size(), base);
  for (std::size_t i = 0; i < points.size(); ++i) set_config_key(configs[i], param, format_real(points[i]));
  for (const auto& c : configs) c.validate();

  std::vector<PipelineResult> results(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { results[i] = run_pipeline(configs[i], 1); });

  int exit_code = kExitOk;
  json summary;
  summary["param"] = param;
  summary["points"] = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    print_warnings(results[i].warnings);
    exit_code = std::max(exit_code, results[i].exit_code);
    json point = to_json(results[i]);
    point["value"] = points[i];
    summary["points"].push_back(point);
  }
  emit(base.out_csv, [&](std::ostream& out) {
    out << param << ",n,P_n_first_order,P_n_exact,relative_shift\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (const auto& row : results[i].rows) {
        out << format_real(points[i]) << ',' << row.n << ',' << format_real(row.p_first_order) << ','
            << format_real(row.p_exact) << ',' << format_real(row.relative_shift) << '\n';
      }
    }
  });
  emit_summary(base.out_csv, base.out_json, summary);
  return exit_code;
}

int run_kd_spectrum(double eta, int n_max, const std::string& out) {
  const KDParams params{.eta = eta, .n_max = n_max};
  if (eta < 0.0) throw ConfigError("eta must be non-negative");
  emit(out, [&](std::ostream& s) { write_csv(s, bessel_spectrum(params)); });
  return kExitOk;
}

int run_validate_dyson(const std::string& g0_list, const std::string& out, const std::string& summary,
                       unsigned threads) {
  const std::vector<double> g0s = parse_real_list(g0_list);
  if (g0s.size() < 2) throw ConfigError("--g0-list needs at least two values");
  for (double g : g0s) {
    if (!(g > 0.0)) throw ConfigError("--g0-list values must be positive");
  }
  std::vector<ConvergencePoint> points(g0s.size());
  const DysonSetup setup;
  parallel_for(g0s.size(), threads, [&](std::size_t i) {
    points[i] = dyson_convergence(setup, std::span<const double>(&g0s[i], 1)).front();
  });
  std::vector<double> errs;
  for (const auto& p : points) errs.push_back(p.l2_error);
  emit(out, [&](std::ostream& s) {
    s << "g0,L2_error\n";
    for (const auto& p : points) s << format_real(p.g0) << ',' << format_real(p.l2_error) << '\n';
  });
  json j;
  j["loglog_slope"] = loglog_slope(g0s, errs);
  j["n_points"] = setup.n_points;
  j["n_steps"] = setup.n_steps;
  emit_summary(out, summary, j);
  return kExitOk;
}

int run_validate_bch(const std::string& out, const std::string& summary) {
  const BchReport r = bch_check({});
  emit(out, [&](std::ostream& s) {
    s << "n_steps,richardson_change,max_deviation,closure_residual\n";
    s << r.n_steps << ',' << format_real(r.richardson_change) << ',' << format_real(r.max_deviation) << ','
      << format_real(r.closure_residual) << '\n';
  });
  json j;
  j["max_deviation"] = r.max_deviation;
  j["richardson_change"] = r.richardson_change;
  j["n_steps"] = r.n_steps;
  j["closure_residual"] = r.closure_residual;
  emit_summary(out, summary, j);
  return kExitOk;
}

int run_validate_oracle(double g0, const std::string& out, const std::string& summary) {
  GridOracleSetup setup;
  setup.g0 = g0;
  const GridOracleReport r = grid_vs_oracle(setup);
  emit(out, [&](std::ostream& s) {
    s << "n,P_n_grid,P_n_oracle,abs_diff\n";
    for (std::size_t i = 0; i < r.classes.size(); ++i) {
      s << r.classes[i] << ',' << format_real(r.grid_probability[i]) << ',' << format_real(r.oracle_probability[i])
        << ',' << format_real(std::abs(r.grid_probability[i] - r.oracle_probability[i])) << '\n';
    }
  });
  json j;
  j["max_abs_diff"] = r.max_abs_diff;
  j["hbar_k_over_sigma"] = r.hbar_k_over_sigma;
  j["n_points"] = setup.n_points;
  emit_summary(out, summary, j);
  return kExitOk;
}

// Defaults to the headline calcium configuration when no groups are given.
int run_noise_mc(const ConfigOptions& o, unsigned threads) {
  RunConfig c = build_config(o);
  if (!c.preset && !c.explicit_groups()) {
    c.preset = "calcium";
    if (!c.alpha && !c.beta && !c.theta && !c.omega_t && !c.aw_target && !c.aw_real && !c.aw_imag) c.aw_target = 1e4;
  }
  if (c.trials == 0) c.trials = 1000;
  if (c.classes.empty()) c.classes = {0, 5, 10};
  const PipelineResult r = run_pipeline(c, threads);
  print_warnings(r.warnings);
  emit(c.out_csv, [&](std::ostream& s) { write_counts_csv(s, r.counts); });
  json j;
  if (r.estimate) {
    j["g0_hat"] = r.estimate->g0_hat;
    j["stderr"] = r.estimate->std_error;
    j["z_score"] = finite_or_null(r.estimate->z_score);
    j["detectability"] = r.estimate->detectable;
    j["reference_class"] = r.estimate->reference_class;
  } else {
    j["g0_hat"] = nullptr;
    j["stderr"] = nullptr;
    j["detectability"] = false;
  }
  j["g0_true"] = r.groups.g0;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["weak_value_im"] = finite_or_null(r.internal.weak_value.im);
  j["exit_code"] = r.exit_code;
  emit_summary(c.out_csv, c.out_json, j);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-measurement simulation of the mass-energy coupling of a two-level atom"};
  app.require_subcommand(1);

  ConfigOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "run the measurement pipeline and print the class table");
  add_config_options(*simulate, sim_opts);

  ConfigOptions sweep_opts;
  std::string sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "run the pipeline over a list of values of one config key");
  add_config_options(*sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "config key to vary")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();

  double kd_eta = 0.0;
  int kd_n_max = -1;
  std::string kd_out;
  auto* kd = app.add_subcommand("kd-spectrum", "Kapitza-Dirac class amplitudes i^n J_n(eta)");
  kd->add_option("--eta", kd_eta, "pulse area")->required();
  kd->add_option("--n-max", kd_n_max, "truncation (default: Bessel tail < 1e-12)");
  kd->add_option("--out", kd_out, "CSV output path (default: stdout)");

  auto* validate = app.add_subcommand("validate", "numerical cross-checks");
  validate->require_subcommand(1);
  std::string dyson_list = "1e-2,1e-3,1e-4", dyson_out, dyson_summary;
  auto* dyson = validate->add_subcommand("dyson", "first-order Dyson state against split-step evolution");
  dyson->add_option("--g0-list", dyson_list, "comma-separated g0 values");
  dyson->add_option("--out", dyson_out, "CSV output path (default: stdout)");
  dyson->add_option("--summary", dyson_summary, "summary JSON path");
  std::string bch_out, bch_summary;
  auto* bch = validate->add_subcommand("bch", "interaction-picture coupling against its coefficient form");
  bch->add_option("--out", bch_out, "CSV output path (default: stdout)");
  bch->add_option("--summary", bch_summary, "summary JSON path");
  double oracle_g0 = 1e-3;
  std::string oracle_out, oracle_summary;
  auto* oracle = validate->add_subcommand("oracle", "grid pipeline against the closed-form class oracle");
  oracle->add_option("--g0", oracle_g0, "coupling used on the grid");
  oracle->add_option("--out", oracle_out, "CSV output path (default: stdout)");
  oracle->add_option("--summary", oracle_summary, "summary JSON path");

  ConfigOptions mc_opts;
  auto* noise_mc = app.add_subcommand("noise-mc", "Monte Carlo atom counting and g0 recovery");
  add_config_options(*noise_mc, mc_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  const unsigned threads = thread_count_from_env();
  try {
    if (*simulate) return run_simulate(sim_opts, threads);
    if (*sweep) return run_sweep(sweep_opts, sweep_param, sweep_values, threads);
    if (*kd) return run_kd_spectrum(kd_eta, kd_n_max, kd_out);
    if (*dyson) return run_validate_dyson(dyson_list, dyson_out, dyson_summary, threads);
    if (*bch) return run_validate_bch(bch_out, bch_summary);
    if (*oracle) return run_validate_oracle(oracle_g0, oracle_out, oracle_summary);
    if (*noise_mc) return run_noise_mc(mc_opts, threads);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
