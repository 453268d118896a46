#pragma once

// End-to-end run of the measurement sequence: KD preparation, internal state
// preparation, the g0 coupling window, rotation + state-selective post-selection
// and atom counting. Probabilities use the closed forms; the grid propagators
// are exercised by the validation routines instead.

#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "weakmass/config.hpp"
#include "weakmass/detector.hpp"
#include "weakmass/kd.hpp"
#include "weakmass/weakmeas.hpp"

namespace weakmass {

enum ExitCode : int { kExitOk = 0, kExitConfigError = 2, kExitBreakdown = 3 };

struct InternalSetup {
  QubitState initial = QubitState::ground();
  PostSelection selection;
  double omega_t = 0.0;
  WeakValue weak_value;
  std::vector<std::string> warnings;
};

// Weak value from (alpha, beta, theta, omega_t) when any of them is given,
// otherwise from aw_target, otherwise from (aw_real, aw_imag).
inline InternalSetup resolve_internal(const RunConfig& c) {
  InternalSetup s;
  s.selection.selected = c.selected == "e" ? Selected::e : Selected::g;
  const bool rotation_path = c.alpha || c.beta || c.theta || c.omega_t;
  const bool direct = c.aw_real || c.aw_imag;
  if (rotation_path || c.aw_target) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    s.initial = QubitState(c.alpha.value_or(inv_sqrt2), c.beta.value_or(inv_sqrt2));
    s.selection.theta = c.theta.value_or(kAmplificationTheta);
    if (c.omega_t) {
      s.omega_t = *c.omega_t;
    } else if (c.aw_target) {
      const bool canonical = !c.alpha && !c.beta && !c.theta && s.selection.selected == Selected::g;
      if (canonical) {
        s.omega_t = omega_t_for_imaginary_weak_value(*c.aw_target);
      } else {
        auto root = solve_omega_t_for_imaginary_weak_value(s.initial, s.selection.theta, *c.aw_target);
        if (!root) throw ConfigError("no omega_t reaches Im A_w = " + format_real(*c.aw_target));
        s.omega_t = *root;
      }
    } else {
      throw ConfigError("rotation parameters need omega_t or aw_target");
    }
    s.weak_value = weak_value_for(s.initial, s.selection, s.omega_t);
    if (c.aw_target && std::abs(s.weak_value.im - *c.aw_target) > 1e-6 * std::max(1.0, std::abs(*c.aw_target))) {
      s.warnings.push_back("omega_t gives Im A_w = " + format_real(s.weak_value.im) + ", not aw_target");
    }
    if (direct) {
      const complex given(c.aw_real.value_or(0.0), c.aw_imag.value_or(0.0));
      if (std::abs(given - s.weak_value.value()) > 1e-9 * std::max(1.0, std::abs(given))) {
        s.warnings.push_back("aw_real/aw_imag disagree with the rotation parameters; using the rotation result");
      }
    }
    return s;
  }
  if (direct) {
    if (s.selection.selected != Selected::g) throw ConfigError("direct weak values are realized with selected = g");
    const auto r = realize_weak_value({c.aw_real.value_or(0.0), c.aw_imag.value_or(0.0)});
    s.initial = r.initial;
    s.selection.theta = r.theta;
    s.omega_t = r.omega_t;
    s.weak_value = weak_value_for(s.initial, s.selection, s.omega_t);
    return s;
  }
  throw ConfigError("no weak value specified (give omega_t, aw_target or aw_real/aw_imag)");
}

struct GroupSummary {
  double g0 = 0.0;
  double omega_k_t = 0.0;
  double g0_omega_k_t = 0.0;
  std::optional<DimensionlessGroups> physical;  // preset mode only
};

inline GroupSummary resolve_groups(const RunConfig& c, std::vector<std::string>& warnings) {
  GroupSummary g;
  if (c.preset) {
    const PhysicalPreset p = *find_preset(*c.preset);
    const DimensionlessGroups d = derive_groups(p, c.t_coupling.value_or(p.lifetime_s));
    if (d.exceeds_lifetime) warnings.push_back("coupling time exceeds the excited-state lifetime");
    g.g0 = d.g0;
    g.omega_k_t = d.omega_k_t;
    g.physical = d;
  } else {
    g.g0 = *c.g0;
    g.omega_k_t = *c.omega_k_t;
  }
  g.g0_omega_k_t = g.g0 * g.omega_k_t;
  return g;
}

struct ClassRow {
  int n = 0;
  double p_first_order = 0.0;
  double p_exact = 0.0;
  double relative_shift = 0.0;  // 1 - P_n^exact / (p_s0 J_n^2)
  std::optional<double> mean_counts;
};

struct PipelineResult {
  GroupSummary groups;
  InternalSetup internal;
  KDSpectrum spectrum{0, {complex(1.0, 0.0)}};
  MomentumClassDistribution first_order;
  MomentumClassDistribution exact;
  std::vector<ClassRow> rows;
  std::vector<CountRecord> counts;
  std::optional<G0Estimate> estimate;
  std::vector<std::string> warnings;
  int exit_code = kExitOk;
};

// Validation and resolution errors surface as ConfigError; a negative
// first-order P_n sets kExitBreakdown.
inline PipelineResult run_pipeline(const RunConfig& config, unsigned threads = 1) {
  config.validate();
  PipelineResult r;
  // (a) external preparation
  r.spectrum = bessel_spectrum({.eta = config.eta, .k_light = 1.0, .n_max = config.n_max});
  // (b) internal preparation and the matching post-selection (d)
  r.internal = resolve_internal(config);
  r.warnings = r.internal.warnings;
  // (c) coupling window; only omega_k t enters, split here as omega_k = 4, t = omega_k t / 4
  r.groups = resolve_groups(config, r.warnings);
  const double t_sim = r.groups.omega_k_t / kSimOmegaK;
  r.first_order = p_n_first_order(r.internal.weak_value, r.groups.g0, kSimOmegaK, t_sim, r.spectrum, config.yz_term);
  r.exact = exact_class_oracle(r.internal.initial, r.internal.selection, r.groups.g0, r.internal.omega_t, kSimOmegaK,
                               t_sim, r.spectrum);
  if (r.internal.weak_value.near_singular) r.warnings.push_back("post-selection is near-singular (p_s0 < 1e-10)");
  if (r.first_order.outside_validity) r.warnings.push_back("g0 omega_k t n_max^2 |Im A_w| >= 1: first order invalid");

  for (const auto& [n, p] : r.first_order.probs) {
    ClassRow row;
    row.n = n;
    row.p_first_order = p;
    row.p_exact = r.exact.prob(n);
    const double reference = r.exact.p_s0 * r.spectrum.weight(n);
    row.relative_shift = reference > 0.0 ? 1.0 - row.p_exact / reference : 0.0;
    r.rows.push_back(row);
  }

  // (e) detection
  if (config.trials > 0) {
    const NoiseModel noise{config.n_atoms, config.xi_s, config.xi_d, config.dark_rate, config.seed, config.shot_noise};
    const auto& source = config.count_model == "exact" ? r.exact : r.first_order;
    r.counts = simulate_counts(source, noise, config.classes, config.trials, threads);
    for (auto& row : r.rows) {
      double sum = 0.0;
      int count = 0;
      for (const auto& rec : r.counts) {
        if (rec.detector_n == row.n) {
          sum += rec.counts;
          ++count;
        }
      }
      if (count > 0) row.mean_counts = sum / count;
    }
    if (r.internal.weak_value.im != 0.0) {
      r.estimate = recover_g0(r.counts, r.internal.weak_value, kSimOmegaK, t_sim, r.spectrum);
    }
  }
  if (r.first_order.breakdown) {
    r.exit_code = kExitBreakdown;
    int worst = 0;
    for (const auto& [n, p] : r.first_order.probs) {
      if (p < r.first_order.prob(worst)) worst = n;
    }
    r.warnings.push_back("perturbative breakdown: first-order P_n < 0 (most negative at n = " + std::to_string(worst) +
                         ", P_n = " + format_real(r.first_order.prob(worst)) + ")");
  }
  return r;
}

inline void write_class_table(std::ostream& out, const PipelineResult& r) {
  const bool with_counts = !r.counts.empty();
  out << "n,P_n_first_order,P_n_exact,relative_shift" << (with_counts ? ",mean_counts" : "") << '\n';
  for (const auto& row : r.rows) {
    out << row.n << ',' << format_real(row.p_first_order) << ',' << format_real(row.p_exact) << ','
        << format_real(row.relative_shift);
    if (with_counts) out << ',' << (row.mean_counts ? format_real(*row.mean_counts) : std::string());
    out << '\n';
  }
}

inline void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "trial,n,counts\n";
  for (const auto& rec : records) out << rec.trial << ',' << rec.detector_n << ',' << format_real(rec.counts) << '\n';
}

}  // namespace weakmass
