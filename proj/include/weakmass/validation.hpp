#pragma once

// Cross-checks between independent computational routes: the grid pipeline
// against the closed-form class oracle, the first-order Dyson state against
// split-step evolution, and the interaction-picture coupling against its
// coefficient form.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "weakmass/dynamics.hpp"
#include "weakmass/hilbert.hpp"
#include "weakmass/kd.hpp"
#include "weakmass/weakmeas.hpp"

namespace weakmass {

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("slope fit needs at least two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Probability in the momentum window |p - 2 n k| < k of a momentum-space packet.
inline double class_probability(const WavePacket& momentum_packet, int n, double k = 1.0) {
  const Grid1D& grid = momentum_packet.grid();
  double sum = 0.0;
  const double centre = 2.0 * n * k;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    if (std::abs(grid.value(i) - centre) < k) sum += std::norm(momentum_packet[i]);
  }
  return sum * grid.spacing();
}

struct GridOracleSetup {
  std::size_t n_points = 4096;
  double spacing = 80.0 * std::numbers::pi / 4096.0;  // whole number of KD periods
  double delta = 15.0;  // hbar k / sigma = 2 delta k = 30
  double eta = 10.0;
  double g0 = 1e-3;
  double t = 1.0;
  double omega_t = 1.5 * std::numbers::pi + 0.5;
  QubitState initial = amplification_qubit();
  PostSelection selection{kAmplificationTheta, Selected::g};
  int n_report = 15;
};

struct GridOracleReport {
  std::vector<int> classes;
  std::vector<double> grid_probability;
  std::vector<double> oracle_probability;
  double max_abs_diff = 0.0;
  double hbar_k_over_sigma = 0.0;
};

// KD-prepared Gaussian, exact x evolution on the momentum grid, post-selection,
// class windows; compared with exact_class_oracle (omega_k = 4 for k = 1).
inline GridOracleReport grid_vs_oracle(const GridOracleSetup& s) {
  const Grid1D grid = Grid1D::position(s.n_points, s.spacing);
  const KDParams kd{.eta = s.eta};
  const WavePacket prepared = apply_kd_phase(make_gaussian(grid, s.delta, 0.0, 0.0), kd);
  const JointState joint = in_momentum(JointState::product(s.initial, prepared));
  const JointState evolved = evolve_exact_x(joint, {.g0 = s.g0, .omega_t = s.omega_t, .gbar = 0.0, .t = s.t});
  const WavePacket selected = postselect(evolved, s.selection);
  const MomentumClassDistribution oracle =
      exact_class_oracle(s.initial, s.selection, s.g0, s.omega_t, 4.0, s.t, bessel_spectrum(kd));

  GridOracleReport report;
  report.hbar_k_over_sigma = 2.0 * s.delta;
  for (int n = -s.n_report; n <= s.n_report; ++n) {
    const double on_grid = class_probability(selected, n);
    const double closed = oracle.prob(n);
    report.classes.push_back(n);
    report.grid_probability.push_back(on_grid);
    report.oracle_probability.push_back(closed);
    report.max_abs_diff = std::max(report.max_abs_diff, std::abs(on_grid - closed));
  }
  return report;
}

struct DysonSetup {
  std::size_t n_points = 1024;
  double spacing = 0.04;
  double delta = 1.0;
  double z0 = 0.0;
  double p0 = 0.0;
  double gbar = 1.0;
  double t = 1.0;
  double omega_t = 0.3;
  int n_steps = 2000;
  QubitState initial = amplification_qubit();
};

struct ConvergencePoint {
  double g0;
  double l2_error;
};

// L2 distance between the first-order Dyson state and split-step evolution.
inline std::vector<ConvergencePoint> dyson_convergence(const DysonSetup& s, std::span<const double> g0_list) {
  const Grid1D grid = Grid1D::position(s.n_points, s.spacing);
  const JointState initial = JointState::product(s.initial, make_gaussian(grid, s.delta, s.z0, s.p0));
  std::vector<ConvergencePoint> out;
  for (double g0 : g0_list) {
    const CouplingParams params{.g0 = g0, .omega_t = s.omega_t, .gbar = s.gbar, .t = s.t};
    const JointState exact = evolve_split_step_z(initial, params, {.n_steps = s.n_steps});
    const JointState first = dyson_first_order(initial, params, s.n_steps);
    out.push_back({g0, l2_distance(exact, first)});
  }
  return out;
}

struct BchSetup {
  // Coarse enough that p^8 terms of the nested commutator stay well above roundoff.
  std::size_t n_points = 256;
  double spacing = 0.2;
  double delta = 1.0;
  double z0 = 0.0;
  double p0 = 0.5;
  double gbar = 1.0;
  double time_s = 1.0;
  int start_steps = 16;
  int max_steps = 1 << 16;
  double richardson_tolerance = 1e-8;
};

struct BchReport {
  int n_steps = 0;
  double richardson_change = 0.0;
  double max_deviation = 0.0;      // max |sandwich - coefficient form| over the grid
  double closure_residual = 0.0;   // ||[H0,[H0,[H0,H_zc]]] psi|| / ||H0^3 H_zc psi||
};

inline BchReport bch_check(const BchSetup& s) {
  const Grid1D grid = Grid1D::position(s.n_points, s.spacing);
  const WavePacket psi = make_gaussian(grid, s.delta, s.z0, s.p0);
  BchReport report;
  int n = s.start_steps;
  WavePacket current = bch_sandwich(psi, s.gbar, s.time_s, n);
  while (true) {
    WavePacket refined = bch_sandwich(psi, s.gbar, s.time_s, 2 * n);
    report.richardson_change = l2_distance(current, refined);
    n *= 2;
    current = std::move(refined);
    if (report.richardson_change < s.richardson_tolerance || n >= s.max_steps) break;
  }
  report.n_steps = n;
  const WavePacket closed = apply_coefficients(bch_transformed_zc({.gbar = s.gbar}, s.time_s), psi);
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    report.max_deviation = std::max(report.max_deviation, std::abs(current[i] - closed[i]));
  }

  // Third nested commutator with H0 = p^2/2 + gbar z.
  const ZcCoefficients h0{1.0, s.gbar, 0.0, 0.0};
  const ZcCoefficients hzc = hamiltonian_zc(s.gbar);
  using Op = std::function<WavePacket(const WavePacket&)>;
  const Op apply_h0 = [&](const WavePacket& w) { return apply_coefficients(h0, w); };
  auto commutator = [&](const Op& inner) -> Op {
    return [&, inner](const WavePacket& w) { return apply_h0(inner(w)) - inner(apply_h0(w)); };
  };
  const Op zc = [&](const WavePacket& w) { return apply_coefficients(hzc, w); };
  const Op c1 = commutator(zc);
  const Op c2 = commutator(c1);
  const Op c3 = commutator(c2);
  const double scale = std::sqrt(apply_h0(apply_h0(apply_h0(zc(psi)))).norm2());
  report.closure_residual = std::sqrt(c3(psi).norm2()) / scale;
  return report;
}

}  // namespace weakmass
