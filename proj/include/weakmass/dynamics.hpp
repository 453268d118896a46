#pragma once

// Internal-state-dependent free evolution with the mass-energy coupling
//   H = omega |e><e| + (1 - g0 |e><e|) p^2/2 + (1 + g0 |e><e|) gbar z   (hbar = m = 1)
// Exact propagators (momentum-diagonal along x, split-step along z), the
// interaction-picture vertical coupling and the first-order Dyson state.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include "weakmass/errors.hpp"
#include "weakmass/hilbert.hpp"

namespace weakmass {

struct CouplingParams {
  double g0 = 0.0;       // hbar omega / (m c^2)
  double omega_t = 0.0;  // internal phase accumulated over the window, taken as given
  double gbar = 0.0;     // gravitational acceleration; 0 disables gravity
  double t = 0.0;        // coupling duration
};

inline constexpr double kPerturbativePhaseLimit = 0.1;

// True when g0 times the largest kinetic phase on the grid exceeds 0.1.
inline bool outside_perturbative_regime(const CouplingParams& params, const Grid1D& grid) {
  const Grid1D momentum = grid.axis() == AxisKind::momentum ? grid : grid.conjugate();
  const double p_max = std::abs(momentum.min_value());
  return params.g0 * 0.5 * p_max * p_max * std::abs(params.t) > kPerturbativePhaseLimit;
}

// ---------------------------------------------------------------------------
// Operator application on a single packet. Results stay in the input's
// representation.

inline WavePacket apply_kinetic(const WavePacket& packet) {
  const WavePacket out = in_momentum(packet).pointwise([](double p) { return 0.5 * p * p; });
  return packet.grid().axis() == AxisKind::momentum ? out : to_position(out);
}

inline WavePacket apply_momentum(const WavePacket& packet) {
  const WavePacket out = in_momentum(packet).pointwise([](double p) { return p; });
  return packet.grid().axis() == AxisKind::momentum ? out : to_position(out);
}

inline WavePacket apply_position(const WavePacket& packet) {
  const WavePacket out = in_position(packet).pointwise([](double z) { return z; });
  return packet.grid().axis() == AxisKind::position ? out : to_momentum(out);
}

// G = gbar z + gbar t p_z - (gbar t)^2 / 3, the gravity part of the effective
// first-order Hamiltonian.
struct EffectiveG {
  double gbar = 0.0;
  double t = 0.0;

  bool is_zero() const { return gbar == 0.0; }

  WavePacket apply(const WavePacket& packet) const {
    if (is_zero()) return WavePacket::zero(packet.grid());
    const double gt = gbar * t;
    return apply_position(packet).scaled(gbar) + apply_momentum(packet).scaled(gt) +
           packet.scaled(-gt * gt / 3.0);
  }
};

// Coefficients of an operator c_kin p^2/2 + c_z z + c_pz p + c_const acting on
// the |e><e| sector.
struct ZcCoefficients {
  double c_kin = 0.0;
  double c_z = 0.0;
  double c_pz = 0.0;
  double c_const = 0.0;
};

inline WavePacket apply_coefficients(const ZcCoefficients& c, const WavePacket& packet) {
  WavePacket out = apply_kinetic(packet).scaled(c.c_kin);
  if (c.c_z != 0.0) out = out + apply_position(packet).scaled(c.c_z);
  if (c.c_pz != 0.0) out = out + apply_momentum(packet).scaled(c.c_pz);
  if (c.c_const != 0.0) out = out + packet.scaled(c.c_const);
  return out;
}

// H_zc = p_z^2/2 - gbar z.
inline ZcCoefficients hamiltonian_zc(double gbar) { return {1.0, -gbar, 0.0, 0.0}; }

// e^{i H0 s} H_zc e^{-i H0 s} with H0 = p^2/2 + gbar z. The nested commutator
// series stops after the second term, leaving H_zc - gbar s (2 p_z - gbar s).
inline ZcCoefficients bch_transformed_zc(const CouplingParams& params, double time_s) {
  const double g = params.gbar;
  return {1.0, -g, -2.0 * g * time_s, g * g * time_s * time_s};
}

// ---------------------------------------------------------------------------
// Propagators.

// exp(-i [kin p^2/2 + pot z] time) by symmetric splitting
// (half kinetic, full potential, half kinetic). Returns a position-space packet.
inline WavePacket evolve_scalar(const WavePacket& packet, double kin, double pot, double time, int n_steps) {
  if (n_steps < 1) throw DomainError("split-step needs at least one step");
  const double dt = time / n_steps;
  auto kick = [kin](double tau) {
    return [kin, tau](double p) { return std::polar(1.0, -0.5 * kin * p * p * tau); };
  };
  WavePacket psi = in_momentum(packet).pointwise(kick(0.5 * dt));
  if (pot == 0.0) {
    return to_position(psi.pointwise(kick(time - 0.5 * dt)));
  }
  const auto drift = [pot, dt](double z) { return std::polar(1.0, -pot * z * dt); };
  for (int step = 1; step <= n_steps; ++step) {
    psi = to_momentum(to_position(psi).pointwise(drift));
    psi = psi.pointwise(kick(step == n_steps ? 0.5 * dt : dt));
  }
  return to_position(psi);
}

inline void require_unclipped(const WavePacket& packet, const char* what) {
  if (edge_weight(in_position(packet)) > kClipTolerance || edge_weight(in_momentum(packet)) > kClipTolerance) {
    throw GridError(std::string(what) + ": wave packet reached the grid edge");
  }
}

// Exact evolution along x (no gravity): diagonal in momentum and internal energy.
inline JointState evolve_exact_x(const JointState& state, const CouplingParams& params) {
  if (params.gbar != 0.0) throw DomainError("evolve_exact_x requires gravity disabled");
  if (state.grid().axis() != AxisKind::momentum) throw GridError("evolve_exact_x expects a momentum-space state");
  const double t = params.t;
  const double g0 = params.g0;
  WavePacket g = state.comp_g().pointwise([t](double p) { return std::polar(1.0, -0.5 * p * p * t); });
  WavePacket e = state.comp_e().pointwise([&](double p) {
    return std::polar(1.0, -params.omega_t - 0.5 * (1.0 - g0) * p * p * t);
  });
  return {std::move(g), std::move(e)};
}

struct SplitStepOptions {
  int n_steps = 1000;
  bool check_convergence = false;  // rerun with 2 n_steps and compare
  double convergence_tolerance = 1e-6;
};

// Each internal component under its own scalar Hamiltonian:
//   H_g = p^2/2 + gbar z,  H_e = omega + (1 - g0) p^2/2 + (1 + g0) gbar z.
// Output keeps the input representation.
inline JointState evolve_split_step_z(const JointState& state, const CouplingParams& params,
                                      const SplitStepOptions& options = {}) {
  auto run = [&](int n_steps) {
    WavePacket g = evolve_scalar(state.comp_g(), 1.0, params.gbar, params.t, n_steps);
    WavePacket e = evolve_scalar(state.comp_e(), 1.0 - params.g0, (1.0 + params.g0) * params.gbar, params.t, n_steps)
                       .scaled(std::polar(1.0, -params.omega_t));
    return JointState(std::move(g), std::move(e));
  };
  JointState out = run(options.n_steps);
  require_unclipped(out.comp_g(), "split-step");
  require_unclipped(out.comp_e(), "split-step");
  if (options.check_convergence) {
    const double change = l2_distance(out, run(2 * options.n_steps));
    if (change > options.convergence_tolerance) {
      throw NonConvergence("doubling n_steps changed the state by " + format_real(change));
    }
  }
  return state.grid().axis() == AxisKind::position ? out : in_momentum(out);
}

// L2 change of the final state when n_steps is doubled.
inline double split_step_richardson_change(const JointState& state, const CouplingParams& params, int n_steps) {
  const JointState coarse = evolve_split_step_z(state, params, {.n_steps = n_steps});
  const JointState fine = evolve_split_step_z(state, params, {.n_steps = 2 * n_steps});
  return l2_distance(coarse, fine);
}

// Grid evaluation of e^{i H0 s} H_zc e^{-i H0 s} |packet> using split-step
// propagation forward by s and back. Returns a position-space packet.
inline WavePacket bch_sandwich(const WavePacket& packet, double gbar, double time_s, int n_steps) {
  const WavePacket forward = evolve_scalar(packet, 1.0, gbar, time_s, n_steps);
  const WavePacket acted = apply_coefficients(hamiltonian_zc(gbar), forward);
  return evolve_scalar(acted, 1.0, gbar, -time_s, n_steps);
}

// ---------------------------------------------------------------------------
// First-order Dyson state.

struct ProductDecomposition {
  complex alpha;
  complex beta;
  WavePacket external;
};

inline constexpr double kProductTolerance = 1e-10;

// Splits a product |A_i> (x) |i> back into its factors; throws when the state is entangled.
inline ProductDecomposition factor_product(const JointState& state) {
  const WavePacket& ref = state.comp_g().norm2() >= state.comp_e().norm2() ? state.comp_g() : state.comp_e();
  const WavePacket external = ref.normalized();
  const complex alpha = inner_product(external, state.comp_g());
  const complex beta = inner_product(external, state.comp_e());
  const double residual = l2_distance(external.scaled(alpha), state.comp_g()) +
                          l2_distance(external.scaled(beta), state.comp_e());
  if (residual > kProductTolerance * std::sqrt(state.norm2())) {
    throw DomainError("dyson_first_order needs a product internal (x) external state");
  }
  return {alpha, beta, external};
}

// U0 [1 + i g0 t H_eff |e><e|] |psi_i>, H_eff = p^2/2 - G. The time integral of
// the interaction-picture coupling is done in closed form, which is where the
// -(gbar t)^2/3 inside G comes from. With gravity on, U0 is split-step propagated.
inline JointState dyson_first_order(const JointState& state, const CouplingParams& params, int n_steps = 1000) {
  const auto [alpha, beta, external] = factor_product(state);
  const EffectiveG g_op{params.gbar, params.t};
  if (!g_op.is_zero() && state.grid().axis() != AxisKind::position) {
    throw GridError("dyson_first_order with gravity expects a position-space state");
  }
  WavePacket h_eff = apply_kinetic(external);
  if (!g_op.is_zero()) h_eff = h_eff - g_op.apply(external);
  const WavePacket g_part = external.scaled(alpha);
  const WavePacket e_part = external.scaled(beta) + h_eff.scaled(1i * params.g0 * params.t * beta);

  const complex internal_phase = std::polar(1.0, -params.omega_t);
  if (g_op.is_zero()) {
    const double t = params.t;
    auto free = [t](const WavePacket& w) {
      return in_momentum(w).pointwise([t](double p) { return std::polar(1.0, -0.5 * p * p * t); });
    };
    JointState out(free(g_part), free(e_part).scaled(internal_phase));
    return state.grid().axis() == AxisKind::momentum ? out : in_position(out);
  }
  return {evolve_scalar(g_part, 1.0, params.gbar, params.t, n_steps),
          evolve_scalar(e_part, 1.0, params.gbar, params.t, n_steps).scaled(internal_phase)};
}

// ---------------------------------------------------------------------------
// Hamiltonian pieces as operators on joint states (x direction, no gravity).

// H0 = omega |e><e| + p^2/2, with omega given as an energy.
inline JointState apply_h0(const JointState& state, double omega) {
  return {apply_kinetic(state.comp_g()), apply_kinetic(state.comp_e()) + state.comp_e().scaled(omega)};
}

// H_rc = p^2/2 |e><e|.
inline JointState apply_h_rc(const JointState& state) {
  return {WavePacket::zero(state.grid()), apply_kinetic(state.comp_e())};
}

}  // namespace weakmass
