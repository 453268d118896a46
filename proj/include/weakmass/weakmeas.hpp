#pragma once

// Weak-measurement algebra for the internal qubit: weak values, internal-state
// post-selection, the first-order momentum-class probabilities and their
// closed-form all-orders counterpart.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>

#include "weakmass/errors.hpp"
#include "weakmass/hilbert.hpp"
#include "weakmass/kd.hpp"

namespace weakmass {

using Ket2 = std::array<complex, 2>;   // (|g>, |e>) components
using Bra2 = std::array<complex, 2>;   // row vector, already conjugated
using Matrix2 = std::array<std::array<complex, 2>, 2>;

inline complex contract(const Bra2& bra, const Ket2& ket) { return bra[0] * ket[0] + bra[1] * ket[1]; }

inline Ket2 apply(const Matrix2& m, const Ket2& ket) {
  return {m[0][0] * ket[0] + m[0][1] * ket[1], m[1][0] * ket[0] + m[1][1] * ket[1]};
}

// Generic two-level weak value <A_s|A|A_i> / <A_s|A_i>.
inline complex weak_value(const Bra2& selected, const Matrix2& observable, const Ket2& initial) {
  return contract(selected, apply(observable, initial)) / contract(selected, initial);
}

inline constexpr double kNearSingularProbability = 1e-10;

struct WeakValue {
  double re = 0.0;
  double im = 0.0;
  double p_s0 = 1.0;  // |<A_s|A'_i>|^2
  bool near_singular = false;

  complex value() const { return {re, im}; }
};

enum class Selected { g, e };

// Post-selection <s| R with R = exp[-i theta (|e><g| + |g><e|)].
struct PostSelection {
  double theta = 0.0;
  Selected selected = Selected::g;

  Bra2 bra() const {
    const double c = std::cos(theta);
    const complex ms = complex(0.0, -std::sin(theta));
    return selected == Selected::g ? Bra2{c, ms} : Bra2{ms, c};
  }
};

// |A'_i> = exp(-i omega t |e><e|) |A_i>.
inline Ket2 free_internal_state(const QubitState& initial, double omega_t) {
  return {initial.amp_g(), initial.amp_e() * std::polar(1.0, -omega_t)};
}

// A_w = <A_s|e><e|A'_i> / <A_s|A'_i> for an arbitrary selection.
inline WeakValue weak_value_for(const QubitState& initial, const PostSelection& sel, double omega_t) {
  const Bra2 bra = sel.bra();
  const Ket2 ket = free_internal_state(initial, omega_t);
  const complex numerator = bra[1] * ket[1];
  const complex denominator = contract(bra, ket);
  WeakValue w;
  w.p_s0 = std::norm(denominator);
  w.near_singular = w.p_s0 < kNearSingularProbability;
  if (denominator == complex(0.0, 0.0)) {
    w.re = std::numeric_limits<double>::infinity();
    w.im = std::numeric_limits<double>::infinity();
    w.p_s0 = 0.0;
    return w;
  }
  const complex aw = numerator / denominator;
  w.re = aw.real();
  w.im = aw.imag();
  return w;
}

// Selection <g|R; equals beta / (beta + i e^{i omega t} alpha cot theta).
inline WeakValue weak_value_from_rotation(const QubitState& initial, double omega_t, double theta) {
  return weak_value_for(initial, {theta, Selected::g}, omega_t);
}

// Prepared qubit, rotation angle and internal phase that realize a target weak
// value under the <g|R selection. Uses theta = pi/4, so alpha/beta and omega t
// follow from 1/A_w - 1 = i e^{i omega t} alpha / beta.
struct WeakValueRealization {
  QubitState initial;
  double theta;
  double omega_t;
};

inline WeakValueRealization realize_weak_value(complex target) {
  constexpr double theta = std::numbers::pi / 4.0;
  if (target == complex(0.0, 0.0)) return {QubitState::ground(), theta, 0.0};
  const complex z = 1.0 / target - 1.0;
  const double r = std::abs(z);
  if (r == 0.0) return {QubitState::excited(), theta, 0.0};
  const double beta = 1.0 / std::sqrt(1.0 + r * r);
  return {QubitState(r * beta, beta), theta, std::arg(z) - std::numbers::pi / 2.0};
}

// Amplification configuration alpha = beta = 1/sqrt2, theta = 3 pi/4: with
// omega t = 3 pi/2 + delta the weak value is 1/2 + i cot(delta/2)/2 and
// p_s0 = sin^2(delta/2). Returns omega t for a target imaginary part.
inline double omega_t_for_imaginary_weak_value(double target_im) {
  const double delta = 2.0 * std::atan(1.0 / (2.0 * target_im));
  return 1.5 * std::numbers::pi + delta;
}

inline QubitState amplification_qubit() { return {1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2}; }
inline constexpr double kAmplificationTheta = 0.75 * std::numbers::pi;

// Generic search for omega t in [0, 2 pi) with Im A_w = target for a fixed
// prepared qubit and rotation angle. Picks the root with the largest p_s0.
inline std::optional<double> solve_omega_t_for_imaginary_weak_value(const QubitState& initial, double theta,
                                                                    double target) {
  constexpr int kScan = 8192;
  const double two_pi = 2.0 * std::numbers::pi;
  auto residual = [&](double wt) {
    const WeakValue w = weak_value_from_rotation(initial, wt, theta);
    return w.near_singular ? std::numeric_limits<double>::quiet_NaN() : w.im - target;
  };
  std::optional<double> best;
  double best_ps = -1.0;
  double prev_x = 0.0;
  double prev_f = residual(prev_x);
  for (int i = 1; i <= kScan; ++i) {
    const double x = two_pi * i / kScan;
    const double f = residual(x);
    if (std::isfinite(prev_f) && std::isfinite(f) && (prev_f <= 0.0) != (f <= 0.0)) {
      double lo = prev_x, hi = x, flo = prev_f;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = residual(mid);
        if (!std::isfinite(fm)) break;
        if ((fm <= 0.0) == (flo <= 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      const WeakValue w = weak_value_from_rotation(initial, root, theta);
      // Sign flips across a pole show up as a large residual at the bracket.
      if (std::abs(w.im - target) <= 1e-6 * std::max(1.0, std::abs(target)) && w.p_s0 > best_ps) {
        best = root;
        best_ps = w.p_s0;
      }
    }
    prev_x = x;
    prev_f = f;
  }
  return best;
}

// <M> ~ m_i + 2 g Im(A_w M_B) for a weak coupling g A B followed by post-selection.
inline double generic_weak_expectation(complex a_w, double g, double m_i, complex m_b) {
  return m_i + 2.0 * g * std::imag(a_w * m_b);
}

// The linear approximation needs |g A_w| << 1; 0.1 is the cut used here.
inline bool weak_regime_valid(complex a_w, double g) { return std::abs(g * a_w) < 0.1; }

// External state conditioned on the internal outcome: <A_s|psi>, unnormalized.
inline WavePacket postselect(const JointState& state, const PostSelection& sel) {
  const Bra2 bra = sel.bra();
  return state.comp_g().scaled(bra[0]) + state.comp_e().scaled(bra[1]);
}

// P_s = p_s0 [1 - g0 omega_k t A_w^i (vartheta + yz/4)], yz in units of (hbar k)^2.
inline double p_s_first_order(const WeakValue& a_w, double g0, double omega_k, double t, double vartheta,
                              double yz_term = 0.0) {
  return a_w.p_s0 * (1.0 - g0 * omega_k * t * a_w.im * (vartheta + 0.25 * yz_term));
}

struct MomentumClassDistribution {
  std::map<int, double> probs;
  double p_s = 0.0;
  double p_s0 = 0.0;
  bool breakdown = false;            // some P_n < 0
  bool outside_validity = false;     // g0 omega_k t n_max^2 |A_w^i| >= 1

  double prob(int n) const {
    auto it = probs.find(n);
    return it == probs.end() ? 0.0 : it->second;
  }
  double sum() const {
    // Smallest-first keeps the sum reproducible and tight.
    double total = 0.0;
    const int n_max = probs.empty() ? 0 : std::max(-probs.begin()->first, probs.rbegin()->first);
    for (int n = n_max; n >= 1; --n) total += prob(n) + prob(-n);
    return total + prob(0);
  }
};

// P_n = p_s0 J_n^2 [1 - g0 omega_k t A_w^i (n^2 + yz/4)].
inline MomentumClassDistribution p_n_first_order(const WeakValue& a_w, double g0, double omega_k, double t,
                                                 const KDSpectrum& spectrum, double yz_term = 0.0) {
  MomentumClassDistribution dist;
  dist.p_s0 = a_w.p_s0;
  const double c = g0 * omega_k * t * a_w.im;
  const int n_max = spectrum.n_max();
  double vartheta = 0.0;
  for (int n = -n_max; n <= n_max; ++n) {
    const double pn = a_w.p_s0 * spectrum.weight(n) * (1.0 - c * (static_cast<double>(n) * n + 0.25 * yz_term));
    dist.probs[n] = pn;
    if (pn < 0.0) dist.breakdown = true;
  }
  for (int n = n_max; n >= 1; --n) vartheta += static_cast<double>(n) * n * (spectrum.weight(n) + spectrum.weight(-n));
  dist.p_s = p_s_first_order(a_w, g0, omega_k, t, vartheta, yz_term);
  dist.outside_validity = std::abs(c) * n_max * n_max >= 1.0;
  return dist;
}

// Reshaping of the x-direction state: phases with t_r = t(1 - g0 A_w^r), Gaussian
// damping with t_i = g0 t A_w^i.
inline WavePacket reshaped_x_state(const WavePacket& packet, const WeakValue& a_w, double g0, double t) {
  if (packet.grid().axis() != AxisKind::momentum) throw GridError("reshaped_x_state expects a momentum-space packet");
  const double t_r = t * (1.0 - g0 * a_w.re);
  const double t_i = g0 * t * a_w.im;
  return packet.pointwise([=](double p) {
    const double k = 0.5 * p * p;
    return std::exp(-t_i * k) * std::polar(1.0, -t_r * k);
  });
}

// All-orders class probabilities when the classes are orthonormal. Class n has
// kinetic phases n^2 omega_k t/2 on |g> and omega t + (1 - g0) n^2 omega_k t/2 on
// |e>; the common part is factored out and the g0 part evaluated as
// e^{i phi} - 1 = -2 sin^2(phi/2) + i sin(phi) so tiny g0 keeps full precision.
inline MomentumClassDistribution exact_class_oracle(const QubitState& initial, const PostSelection& sel, double g0,
                                                    double omega_t, double omega_k, double t,
                                                    const KDSpectrum& spectrum) {
  const Bra2 bra = sel.bra();
  const Ket2 ket = free_internal_state(initial, omega_t);
  const complex base = contract(bra, ket);
  const complex excited = bra[1] * ket[1];
  MomentumClassDistribution dist;
  dist.p_s0 = std::norm(base);
  const int n_max = spectrum.n_max();
  for (int n = -n_max; n <= n_max; ++n) {
    const double phi = 0.5 * g0 * static_cast<double>(n) * n * omega_k * t;
    const double half = std::sin(0.5 * phi);
    const complex shift(-2.0 * half * half, std::sin(phi));
    dist.probs[n] = spectrum.weight(n) * std::norm(base + excited * shift);
  }
  dist.p_s = dist.sum();
  return dist;
}

// <p_y^2> + <p_z^2> - 2<G> for Gaussian transverse states (hbar = m = k = 1),
// G = gbar z + gbar t p_z - (gbar t)^2/3.
inline double yz_term_gaussian(double sigma_py, double sigma_pz, double py0, double pz0, double z0, double gbar,
                               double t) {
  const double py2 = sigma_py * sigma_py + py0 * py0;
  const double pz2 = sigma_pz * sigma_pz + pz0 * pz0;
  const double g_mean = gbar * z0 + gbar * t * pz0 - gbar * gbar * t * t / 3.0;
  return py2 + pz2 - 2.0 * g_mean;
}

}  // namespace weakmass
